#pragma once

#include <vector>

#include "sharerec/common.hpp"
#include "sharerec/graph.hpp"
#include "sharerec/sparse.hpp"

namespace sharerec {

/// Pure bipartite propagation with symmetric 1/sqrt(|N_u||N_v|) normalization,
/// starting from item embeddings. No trainable transforms; the map from item
/// embeddings to user codes is linear, so the adjoint needs no stored
/// activations. A user with no training interactions encodes to the zero
/// vector.
class UserEncoder {
 public:
  UserEncoder() = default;

  UserEncoder(const InteractionGraph& r, int layers) : layers_(layers) {
    if (layers < 1) throw std::invalid_argument("UserEncoder: layers must be >= 1");
    const Csr train = r.to_csr(Split::train);
    std::vector<double> user_deg(static_cast<size_t>(train.rows));
    for (Index u = 0; u < train.rows; ++u)
      user_deg[static_cast<size_t>(u)] =
          static_cast<double>(train.ptr[static_cast<size_t>(u) + 1] - train.ptr[static_cast<size_t>(u)]);
    const Csr train_t = transpose(train);
    std::vector<double> item_deg(static_cast<size_t>(train_t.rows));
    for (Index v = 0; v < train_t.rows; ++v)
      item_deg[static_cast<size_t>(v)] =
          static_cast<double>(train_t.ptr[static_cast<size_t>(v) + 1] - train_t.ptr[static_cast<size_t>(v)]);

    item_to_user_ = train;
    for (Index u = 0; u < train.rows; ++u)
      for (Index k = train.ptr[static_cast<size_t>(u)]; k < train.ptr[static_cast<size_t>(u) + 1]; ++k) {
        const Index v = train.idx[static_cast<size_t>(k)];
        item_to_user_.val[static_cast<size_t>(k)] =
            1.0 / std::sqrt(user_deg[static_cast<size_t>(u)] * item_deg[static_cast<size_t>(v)]);
      }
    user_to_item_ = transpose(item_to_user_);
  }

  int layers() const { return layers_; }

  /// Z: one item->user hop, with a full user->item->user round trip per
  /// additional layer. Output is the final layer.
  Matrix encode(const Matrix& item_base) const {
    Matrix z = spmm(item_to_user_, item_base);
    for (int l = 2; l <= layers_; ++l) {
      const Matrix q = spmm(user_to_item_, z);
      z = spmm(item_to_user_, q);
    }
    return z;
  }

  /// Pulls dL/dZ back to dL/d(item_base).
  Matrix backward(const Matrix& grad_z) const {
    Matrix gz = grad_z;
    for (int l = layers_; l >= 2; --l) {
      const Matrix gq = spmm(user_to_item_, gz);
      gz = spmm(item_to_user_, gq);
    }
    return spmm(user_to_item_, gz);
  }

  const Csr& item_to_user() const { return item_to_user_; }

 private:
  Csr item_to_user_;  // m x n, symmetric-normalized
  Csr user_to_item_;  // exact transpose
  int layers_ = 2;
};

/// Cosine similarity accessor over user code rows, with the zero-norm
/// convention c = 0 (cold users are never similar to anyone, matching the
/// h = 0 convention for users absent from training).
class CosineSim {
 public:
  explicit CosineSim(const Matrix& z) : z_(&z), norms_(static_cast<size_t>(z.rows())) {
    for (Index u = 0; u < z.rows(); ++u) norms_[static_cast<size_t>(u)] = norm2(z.row(u));
  }

  double operator()(Index i, Index j) const {
    const double ni = norms_[static_cast<size_t>(i)];
    const double nj = norms_[static_cast<size_t>(j)];
    if (ni == 0.0 || nj == 0.0) return 0.0;
    return dot(z_->row(i), z_->row(j)) / (ni * nj);
  }

  Index size() const { return z_->rows(); }
  double norm(Index i) const { return norms_[static_cast<size_t>(i)]; }

 private:
  const Matrix* z_;
  std::vector<double> norms_;
};

}  // namespace sharerec
