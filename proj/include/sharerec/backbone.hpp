#pragma once

#include <string>
#include <vector>

#include "sharerec/common.hpp"
#include "sharerec/embedding.hpp"
#include "sharerec/graph.hpp"
#include "sharerec/rng.hpp"
#include "sharerec/sparse.hpp"

namespace sharerec {

enum class BackboneKind {
  generic,          // row-normalized interaction and social terms
  lightgcn_social,  // symmetric-normalized interaction terms, social term unchanged
};

inline BackboneKind backbone_from_string(const std::string& name) {
  if (name == "generic" || name == "generic-eq3") return BackboneKind::generic;
  if (name == "lightgcn-social" || name == "lightgcn_social") return BackboneKind::lightgcn_social;
  throw std::invalid_argument("unknown backbone: " + name);
}

struct PropagatedEmbeddings {
  Matrix users;  // P, m x d
  Matrix items;  // Q, n x d
  int layers = 0;
};

/// The linear propagation operator
///   P(l+1) = Ar Q(l) + As P(l)
///   Q(l+1) = At P(l)
/// read off as the mean over layers 0..L. The map is linear in (P0, Q0), so
/// the adjoint runs the recurrence backwards with transposed matrices and
/// needs no stored activations. Rebuilt whenever the social graph changes.
class Propagation {
 public:
  Propagation() = default;

  Propagation(const SocialGraph& social, const InteractionGraph& r, BackboneKind kind, int layers)
      : layers_(layers) {
    if (layers < 1) throw std::invalid_argument("Propagation: layers must be >= 1");
    const Csr train = r.to_csr(Split::train);
    as_ = row_normalized(social.to_csr());
    if (kind == BackboneKind::generic) {
      ar_ = row_normalized(train);
      at_ = row_normalized(transpose(train));
    } else {
      ar_ = symmetric_normalized(train);
      at_ = transpose(ar_);
    }
    ar_t_ = transpose(ar_);
    as_t_ = transpose(as_);
    at_t_ = transpose(at_);
  }

  int layers() const { return layers_; }

  PropagatedEmbeddings forward(const Matrix& p0, const Matrix& q0) const {
    Matrix p = p0, q = q0;
    Matrix p_acc = p0, q_acc = q0;
    Matrix p_next, q_next;
    for (int l = 0; l < layers_; ++l) {
      spmm(ar_, q, p_next);
      Matrix social_term = spmm(as_, p);
      p_next.add_scaled(social_term, 1.0);
      spmm(at_, p, q_next);
      p = p_next;
      q = q_next;
      p_acc.add_scaled(p, 1.0);
      q_acc.add_scaled(q, 1.0);
    }
    const double inv = 1.0 / (layers_ + 1);
    p_acc.scale(inv);
    q_acc.scale(inv);
    return {std::move(p_acc), std::move(q_acc), layers_};
  }

  /// Adjoint of forward: pulls (dL/dP, dL/dQ) back to (dL/dP0, dL/dQ0).
  void backward(const Matrix& grad_p, const Matrix& grad_q, Matrix& grad_p0, Matrix& grad_q0) const {
    const double inv = 1.0 / (layers_ + 1);
    Matrix direct_p = grad_p;
    direct_p.scale(inv);
    Matrix direct_q = grad_q;
    direct_q.scale(inv);

    Matrix acc_p = direct_p, acc_q = direct_q;
    for (int l = layers_; l >= 1; --l) {
      Matrix prev_p = direct_p;
      prev_p.add_scaled(spmm(as_t_, acc_p), 1.0);
      prev_p.add_scaled(spmm(at_t_, acc_q), 1.0);
      Matrix prev_q = direct_q;
      prev_q.add_scaled(spmm(ar_t_, acc_p), 1.0);
      acc_p = std::move(prev_p);
      acc_q = std::move(prev_q);
    }
    grad_p0 = std::move(acc_p);
    grad_q0 = std::move(acc_q);
  }

 private:
  static Csr symmetric_normalized(const Csr& train) {
    const Csr train_t = transpose(train);
    Csr out = train;
    for (Index u = 0; u < train.rows; ++u) {
      const double du =
          static_cast<double>(train.ptr[static_cast<size_t>(u) + 1] - train.ptr[static_cast<size_t>(u)]);
      for (Index k = train.ptr[static_cast<size_t>(u)]; k < train.ptr[static_cast<size_t>(u) + 1]; ++k) {
        const Index v = train.idx[static_cast<size_t>(k)];
        const double dv =
            static_cast<double>(train_t.ptr[static_cast<size_t>(v) + 1] - train_t.ptr[static_cast<size_t>(v)]);
        out.val[static_cast<size_t>(k)] = 1.0 / std::sqrt(du * dv);
      }
    }
    return out;
  }

  Csr ar_, as_, at_;        // interaction, social, transposed-interaction views
  Csr ar_t_, as_t_, at_t_;  // their transposes, for the adjoint
  int layers_ = 2;
};

inline double score(const Matrix& p, const Matrix& q, Index u, Index v) { return dot(p.row(u), q.row(v)); }

struct BprTriple {
  Index user = 0;
  Index pos = 0;
  Index neg = 0;
};

/// Pairwise ranking loss, summed over the batch:
///   sum -log sigmoid(score(u, pos) - score(u, neg)).
/// Gradients are accumulated into dense dL/dP, dL/dQ buffers (output-side;
/// pull them through Propagation::backward to reach the base tables).
inline double bpr_loss(const std::vector<BprTriple>& batch, const Matrix& p, const Matrix& q, Matrix* grad_p,
                       Matrix* grad_q) {
  double loss = 0.0;
  for (const auto& t : batch) {
    const auto pu = p.row(t.user);
    const auto qv = q.row(t.pos);
    const auto qw = q.row(t.neg);
    const double margin = dot(pu, qv) - dot(pu, qw);
    loss += log1p_exp_neg(margin);
    if (!grad_p) continue;
    const double coeff = sigmoid(margin) - 1.0;  // d(-log sigmoid(m))/dm
    auto gp = grad_p->row(t.user);
    auto gv = grad_q->row(t.pos);
    auto gw = grad_q->row(t.neg);
    for (size_t k = 0; k < gp.size(); ++k) {
      gp[k] += coeff * (qv[k] - qw[k]);
      gv[k] += coeff * pu[k];
      gw[k] -= coeff * pu[k];
    }
  }
  return loss;
}

/// Uniform draw over the items a user never interacted with in training.
inline Index sample_negative(Index user, const InteractionGraph& r, Rng& rng) {
  const auto& owned = r.train_items(user);
  const Index n = r.num_items();
  if (static_cast<Index>(owned.size()) >= n)
    throw std::runtime_error("sample_negative: user " + std::to_string(user) + " interacted with every item");
  for (;;) {
    const auto candidate = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    if (!std::binary_search(owned.begin(), owned.end(), candidate)) return candidate;
  }
}

inline std::vector<Index> sample_negatives(const std::vector<Index>& users, const InteractionGraph& r, Rng& rng) {
  std::vector<Index> out;
  out.reserve(users.size());
  for (Index u : users) out.push_back(sample_negative(u, r, rng));
  return out;
}

}  // namespace sharerec
