#pragma once

#include <algorithm>
#include <tuple>
#include <vector>

#include "sharerec/common.hpp"

namespace sharerec {

/// Compressed sparse row matrix. Rows with no entries are legal and act as
/// zero rows under every operation here.
struct Csr {
  Index rows = 0;
  Index cols = 0;
  std::vector<Index> ptr;  // size rows+1
  std::vector<Index> idx;
  std::vector<double> val;

  static Csr from_triplets(Index rows, Index cols, std::vector<std::tuple<Index, Index, double>> entries) {
    std::sort(entries.begin(), entries.end());
    Csr out;
    out.rows = rows;
    out.cols = cols;
    out.ptr.assign(static_cast<size_t>(rows) + 1, 0);
    out.idx.reserve(entries.size());
    out.val.reserve(entries.size());
    for (const auto& [r, c, v] : entries) {
      out.ptr[static_cast<size_t>(r) + 1]++;
      out.idx.push_back(c);
      out.val.push_back(v);
    }
    for (size_t r = 0; r < static_cast<size_t>(rows); ++r) out.ptr[r + 1] += out.ptr[r];
    return out;
  }

  Index nnz() const { return static_cast<Index>(idx.size()); }

  double row_sum(Index r) const {
    double s = 0.0;
    for (Index k = ptr[static_cast<size_t>(r)]; k < ptr[static_cast<size_t>(r) + 1]; ++k)
      s += val[static_cast<size_t>(k)];
    return s;
  }
};

inline Csr transpose(const Csr& a) {
  std::vector<std::tuple<Index, Index, double>> entries;
  entries.reserve(a.idx.size());
  for (Index r = 0; r < a.rows; ++r)
    for (Index k = a.ptr[static_cast<size_t>(r)]; k < a.ptr[static_cast<size_t>(r) + 1]; ++k)
      entries.emplace_back(a.idx[static_cast<size_t>(k)], r, a.val[static_cast<size_t>(k)]);
  return Csr::from_triplets(a.cols, a.rows, std::move(entries));
}

/// Each row divided by its sum; all-zero rows stay all-zero.
inline Csr row_normalized(const Csr& a) {
  Csr out = a;
  for (Index r = 0; r < a.rows; ++r) {
    const double s = a.row_sum(r);
    if (s == 0.0) continue;
    for (Index k = a.ptr[static_cast<size_t>(r)]; k < a.ptr[static_cast<size_t>(r) + 1]; ++k)
      out.val[static_cast<size_t>(k)] /= s;
  }
  return out;
}

/// out = a * x (dense result).
inline void spmm(const Csr& a, const Matrix& x, Matrix& out) {
  if (x.rows() != a.cols) throw std::invalid_argument("spmm: inner dimension mismatch");
  if (out.rows() != a.rows || out.cols() != x.cols()) out = Matrix(a.rows, x.cols());
  const Index d = x.cols();
  for (Index r = 0; r < a.rows; ++r) {
    auto out_row = out.row(r);
    std::fill(out_row.begin(), out_row.end(), 0.0);
    for (Index k = a.ptr[static_cast<size_t>(r)]; k < a.ptr[static_cast<size_t>(r) + 1]; ++k) {
      const double w = a.val[static_cast<size_t>(k)];
      const auto x_row = x.row(a.idx[static_cast<size_t>(k)]);
      for (Index c = 0; c < d; ++c) out_row[static_cast<size_t>(c)] += w * x_row[static_cast<size_t>(c)];
    }
  }
}

inline Matrix spmm(const Csr& a, const Matrix& x) {
  Matrix out(a.rows, x.cols());
  spmm(a, x, out);
  return out;
}

}  // namespace sharerec
