#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sharerec {

using Index = std::int32_t;

/// Dense row-major matrix of doubles. Value semantics throughout; all
/// embedding tables, gradients and propagation buffers use this type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(Index rows, Index cols)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  double& operator()(Index r, Index c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(Index r, Index c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

  std::span<double> row(Index r) { return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
  std::span<const double> row(Index r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { data_.assign(data_.size(), v); }

  void add_scaled(const Matrix& other, double alpha) {
    check_same_shape(other, "Matrix::add_scaled");
    for (size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
  }

  void scale(double alpha) {
    for (double& v : data_) v *= alpha;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

  void check_same_shape(const Matrix& other, const char* where) const {
    if (!same_shape(other))
      throw std::invalid_argument(std::string(where) + ": shape mismatch (" + std::to_string(rows_) + "x" +
                                  std::to_string(cols_) + " vs " + std::to_string(other.rows_) + "x" +
                                  std::to_string(other.cols_) + ")");
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// -log(sigmoid(x)) evaluated without overflow for large negative x.
inline double log1p_exp_neg(double x) {
  if (x > 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

/// Shortest decimal form that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (std::strtod(shorter, nullptr) == v) return shorter;
    }
  }
  return buf;
}

}  // namespace sharerec
