#pragma once

#include <cstring>
#include <fstream>
#include <functional>

#include "sharerec/common.hpp"
#include "sharerec/rng.hpp"

namespace sharerec {

struct AdamParams {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 1e-4;  // coupled as grad += l2 * param before the moment update
};

struct Gradients {
  Matrix user;      // dL/dP0
  Matrix item;      // dL/dQ0
  Matrix enc_item;  // dL/dQe; empty unless the encoder has its own table

  void add_scaled(const Gradients& other, double alpha) {
    user.add_scaled(other.user, alpha);
    item.add_scaled(other.item, alpha);
    if (!enc_item.empty()) enc_item.add_scaled(other.enc_item, alpha);
  }
};

/// Base embedding tables plus Adam moments. The optional encoder item table is
/// used only when the rewiring encoder is configured to train separately from
/// the backbone item embeddings.
struct EmbeddingState {
  Matrix user_base;      // P0, m x d
  Matrix item_base;      // Q0, n x d
  Matrix enc_item_base;  // Qe, n x d or empty (encoder shares Q0)
  Matrix m_user, v_user, m_item, v_item, m_enc, v_enc;
  std::int64_t step = 0;
  AdamParams opt;

  Index dim() const { return user_base.cols(); }
  bool has_encoder_table() const { return !enc_item_base.empty(); }

  Gradients zero_gradients() const {
    Gradients g;
    g.user = Matrix(user_base.rows(), user_base.cols());
    g.item = Matrix(item_base.rows(), item_base.cols());
    if (has_encoder_table()) g.enc_item = Matrix(enc_item_base.rows(), enc_item_base.cols());
    return g;
  }

  /// Item table the similarity encoder reads: the dedicated one if present,
  /// otherwise the shared backbone table.
  const Matrix& encoder_items() const { return has_encoder_table() ? enc_item_base : item_base; }

  bool all_finite() const {
    return user_base.all_finite() && item_base.all_finite() &&
           (!has_encoder_table() || enc_item_base.all_finite());
  }
};

/// Entries uniform in [-1/sqrt(d), 1/sqrt(d)], deterministic under the seed.
inline EmbeddingState init_embeddings(Index m, Index n, Index d, std::uint64_t seed, AdamParams opt = {},
                                      bool separate_encoder_table = false) {
  if (m <= 0 || n <= 0 || d <= 0) throw std::invalid_argument("init_embeddings: dimensions must be positive");
  EmbeddingState s;
  s.opt = opt;
  Rng rng = make_stream(seed, "init");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  auto fill_uniform = [&](Matrix& mat, Index rows) {
    mat = Matrix(rows, d);
    for (size_t i = 0; i < mat.size(); ++i) mat.data()[i] = rng.uniform(-scale, scale);
  };
  fill_uniform(s.user_base, m);
  fill_uniform(s.item_base, n);
  s.m_user = Matrix(m, d);
  s.v_user = Matrix(m, d);
  s.m_item = Matrix(n, d);
  s.v_item = Matrix(n, d);
  if (separate_encoder_table) {
    fill_uniform(s.enc_item_base, n);
    s.m_enc = Matrix(n, d);
    s.v_enc = Matrix(n, d);
  }
  return s;
}

namespace detail {

inline void adam_update(Matrix& param, Matrix& m, Matrix& v, const Matrix& grad, const AdamParams& opt,
                        std::int64_t step) {
  param.check_same_shape(grad, "adam_step");
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(step));
  for (size_t i = 0; i < param.size(); ++i) {
    const double g = grad.data()[i] + opt.l2 * param.data()[i];
    m.data()[i] = opt.beta1 * m.data()[i] + (1.0 - opt.beta1) * g;
    v.data()[i] = opt.beta2 * v.data()[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = m.data()[i] / bc1;
    const double v_hat = v.data()[i] / bc2;
    param.data()[i] -= opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
}

}  // namespace detail

/// One bias-corrected Adam step on every table, with coupled L2 on the raw
/// gradients.
inline void adam_step(EmbeddingState& s, const Gradients& g) {
  s.step += 1;
  detail::adam_update(s.user_base, s.m_user, s.v_user, g.user, s.opt, s.step);
  detail::adam_update(s.item_base, s.m_item, s.v_item, g.item, s.opt, s.step);
  if (s.has_encoder_table()) {
    if (g.enc_item.empty()) throw std::invalid_argument("adam_step: missing encoder-table gradient");
    detail::adam_update(s.enc_item_base, s.m_enc, s.v_enc, g.enc_item, s.opt, s.step);
  }
}

// --- checkpoint io ----------------------------------------------------------
//
// Flat little-endian binary: magic, shape header, then row-major doubles for
// each table and its moments. Round-trips bit-exactly.

namespace detail {

constexpr char kCheckpointMagic[8] = {'S', 'H', 'R', 'C', 'K', 'P', 'T', '1'};

inline void write_matrix(std::ofstream& out, const Matrix& m) {
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

inline Matrix read_matrix(std::ifstream& in, Index rows, Index cols) {
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  return m;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const EmbeddingState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
  const std::int64_t header[5] = {s.user_base.rows(), s.item_base.rows(), s.dim(),
                                  s.has_encoder_table() ? 1 : 0, s.step};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  const double opt[5] = {s.opt.learning_rate, s.opt.beta1, s.opt.beta2, s.opt.epsilon, s.opt.l2};
  out.write(reinterpret_cast<const char*>(opt), sizeof(opt));
  detail::write_matrix(out, s.user_base);
  detail::write_matrix(out, s.item_base);
  detail::write_matrix(out, s.m_user);
  detail::write_matrix(out, s.v_user);
  detail::write_matrix(out, s.m_item);
  detail::write_matrix(out, s.v_item);
  if (s.has_encoder_table()) {
    detail::write_matrix(out, s.enc_item_base);
    detail::write_matrix(out, s.m_enc);
    detail::write_matrix(out, s.v_enc);
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline EmbeddingState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::int64_t header[5];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  double opt[5];
  in.read(reinterpret_cast<char*>(opt), sizeof(opt));
  const auto m = static_cast<Index>(header[0]);
  const auto n = static_cast<Index>(header[1]);
  const auto d = static_cast<Index>(header[2]);
  const bool enc = header[3] != 0;
  EmbeddingState s;
  s.step = header[4];
  s.opt = {opt[0], opt[1], opt[2], opt[3], opt[4]};
  s.user_base = detail::read_matrix(in, m, d);
  s.item_base = detail::read_matrix(in, n, d);
  s.m_user = detail::read_matrix(in, m, d);
  s.v_user = detail::read_matrix(in, m, d);
  s.m_item = detail::read_matrix(in, n, d);
  s.v_item = detail::read_matrix(in, n, d);
  if (enc) {
    s.enc_item_base = detail::read_matrix(in, n, d);
    s.m_enc = detail::read_matrix(in, n, d);
    s.v_enc = detail::read_matrix(in, n, d);
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return s;
}

// --- finite differences ------------------------------------------------------

using LossFn = std::function<double(const EmbeddingState&)>;

/// Central-difference probe of an analytic gradient on randomly chosen
/// coordinates. Returns the maximum relative error
/// |g_fd - g_an| / max(1e-12, |g_fd| + |g_an|) over the probes.
inline double finite_diff_check(const EmbeddingState& state, const LossFn& loss, const Gradients& analytic,
                                int probe_count, double h, std::uint64_t seed = 12345) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be positive");
  Rng rng = make_stream(seed, "fdprobe");

  struct Slot {
    Matrix EmbeddingState::* table;
    const Matrix* grad;
  };
  std::vector<Slot> slots = {{&EmbeddingState::user_base, &analytic.user},
                             {&EmbeddingState::item_base, &analytic.item}};
  if (state.has_encoder_table()) slots.push_back({&EmbeddingState::enc_item_base, &analytic.enc_item});

  size_t total = 0;
  for (const auto& slot : slots) total += (state.*(slot.table)).size();

  double max_err = 0.0;
  for (int p = 0; p < probe_count; ++p) {
    size_t flat = static_cast<size_t>(rng.uniform_index(total));
    for (const auto& slot : slots) {
      const size_t len = (state.*(slot.table)).size();
      if (flat >= len) {
        flat -= len;
        continue;
      }
      EmbeddingState probe = state;
      double& coord = (probe.*(slot.table)).data()[flat];
      const double original = coord;
      coord = original + h;
      const double up = loss(probe);
      coord = original - h;
      const double down = loss(probe);
      const double g_fd = (up - down) / (2.0 * h);
      const double g_an = slot.grad->data()[flat];
      const double err = std::abs(g_fd - g_an) / std::max(1e-12, std::abs(g_fd) + std::abs(g_an));
      max_err = std::max(max_err, err);
      break;
    }
  }
  return max_err;
}

}  // namespace sharerec
