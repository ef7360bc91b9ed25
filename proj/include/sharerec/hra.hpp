#pragma once

#include <algorithm>
#include <vector>

#include "sharerec/common.hpp"
#include "sharerec/homophily.hpp"

namespace sharerec {

/// Per-user positive sample sets: original-graph neighbors whose edge
/// homophily exceeds the threshold. zeta in [0,1] slides the threshold across
/// the observed homophily range, so zeta = 0 admits everything above the
/// minimum and zeta = 1 admits nothing.
struct PositiveSampleSets {
  std::vector<std::vector<Index>> positives;  // sorted per user
  double epsilon = 0.0;
  double zeta = 0.0;

  Index anchors_with_positives() const {
    Index n = 0;
    for (const auto& p : positives)
      if (!p.empty()) ++n;
    return n;
  }
};

inline PositiveSampleSets select_positives(const HomophilyTable& table, const SocialGraph& original,
                                           double zeta) {
  if (zeta < 0.0 || zeta > 1.0) throw std::invalid_argument("select_positives: zeta out of [0,1]");
  PositiveSampleSets out;
  out.zeta = zeta;
  out.epsilon = table.h_min + zeta * (table.h_max - table.h_min);
  out.positives.assign(static_cast<size_t>(original.num_users()), {});
  for (const auto& e : table.edges) {
    if (e.h > out.epsilon) {
      out.positives[static_cast<size_t>(e.i)].push_back(e.j);
      out.positives[static_cast<size_t>(e.j)].push_back(e.i);
    }
  }
  for (auto& p : out.positives) std::sort(p.begin(), p.end());
  return out;
}

struct InfoNceResult {
  double loss = 0.0;
  Matrix grad_z;  // dL/dZ; empty when gradients were not requested
};

namespace detail {

struct CosineGrad {
  double phi = 0.0;
  bool defined = false;  // false when either norm is zero
};

inline CosineGrad cosine_value(const Matrix& z, const std::vector<double>& norms, Index a, Index b) {
  const double na = norms[static_cast<size_t>(a)];
  const double nb = norms[static_cast<size_t>(b)];
  if (na == 0.0 || nb == 0.0) return {0.0, false};
  return {dot(z.row(a), z.row(b)) / (na * nb), true};
}

/// Accumulates coeff * d(phi(a,b))/dz into the gradient rows of a and b.
inline void accumulate_cosine_grad(const Matrix& z, const std::vector<double>& norms, Index a, Index b,
                                   double phi, double coeff, Matrix& grad) {
  const double na = norms[static_cast<size_t>(a)];
  const double nb = norms[static_cast<size_t>(b)];
  const auto za = z.row(a);
  const auto zb = z.row(b);
  auto ga = grad.row(a);
  auto gb = grad.row(b);
  const double inv = 1.0 / (na * nb);
  for (size_t k = 0; k < za.size(); ++k) {
    ga[k] += coeff * (zb[k] * inv - phi * za[k] / (na * na));
    gb[k] += coeff * (za[k] * inv - phi * zb[k] / (nb * nb));
  }
}

}  // namespace detail

/// Contrastive loss over user codes. For each anchor u with a non-empty
/// positive set:
///   -log( sum_pos Phi / (sum_pos Phi + sum_neg Phi) ),
/// Phi(a,b) = exp(cos(z_a, z_b) / tau). Negatives for u are the members of
/// negative_pool other than u and its positives. Anchors without positives
/// contribute zero. Exponents are max-shifted per anchor, which cancels in
/// every ratio.
inline InfoNceResult infonce_loss(const Matrix& z, const PositiveSampleSets& pos,
                                  const std::vector<Index>& anchors, const std::vector<Index>& negative_pool,
                                  double tau, bool with_grad = true) {
  if (tau <= 0.0) throw std::invalid_argument("infonce_loss: tau must be positive");
  InfoNceResult out;
  if (with_grad) out.grad_z = Matrix(z.rows(), z.cols());

  std::vector<double> norms(static_cast<size_t>(z.rows()));
  for (Index u = 0; u < z.rows(); ++u) norms[static_cast<size_t>(u)] = norm2(z.row(u));

  std::vector<bool> is_positive(static_cast<size_t>(z.rows()), false);

  struct Term {
    Index other;
    double phi;
    double s;  // phi / tau, before shifting
    bool defined;
    bool positive;
  };
  std::vector<Term> terms;

  for (Index u : anchors) {
    const auto& pset = pos.positives[static_cast<size_t>(u)];
    if (pset.empty()) continue;
    for (Index p : pset) is_positive[static_cast<size_t>(p)] = true;

    terms.clear();
    double s_max = -1.0 / tau;  // phi >= -1 always
    auto push = [&](Index other, bool positive) {
      const auto cv = detail::cosine_value(z, norms, u, other);
      const double s = cv.phi / tau;
      terms.push_back({other, cv.phi, s, cv.defined, positive});
      s_max = std::max(s_max, s);
    };
    for (Index p : pset) push(p, true);
    for (Index j : negative_pool) {
      if (j == u || is_positive[static_cast<size_t>(j)]) continue;
      push(j, false);
    }

    double sum_pos = 0.0, sum_neg = 0.0;
    for (auto& t : terms) {
      const double e = std::exp(t.s - s_max);
      (t.positive ? sum_pos : sum_neg) += e;
      t.s = e;  // reuse the slot for the shifted exponential
    }
    const double total = sum_pos + sum_neg;
    out.loss += std::log(total) - std::log(sum_pos);

    if (with_grad) {
      for (const auto& t : terms) {
        if (!t.defined) continue;  // cold rows: phi pinned to 0, no gradient
        double ds = t.s / total;   // d loss / d s_k, softmax part
        if (t.positive) ds -= t.s / sum_pos;
        detail::accumulate_cosine_grad(z, norms, u, t.other, t.phi, ds / tau, out.grad_z);
      }
    }

    for (Index p : pset) is_positive[static_cast<size_t>(p)] = false;
  }
  return out;
}

/// Reference mode: anchors are all users, negatives everyone else.
inline InfoNceResult infonce_loss_exact(const Matrix& z, const PositiveSampleSets& pos, double tau,
                                        bool with_grad = true) {
  std::vector<Index> all(static_cast<size_t>(z.rows()));
  for (Index u = 0; u < z.rows(); ++u) all[static_cast<size_t>(u)] = u;
  return infonce_loss(z, pos, all, all, tau, with_grad);
}

}  // namespace sharerec
