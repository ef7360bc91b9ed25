#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "sharerec/common.hpp"
#include "sharerec/graph.hpp"

namespace sharerec {

/// Every non-excluded item ordered by descending score, ties by ascending
/// item index.
inline std::vector<Index> rank_items(Index user, const Matrix& p, const Matrix& q,
                                     const std::vector<Index>& excluded_sorted) {
  std::vector<Index> items;
  items.reserve(static_cast<size_t>(q.rows()));
  for (Index v = 0; v < q.rows(); ++v)
    if (!std::binary_search(excluded_sorted.begin(), excluded_sorted.end(), v)) items.push_back(v);

  std::vector<double> scores(static_cast<size_t>(q.rows()));
  const auto pu = p.row(user);
  for (Index v : items) scores[static_cast<size_t>(v)] = dot(pu, q.row(v));
  std::sort(items.begin(), items.end(), [&](Index a, Index b) {
    const double sa = scores[static_cast<size_t>(a)], sb = scores[static_cast<size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });
  return items;
}

struct MetricsReport {
  double recall = 0.0;
  double precision = 0.0;
  double ndcg = 0.0;
  int k = 10;
  Index users_evaluated = 0;  // users with at least one test item
  std::vector<double> per_user_ndcg;  // aligned with evaluated order, only when retained
};

/// Metrics for a single ranked list against a relevant set: hit-based
/// recall/precision and binary-gain NDCG with 1/log2(rank+1) discount.
struct UserMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double ndcg = 0.0;
};

inline UserMetrics user_metrics_at_k(const std::vector<Index>& ranking, const std::vector<Index>& relevant_sorted,
                                     int k) {
  if (k < 1) throw std::invalid_argument("metrics_at_k: k must be >= 1");
  UserMetrics m;
  if (relevant_sorted.empty()) return m;
  const auto depth = std::min<size_t>(static_cast<size_t>(k), ranking.size());
  long hits = 0;
  double dcg = 0.0;
  for (size_t r = 0; r < depth; ++r) {
    if (std::binary_search(relevant_sorted.begin(), relevant_sorted.end(), ranking[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const auto ideal = std::min<size_t>(static_cast<size_t>(k), relevant_sorted.size());
  for (size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  m.recall = static_cast<double>(hits) / static_cast<double>(relevant_sorted.size());
  m.precision = static_cast<double>(hits) / static_cast<double>(k);
  m.ndcg = idcg > 0.0 ? dcg / idcg : 0.0;
  return m;
}

/// Mean metrics over per-user rankings; users with empty test sets are
/// excluded from the averages.
inline MetricsReport metrics_at_k(const std::vector<std::vector<Index>>& rankings,
                                  const std::vector<std::vector<Index>>& relevant_sorted, int k,
                                  bool keep_per_user = false) {
  MetricsReport report;
  report.k = k;
  for (size_t u = 0; u < rankings.size(); ++u) {
    if (relevant_sorted[u].empty()) continue;
    const UserMetrics m = user_metrics_at_k(rankings[u], relevant_sorted[u], k);
    report.recall += m.recall;
    report.precision += m.precision;
    report.ndcg += m.ndcg;
    report.users_evaluated++;
    if (keep_per_user) report.per_user_ndcg.push_back(m.ndcg);
  }
  if (report.users_evaluated > 0) {
    report.recall /= report.users_evaluated;
    report.precision /= report.users_evaluated;
    report.ndcg /= report.users_evaluated;
  }
  return report;
}

/// Full-ranking evaluation of one split: for each user with >= 1 item in
/// `target`, rank all items outside the exclusion splits and score top-k.
/// Only the top k of each ranking affects any metric, so a partial sort
/// suffices; the comparator matches rank_items exactly.
inline MetricsReport evaluate_split(const Matrix& p, const Matrix& q, const InteractionGraph& r, Split target,
                                    const std::vector<Split>& exclude, int k = 10) {
  const Index m = r.num_users();
  std::vector<std::vector<Index>> relevant(static_cast<size_t>(m)), excluded(static_cast<size_t>(m));
  for (const auto& e : r.edges()) {
    if (e.split == target) relevant[static_cast<size_t>(e.user)].push_back(e.item);
    for (Split s : exclude)
      if (e.split == s) excluded[static_cast<size_t>(e.user)].push_back(e.item);
  }

  MetricsReport report;
  report.k = k;
  std::vector<double> scores(static_cast<size_t>(q.rows()));
  std::vector<Index> candidates;
  for (Index u = 0; u < m; ++u) {
    auto& rel = relevant[static_cast<size_t>(u)];
    if (rel.empty()) continue;
    std::sort(rel.begin(), rel.end());
    auto& exc = excluded[static_cast<size_t>(u)];
    std::sort(exc.begin(), exc.end());

    const auto pu = p.row(u);
    candidates.clear();
    for (Index v = 0; v < q.rows(); ++v) {
      if (std::binary_search(exc.begin(), exc.end(), v)) continue;
      scores[static_cast<size_t>(v)] = dot(pu, q.row(v));
      candidates.push_back(v);
    }
    const auto depth = std::min<size_t>(static_cast<size_t>(k), candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(depth),
                      candidates.end(), [&](Index a, Index b) {
                        const double sa = scores[static_cast<size_t>(a)], sb = scores[static_cast<size_t>(b)];
                        if (sa != sb) return sa > sb;
                        return a < b;
                      });
    candidates.resize(depth);
    const UserMetrics um = user_metrics_at_k(candidates, rel, k);
    report.recall += um.recall;
    report.precision += um.precision;
    report.ndcg += um.ndcg;
    report.users_evaluated++;
  }
  if (report.users_evaluated > 0) {
    report.recall /= report.users_evaluated;
    report.precision /= report.users_evaluated;
    report.ndcg /= report.users_evaluated;
  }
  return report;
}

inline void write_metrics_report(std::ostream& out, const MetricsReport& r) {
  out << "recall@" << r.k << "=" << format_double(r.recall) << "\n"
      << "precision@" << r.k << "=" << format_double(r.precision) << "\n"
      << "ndcg@" << r.k << "=" << format_double(r.ndcg) << "\n"
      << "users_evaluated=" << r.users_evaluated << "\n";
}

}  // namespace sharerec
