#pragma once

#include <algorithm>
#include <queue>
#include <utility>
#include <vector>

#include "sharerec/encoder.hpp"
#include "sharerec/graph.hpp"

namespace sharerec {

using UserPair = std::pair<Index, Index>;

struct CutResult {
  std::vector<UserPair> cut;     // edges with c <= 0 (includes cold endpoints, c = 0)
  std::vector<UserPair> remain;  // edges with c > 0
  Index cut_count() const { return static_cast<Index>(cut.size()); }
};

inline CutResult cut_edges(const SocialGraph& s, const CosineSim& c) {
  CutResult out;
  for (const auto& e : s.edges()) {
    if (c(e.i, e.j) <= 0.0)
      out.cut.emplace_back(e.i, e.j);
    else
      out.remain.emplace_back(e.i, e.j);
  }
  return out;
}

/// Top-M non-edge, non-self pairs by similarity, positive similarities only.
/// Fewer than M positive candidates returns them all. Ties break toward the
/// lexicographically smaller pair, so the selection is deterministic.
/// per_user_cap > 0 limits candidates to each user's top-cap positive
/// non-neighbors before the global selection.
inline std::vector<UserPair> add_edges(const SocialGraph& s, const CosineSim& c, Index m_to_add,
                                       int per_user_cap = 0) {
  std::vector<UserPair> out;
  if (m_to_add <= 0) return out;

  using Entry = std::pair<double, UserPair>;
  // Worst element on top: among kept entries the heap top is the one to evict.
  auto worse = [](const Entry& a, const Entry& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> best(worse);
  auto offer = [&](double sim, Index i, Index j) {
    if (static_cast<Index>(best.size()) < m_to_add) {
      best.emplace(sim, UserPair{i, j});
    } else if (worse({sim, {i, j}}, best.top())) {
      best.pop();
      best.emplace(sim, UserPair{i, j});
    }
  };

  const Index m = c.size();
  if (per_user_cap <= 0) {
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j) {
        if (s.has_edge(i, j)) continue;
        const double sim = c(i, j);
        if (sim > 0.0) offer(sim, i, j);
      }
  } else {
    // Per-user shortlist first, then global Top-M over the union.
    std::vector<Entry> shortlist;
    for (Index i = 0; i < m; ++i) {
      std::vector<Entry> mine;
      for (Index j = 0; j < m; ++j) {
        if (j == i || s.has_edge(i, j)) continue;
        const double sim = c(i, j);
        if (sim > 0.0) mine.emplace_back(sim, UserPair{std::min(i, j), std::max(i, j)});
      }
      const auto cap = std::min<size_t>(static_cast<size_t>(per_user_cap), mine.size());
      std::partial_sort(mine.begin(), mine.begin() + static_cast<std::ptrdiff_t>(cap), mine.end(),
                        [&](const Entry& a, const Entry& b) { return worse(b, a); });
      mine.resize(cap);
      shortlist.insert(shortlist.end(), mine.begin(), mine.end());
    }
    std::sort(shortlist.begin(), shortlist.end(),
              [](const Entry& a, const Entry& b) { return a.second < b.second; });
    shortlist.erase(std::unique(shortlist.begin(), shortlist.end(),
                                [](const Entry& a, const Entry& b) { return a.second == b.second; }),
                    shortlist.end());
    for (const auto& e : shortlist) offer(e.first, e.second.first, e.second.second);
  }

  out.reserve(best.size());
  while (!best.empty()) {
    out.push_back(best.top().second);
    best.pop();
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Edge set remain + added, weighted by min-max normalized similarity over
/// that set. A degenerate range (all similarities equal) maps every weight
/// to 1; an empty set yields an empty graph.
inline SocialGraph build_rewired(Index num_users, const std::vector<UserPair>& remain,
                                 const std::vector<UserPair>& added, const CosineSim& c) {
  std::vector<SocialEdge> edges;
  edges.reserve(remain.size() + added.size());
  double c_min = 0.0, c_max = 0.0;
  bool first = true;
  auto collect = [&](const std::vector<UserPair>& pairs) {
    for (const auto& [i, j] : pairs) {
      const double sim = c(i, j);
      if (first) {
        c_min = c_max = sim;
        first = false;
      } else {
        c_min = std::min(c_min, sim);
        c_max = std::max(c_max, sim);
      }
      edges.push_back({i, j, sim});
    }
  };
  collect(remain);
  collect(added);

  const double range = c_max - c_min;
  for (auto& e : edges) e.weight = range > 0.0 ? (e.weight - c_min) / range : 1.0;
  return SocialGraph::from_edges(num_users, std::move(edges));
}

struct RewireReport {
  std::vector<UserPair> cut_edges;
  std::vector<UserPair> added_edges;
  Index cut_count = 0;  // M
  Index add_count = 0;
  double weight_min = 0.0;
  double weight_max = 0.0;
  double weight_mean = 0.0;
  int epoch = 0;
};

struct RewireOptions {
  bool cut_only = false;      // skip adding; edge count shrinks
  bool add_only = false;      // skip cutting; M taken from a dry-run cut count
  bool unit_weights = false;  // overwrite all weights with 1 after rewiring
  int per_user_cap = 0;       // 0 = exact scan over all pairs
};

/// Full rewiring pass against the ORIGINAL social graph: cut non-positive
/// edges, add equally many top-similarity non-edges, re-weight by min-max
/// normalized similarity.
inline std::pair<SocialGraph, RewireReport> rewire(const SocialGraph& s, const Matrix& z,
                                                   const RewireOptions& opt = {}) {
  if (opt.cut_only && opt.add_only)
    throw std::invalid_argument("rewire: cut_only and add_only are mutually exclusive");
  const CosineSim c(z);
  RewireReport report;

  CutResult cuts = cut_edges(s, c);
  const Index add_budget = cuts.cut_count();  // add as many as (would be) cut

  std::vector<UserPair> remain;
  if (opt.add_only) {
    // Keep everything; the dry-run cut count still sets the add budget.
    remain.reserve(s.edges().size());
    for (const auto& e : s.edges()) remain.emplace_back(e.i, e.j);
  } else {
    remain = std::move(cuts.remain);
    report.cut_edges = std::move(cuts.cut);
    report.cut_count = add_budget;
  }

  std::vector<UserPair> added;
  if (!opt.cut_only) added = add_edges(s, c, add_budget, opt.per_user_cap);
  report.add_count = static_cast<Index>(added.size());
  report.added_edges = added;

  SocialGraph rewired = build_rewired(s.num_users(), remain, added, c);
  if (opt.unit_weights) {
    std::vector<SocialEdge> unit = rewired.edges();
    for (auto& e : unit) e.weight = 1.0;
    rewired = SocialGraph::from_edges(rewired.num_users(), std::move(unit));
  }

  if (rewired.edge_count() > 0) {
    double sum = 0.0;
    report.weight_min = rewired.edges().front().weight;
    report.weight_max = report.weight_min;
    for (const auto& e : rewired.edges()) {
      sum += e.weight;
      report.weight_min = std::min(report.weight_min, e.weight);
      report.weight_max = std::max(report.weight_max, e.weight);
    }
    report.weight_mean = sum / static_cast<double>(rewired.edge_count());
  }
  return {std::move(rewired), std::move(report)};
}

}  // namespace sharerec
