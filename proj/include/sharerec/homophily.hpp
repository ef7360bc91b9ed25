#pragma once

#include <algorithm>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sharerec/graph.hpp"
#include "sharerec/rng.hpp"

namespace sharerec {

/// Jaccard similarity of two users' training item sets. 0 when either set is
/// empty, so cold users never look homophilic.
inline double edge_homophily(Index i, Index j, const InteractionGraph& r) {
  const auto& a = r.train_items(i);
  const auto& b = r.train_items(j);
  if (a.empty() || b.empty()) return 0.0;
  size_t ia = 0, ib = 0, inter = 0;
  while (ia < a.size() && ib < b.size()) {
    if (a[ia] == b[ib]) {
      ++inter;
      ++ia;
      ++ib;
    } else if (a[ia] < b[ib]) {
      ++ia;
    } else {
      ++ib;
    }
  }
  const size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct HistogramBin {
  double lower = 0.0;
  double upper = 0.0;
  long count = 0;
};

struct EdgeHomophily {
  Index i = 0;
  Index j = 0;
  double h = 0.0;
};

/// Per-edge ratios over a social graph (each undirected edge once), their
/// mean, extremes and distribution.
struct HomophilyTable {
  std::vector<EdgeHomophily> edges;
  double graph_ratio = 0.0;  // arithmetic mean of per-edge ratios
  double h_min = 0.0;
  double h_max = 0.0;
  std::vector<HistogramBin> histogram;
};

inline HomophilyTable graph_homophily(const SocialGraph& s, const InteractionGraph& r, int bins = 50) {
  if (s.edge_count() == 0) throw std::invalid_argument("graph_homophily: empty social graph");
  if (bins < 1) throw std::invalid_argument("graph_homophily: bins must be >= 1");

  HomophilyTable table;
  table.edges.reserve(static_cast<size_t>(s.edge_count()));
  double sum = 0.0;
  table.h_min = 1.0;
  table.h_max = 0.0;
  for (const auto& e : s.edges()) {
    const double h = edge_homophily(e.i, e.j, r);
    table.edges.push_back({e.i, e.j, h});
    sum += h;
    table.h_min = std::min(table.h_min, h);
    table.h_max = std::max(table.h_max, h);
  }
  table.graph_ratio = sum / static_cast<double>(table.edges.size());

  table.histogram.resize(static_cast<size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    table.histogram[static_cast<size_t>(b)].lower = static_cast<double>(b) / bins;
    table.histogram[static_cast<size_t>(b)].upper = static_cast<double>(b + 1) / bins;
  }
  for (const auto& e : table.edges) {
    auto b = static_cast<int>(e.h * bins);
    if (b >= bins) b = bins - 1;  // h == 1 lands in the top bin
    table.histogram[static_cast<size_t>(b)].count++;
  }
  return table;
}

struct SynthOptions {
  double tolerance = 0.02;
  double avg_degree = 10.0;  // target mean social degree of the generated graph
  int bins = 50;
};

struct SynthResult {
  SocialGraph social;
  InteractionGraph interactions;
  double achieved = 0.0;
  std::vector<Index> sampled_users;  // source-graph indices
};

/// Generates a social sub-graph whose graph-wise homophily ratio lands within
/// opt.tolerance of target_hs, together with the induced interaction
/// sub-graph. A user subset of size within [user_range] is sampled, homophily
/// is computed for every candidate pair, and edges are drawn greedily from the
/// high or low end of the sorted candidate list, whichever prospective mean is
/// closer to the target, until the edge budget (avg_degree * users / 2) is
/// filled. Deterministic for a fixed seed.
inline SynthResult synthesize_subgraph(const InteractionGraph& r, double target_hs,
                                       std::pair<Index, Index> user_range, std::uint64_t seed,
                                       const SynthOptions& opt = {}) {
  const auto [lo, hi] = user_range;
  if (lo > hi || lo < 1) throw std::invalid_argument("synthesize_subgraph: bad user range");
  if (hi > r.num_users()) throw std::invalid_argument("synthesize_subgraph: range exceeds user count");
  if (target_hs < 0.0 || target_hs > 1.0) throw std::invalid_argument("synthesize_subgraph: target out of [0,1]");

  Rng rng = make_stream(seed, "synth");
  const Index subset_size = lo + static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
  std::vector<Index> sampled = rng.sample_without_replacement(r.num_users(), subset_size);
  std::sort(sampled.begin(), sampled.end());

  // Induce the sub-interaction graph; items re-indexed to those that survive.
  std::vector<Index> user_map(static_cast<size_t>(r.num_users()), -1);
  for (Index k = 0; k < subset_size; ++k) user_map[static_cast<size_t>(sampled[static_cast<size_t>(k)])] = k;
  std::vector<Index> item_map(static_cast<size_t>(r.num_items()), -1);
  std::vector<std::string> item_ids;
  std::vector<Interaction> sub_edges;
  for (const auto& e : r.edges()) {
    const Index u = user_map[static_cast<size_t>(e.user)];
    if (u < 0 || e.split != Split::train) continue;
    Index& v = item_map[static_cast<size_t>(e.item)];
    if (v < 0) {
      v = static_cast<Index>(item_ids.size());
      item_ids.push_back(r.item_ids()[static_cast<size_t>(e.item)]);
    }
    sub_edges.push_back({u, v, e.rating, Split::train});
  }
  std::vector<std::string> user_ids;
  user_ids.reserve(static_cast<size_t>(subset_size));
  for (Index u : sampled) user_ids.push_back(r.user_ids()[static_cast<size_t>(u)]);
  InteractionGraph sub = InteractionGraph::from_parts(std::move(user_ids), std::move(item_ids), std::move(sub_edges));

  // All candidate pairs sorted by homophily; two cursors walk in from both
  // ends so each pair is considered once.
  std::vector<std::tuple<double, Index, Index>> pairs;
  pairs.reserve(static_cast<size_t>(subset_size) * (subset_size - 1) / 2);
  for (Index i = 0; i < subset_size; ++i)
    for (Index j = i + 1; j < subset_size; ++j) pairs.emplace_back(edge_homophily(i, j, sub), i, j);
  std::sort(pairs.begin(), pairs.end());

  const auto budget =
      static_cast<size_t>(std::min<double>(static_cast<double>(pairs.size()),
                                           std::max(1.0, opt.avg_degree * subset_size / 2.0 + 0.5)));
  size_t low_cursor = 0;
  size_t high_cursor = pairs.size();
  double sum = 0.0;
  std::vector<SocialEdge> chosen;
  chosen.reserve(budget);
  while (chosen.size() < budget && low_cursor < high_cursor) {
    const double next = static_cast<double>(chosen.size() + 1);
    const double mean_low = (sum + std::get<0>(pairs[low_cursor])) / next;
    const double mean_high = (sum + std::get<0>(pairs[high_cursor - 1])) / next;
    const bool take_low = std::abs(mean_low - target_hs) <= std::abs(mean_high - target_hs);
    const auto& [h, i, j] = take_low ? pairs[low_cursor++] : pairs[--high_cursor];
    sum += h;
    chosen.push_back({i, j, 1.0});
  }

  const double achieved = chosen.empty() ? 0.0 : sum / static_cast<double>(chosen.size());
  if (std::abs(achieved - target_hs) > opt.tolerance)
    throw std::runtime_error("synthesize_subgraph: target " + format_double(target_hs) +
                             " unreachable, best achieved " + format_double(achieved));

  SynthResult out{SocialGraph::from_edges(subset_size, std::move(chosen)), std::move(sub), achieved,
                  std::move(sampled)};
  return out;
}

inline void write_histogram_csv(const std::string& path, const HomophilyTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_histogram_csv: cannot open " + path);
  out << "bin_lower,bin_upper,count\n";
  for (const auto& b : table.histogram)
    out << format_double(b.lower) << ',' << format_double(b.upper) << ',' << b.count << '\n';
}

}  // namespace sharerec
