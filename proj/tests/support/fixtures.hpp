#pragma once

// Dataset builders shared by the test suites.

#include <string>
#include <utility>
#include <vector>

#include "sharerec/graph.hpp"
#include "sharerec/rng.hpp"

namespace sharerec::testing {

inline InteractionGraph graph_with_items(const std::vector<std::vector<Index>>& item_sets, Index num_items) {
  std::vector<std::string> users, items;
  std::vector<Interaction> edges;
  for (size_t u = 0; u < item_sets.size(); ++u) {
    users.push_back("u" + std::to_string(u));
    for (Index v : item_sets[u]) edges.push_back({static_cast<Index>(u), v, 1.0, Split::train});
  }
  for (Index v = 0; v < num_items; ++v) items.push_back("i" + std::to_string(v));
  return InteractionGraph::from_parts(users, items, edges);
}

struct ClusteredSpec {
  Index clusters = 8;
  Index users_per_cluster = 10;
  Index pool = 20;          // items per cluster pool (pools are disjoint)
  Index min_draws = 10;     // items per user, uniform in [min_draws, max_draws]
  Index max_draws = 15;
  double social_within = 0.25;  // edge probability inside a cluster
  double social_across = 0.01;  // edge probability across clusters
};

struct ClusteredData {
  InteractionGraph interactions;
  SocialGraph social;
};

/// Community-structured source data: same-cluster users draw from one small
/// item pool (homophilic pairs), different clusters share nothing (h = 0
/// exactly), and a social graph mixes within- and cross-cluster ties.
inline ClusteredData clustered_dataset(const ClusteredSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  const Index m = spec.clusters * spec.users_per_cluster;
  std::vector<std::vector<Index>> sets(static_cast<size_t>(m));
  for (Index c = 0; c < spec.clusters; ++c)
    for (Index u = 0; u < spec.users_per_cluster; ++u) {
      auto& set = sets[static_cast<size_t>(c * spec.users_per_cluster + u)];
      const Index draws =
          spec.min_draws + static_cast<Index>(rng.uniform_index(
                               static_cast<std::uint64_t>(spec.max_draws - spec.min_draws + 1)));
      const auto picks = rng.sample_without_replacement(spec.pool, draws);
      for (Index p : picks) set.push_back(c * spec.pool + p);
    }

  std::vector<SocialEdge> edges;
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j) {
      const bool same = i / spec.users_per_cluster == j / spec.users_per_cluster;
      if (rng.uniform() < (same ? spec.social_within : spec.social_across)) edges.push_back({i, j, 1.0});
    }
  if (edges.empty()) edges.push_back({0, 1, 1.0});

  ClusteredData data{graph_with_items(sets, spec.clusters * spec.pool), SocialGraph::from_edges(m, edges)};
  return data;
}

/// Small trainable dataset for trainer-level tests.
inline ClusteredData tiny_dataset(std::uint64_t seed) {
  ClusteredSpec spec;
  spec.clusters = 4;
  spec.users_per_cluster = 8;
  spec.pool = 10;
  spec.min_draws = 5;
  spec.max_draws = 7;
  spec.social_within = 0.4;
  spec.social_across = 0.05;
  return clustered_dataset(spec, seed);
}

}  // namespace sharerec::testing
