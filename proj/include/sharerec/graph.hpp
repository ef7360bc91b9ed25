#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sharerec/common.hpp"
#include "sharerec/rng.hpp"
#include "sharerec/sparse.hpp"

namespace sharerec {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

struct Interaction {
  Index user = 0;
  Index item = 0;
  double rating = 1.0;
  Split split = Split::train;
};

/// Bipartite user-item graph with contiguous 0-based indices, per-edge split
/// tags and per-user training item sets. Read-only after construction and
/// split(); safe for concurrent readers.
class InteractionGraph {
 public:
  Index num_users() const { return static_cast<Index>(user_ids_.size()); }
  Index num_items() const { return static_cast<Index>(item_ids_.size()); }
  const std::vector<Interaction>& edges() const { return edges_; }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  /// Maps an external user id to its index, or -1 if unseen.
  Index user_index(const std::string& id) const {
    auto it = user_index_.find(id);
    return it == user_index_.end() ? -1 : it->second;
  }

  /// Sorted training item list of user u.
  const std::vector<Index>& train_items(Index u) const { return train_items_[static_cast<size_t>(u)]; }

  Index count(Split s) const {
    Index n = 0;
    for (const auto& e : edges_)
      if (e.split == s) ++n;
    return n;
  }

  /// Binary adjacency (value 1 per edge) restricted to one split.
  Csr to_csr(Split s) const {
    std::vector<std::tuple<Index, Index, double>> entries;
    for (const auto& e : edges_)
      if (e.split == s) entries.emplace_back(e.user, e.item, 1.0);
    return Csr::from_triplets(num_users(), num_items(), std::move(entries));
  }

  void rebuild_train_sets() {
    train_items_.assign(static_cast<size_t>(num_users()), {});
    for (const auto& e : edges_)
      if (e.split == Split::train) train_items_[static_cast<size_t>(e.user)].push_back(e.item);
    for (auto& items : train_items_) std::sort(items.begin(), items.end());
  }

  static InteractionGraph from_parts(std::vector<std::string> user_ids, std::vector<std::string> item_ids,
                                     std::vector<Interaction> edges) {
    InteractionGraph g;
    g.user_ids_ = std::move(user_ids);
    g.item_ids_ = std::move(item_ids);
    g.edges_ = std::move(edges);
    std::vector<std::tuple<Index, Index, Split>> keys;
    keys.reserve(g.edges_.size());
    for (const auto& e : g.edges_) {
      if (e.user < 0 || e.user >= g.num_users() || e.item < 0 || e.item >= g.num_items())
        throw std::invalid_argument("InteractionGraph: edge index out of range");
      keys.emplace_back(e.user, e.item, e.split);
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
      throw std::invalid_argument("InteractionGraph: duplicate (user, item) pair within a split");
    for (Index i = 0; i < g.num_users(); ++i) g.user_index_[g.user_ids_[static_cast<size_t>(i)]] = i;
    for (Index i = 0; i < g.num_items(); ++i) g.item_index_[g.item_ids_[static_cast<size_t>(i)]] = i;
    g.rebuild_train_sets();
    return g;
  }

  /// Retags every edge by an independent uniform draw. train_items are rebuilt
  /// from the train split only.
  void split(double train_ratio, double val_ratio, double test_ratio, std::uint64_t seed) {
    if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0)
      throw std::invalid_argument("split: negative ratio");
    if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
      throw std::invalid_argument("split: ratios must sum to 1");
    if (edges_.empty()) throw std::invalid_argument("split: empty graph");
    Rng rng = make_stream(seed, "split");
    for (auto& e : edges_) {
      const double u = rng.uniform();
      e.split = u < train_ratio ? Split::train : (u < train_ratio + val_ratio ? Split::val : Split::test);
    }
    rebuild_train_sets();
  }

 private:
  std::vector<std::string> user_ids_, item_ids_;
  std::unordered_map<std::string, Index> user_index_, item_index_;
  std::vector<Interaction> edges_;
  std::vector<std::vector<Index>> train_items_;
};

struct SocialEdge {
  Index i = 0;  // i < j always
  Index j = 0;
  double weight = 1.0;
};

/// Symmetric user-user graph stored as undirected edges (i < j, each pair
/// once). Weights are 1 on loaded graphs; rewiring produces weighted ones.
class SocialGraph {
 public:
  SocialGraph() = default;
  explicit SocialGraph(Index num_users) : num_users_(num_users) {}

  /// Edges must be self-loop-free; both orientations collapse to (min, max).
  static SocialGraph from_edges(Index num_users, std::vector<SocialEdge> edges) {
    SocialGraph g(num_users);
    for (auto& e : edges) {
      if (e.i == e.j) throw std::invalid_argument("SocialGraph: self-loop");
      if (e.i > e.j) std::swap(e.i, e.j);
    }
    std::sort(edges.begin(), edges.end(), [](const SocialEdge& a, const SocialEdge& b) {
      return std::tie(a.i, a.j, a.weight) < std::tie(b.i, b.j, b.weight);
    });
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const SocialEdge& a, const SocialEdge& b) { return a.i == b.i && a.j == b.j; }),
                edges.end());
    g.edges_ = std::move(edges);
    g.build_adjacency();
    return g;
  }

  Index num_users() const { return num_users_; }
  const std::vector<SocialEdge>& edges() const { return edges_; }

  /// Undirected edge count (each pair once).
  Index edge_count() const { return static_cast<Index>(edges_.size()); }

  /// Ordered-pair count, the convention dataset statistics use.
  Index relation_count() const { return 2 * edge_count(); }

  Index degree(Index u) const { return static_cast<Index>(adj_[static_cast<size_t>(u)].size()); }

  const std::vector<std::pair<Index, double>>& neighbors(Index u) const { return adj_[static_cast<size_t>(u)]; }

  bool has_edge(Index i, Index j) const {
    const auto& nbrs = adj_[static_cast<size_t>(i)];
    auto it = std::lower_bound(nbrs.begin(), nbrs.end(), j,
                               [](const std::pair<Index, double>& p, Index v) { return p.first < v; });
    return it != nbrs.end() && it->first == j;
  }

  /// Symmetric m x m adjacency with edge weights.
  Csr to_csr() const {
    std::vector<std::tuple<Index, Index, double>> entries;
    entries.reserve(edges_.size() * 2);
    for (const auto& e : edges_) {
      entries.emplace_back(e.i, e.j, e.weight);
      entries.emplace_back(e.j, e.i, e.weight);
    }
    return Csr::from_triplets(num_users_, num_users_, std::move(entries));
  }

 private:
  void build_adjacency() {
    adj_.assign(static_cast<size_t>(num_users_), {});
    for (const auto& e : edges_) {
      adj_[static_cast<size_t>(e.i)].emplace_back(e.j, e.weight);
      adj_[static_cast<size_t>(e.j)].emplace_back(e.i, e.weight);
    }
    for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
  }

  Index num_users_ = 0;
  std::vector<SocialEdge> edges_;
  std::vector<std::vector<std::pair<Index, double>>> adj_;
};

namespace detail {

inline bool parse_tokens(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return !out.empty();
}

inline bool parse_number(const std::string& tok, double& out) {
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end == tok.c_str() + tok.size() && !tok.empty();
}

}  // namespace detail

/// Loads "user_id item_id [rating]" lines. Ids may be arbitrary tokens and are
/// re-indexed contiguously in first-appearance order; every id seen in the
/// file stays in the index maps even if all of its edges fall below the
/// threshold. Duplicate (user, item) lines keep the maximum rating, then the
/// threshold drops edges with rating < rating_threshold. A leading header line
/// is skipped when its numeric column does not parse.
inline InteractionGraph load_interactions(const std::string& path, double rating_threshold = 0.0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_interactions: cannot open " + path);

  std::vector<std::string> user_ids, item_ids;
  std::unordered_map<std::string, Index> user_index, item_index;
  std::map<std::pair<Index, Index>, double> best_rating;  // keeps max over duplicates

  auto intern = [](const std::string& id, std::vector<std::string>& ids,
                   std::unordered_map<std::string, Index>& index) {
    auto [it, inserted] = index.try_emplace(id, static_cast<Index>(ids.size()));
    if (inserted) ids.push_back(id);
    return it->second;
  };

  std::string line;
  std::vector<std::string> tok;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::parse_tokens(line, tok)) continue;  // blank line
    if (tok.size() < 2 || tok.size() > 3)
      throw std::runtime_error("load_interactions: malformed line " + std::to_string(line_no) + " in " + path);
    double rating = 1.0;
    if (tok.size() == 3 && !detail::parse_number(tok[2], rating)) {
      if (line_no == 1) continue;  // header row
      throw std::runtime_error("load_interactions: bad rating on line " + std::to_string(line_no) + " in " + path);
    }
    const Index u = intern(tok[0], user_ids, user_index);
    const Index v = intern(tok[1], item_ids, item_index);
    auto [it, inserted] = best_rating.try_emplace({u, v}, rating);
    if (!inserted) it->second = std::max(it->second, rating);
  }

  std::vector<Interaction> edges;
  edges.reserve(best_rating.size());
  for (const auto& [key, rating] : best_rating)
    if (rating >= rating_threshold) edges.push_back({key.first, key.second, rating, Split::train});
  if (edges.empty()) throw std::runtime_error("load_interactions: empty graph after filtering " + path);

  return InteractionGraph::from_parts(std::move(user_ids), std::move(item_ids), std::move(edges));
}

struct SocialLoadStats {
  long skipped_unknown = 0;  // lines whose endpoints were not in the user map
  long skipped_self = 0;
};

/// Loads "user_id user_id" lines against the interaction graph's user index.
/// Unknown ids are skipped (they carry no interaction data), self-loops are
/// dropped, duplicates and orientations merge; all weights are 1.
inline SocialGraph load_social(const std::string& path, const InteractionGraph& users,
                               SocialLoadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_social: cannot open " + path);

  SocialLoadStats local;
  std::vector<SocialEdge> edges;
  std::string line;
  std::vector<std::string> tok;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::parse_tokens(line, tok)) continue;
    if (tok.size() != 2)
      throw std::runtime_error("load_social: malformed line " + std::to_string(line_no) + " in " + path);
    const Index i = users.user_index(tok[0]);
    const Index j = users.user_index(tok[1]);
    if (i < 0 || j < 0) {
      if (line_no == 1) continue;  // header row
      ++local.skipped_unknown;
      continue;
    }
    if (i == j) {
      ++local.skipped_self;
      continue;
    }
    edges.push_back({std::min(i, j), std::max(i, j), 1.0});
  }
  if (stats) *stats = local;
  if (edges.empty()) throw std::runtime_error("load_social: no resolvable edges in " + path);
  return SocialGraph::from_edges(users.num_users(), std::move(edges));
}

/// Variant for re-reading rewired graphs: an optional third column carries the
/// edge weight (default 1).
inline SocialGraph load_social_weighted(const std::string& path, const InteractionGraph& users) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_social_weighted: cannot open " + path);
  std::vector<SocialEdge> edges;
  std::string line;
  std::vector<std::string> tok;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::parse_tokens(line, tok)) continue;
    if (tok.size() != 2 && tok.size() != 3)
      throw std::runtime_error("load_social_weighted: malformed line " + std::to_string(line_no) + " in " + path);
    double w = 1.0;
    if (tok.size() == 3 && !detail::parse_number(tok[2], w))
      throw std::runtime_error("load_social_weighted: bad weight on line " + std::to_string(line_no) + " in " +
                               path);
    const Index i = users.user_index(tok[0]);
    const Index j = users.user_index(tok[1]);
    if (i < 0 || j < 0 || i == j) continue;
    edges.push_back({std::min(i, j), std::max(i, j), w});
  }
  if (edges.empty()) throw std::runtime_error("load_social_weighted: no resolvable edges in " + path);
  return SocialGraph::from_edges(users.num_users(), std::move(edges));
}

inline void write_interactions(const std::string& path, const InteractionGraph& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_interactions: cannot open " + path);
  for (const auto& e : g.edges())
    out << g.user_ids()[static_cast<size_t>(e.user)] << ' ' << g.item_ids()[static_cast<size_t>(e.item)] << ' '
        << format_double(e.rating) << '\n';
}

/// Emits each undirected edge once, by the graph's own user labels.
inline void write_social(const std::string& path, const SocialGraph& g, const InteractionGraph& users,
                         bool with_weights = false) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_social: cannot open " + path);
  for (const auto& e : g.edges()) {
    out << users.user_ids()[static_cast<size_t>(e.i)] << ' ' << users.user_ids()[static_cast<size_t>(e.j)];
    if (with_weights) out << ' ' << format_double(e.weight);
    out << '\n';
  }
}

struct NormalizedViews {
  Csr social;               // D_S^-1 S, m x m (weighted row sums for rewired graphs)
  Csr interactions;         // D_R^-1 R, m x n
  Csr interactions_t;       // D_Rt^-1 R^T, n x m
};

/// Row-normalized propagation views over the train split. Zero-degree rows
/// stay zero: isolated users and items receive no propagated signal.
inline NormalizedViews normalized_views(const InteractionGraph& r, const SocialGraph& s) {
  const Csr train = r.to_csr(Split::train);
  return {row_normalized(s.to_csr()), row_normalized(train), row_normalized(transpose(train))};
}

}  // namespace sharerec
