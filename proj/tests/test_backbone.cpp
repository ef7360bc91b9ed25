#include <catch2/catch_amalgamated.hpp>

#include "sharerec/backbone.hpp"
#include "sharerec/embedding.hpp"

using namespace sharerec;

namespace {

InteractionGraph bipartite(const std::vector<std::pair<Index, Index>>& edges, Index users, Index items) {
  std::vector<std::string> uids, iids;
  for (Index u = 0; u < users; ++u) uids.push_back("u" + std::to_string(u));
  for (Index v = 0; v < items; ++v) iids.push_back("i" + std::to_string(v));
  std::vector<Interaction> list;
  for (const auto& [u, v] : edges) list.push_back({u, v, 1.0, Split::train});
  return InteractionGraph::from_parts(uids, iids, list);
}

// Reference propagation on dense matrices, written independently of the CSR
// path: builds R, S, normalizes rows (or symmetric-normalizes R), runs the
// recurrence, and averages the layer outputs.
struct DenseOracle {
  std::vector<std::vector<double>> p, q;

  DenseOracle(const std::vector<std::pair<Index, Index>>& r_edges, const std::vector<SocialEdge>& s_edges,
              Index m, Index n, const Matrix& p0, const Matrix& q0, int layers, bool symmetric_interactions) {
    const Index d = p0.cols();
    std::vector<std::vector<double>> r(m, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> s(m, std::vector<double>(m, 0.0));
    for (const auto& [u, v] : r_edges) r[u][v] = 1.0;
    for (const auto& e : s_edges) {
      s[e.i][e.j] = e.weight;
      s[e.j][e.i] = e.weight;
    }

    std::vector<std::vector<double>> ar(m, std::vector<double>(n, 0.0));
    std::vector<std::vector<double>> at(n, std::vector<double>(m, 0.0));
    std::vector<std::vector<double>> as(m, std::vector<double>(m, 0.0));
    std::vector<double> du(m, 0.0), dv(n, 0.0), ds(m, 0.0);
    for (Index u = 0; u < m; ++u)
      for (Index v = 0; v < n; ++v) du[u] += r[u][v];
    for (Index v = 0; v < n; ++v)
      for (Index u = 0; u < m; ++u) dv[v] += r[u][v];
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j) ds[i] += s[i][j];

    for (Index u = 0; u < m; ++u)
      for (Index v = 0; v < n; ++v) {
        if (r[u][v] == 0.0) continue;
        if (symmetric_interactions) {
          ar[u][v] = 1.0 / std::sqrt(du[u] * dv[v]);
          at[v][u] = 1.0 / std::sqrt(du[u] * dv[v]);
        } else {
          ar[u][v] = 1.0 / du[u];
          at[v][u] = 1.0 / dv[v];
        }
      }
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < m; ++j)
        if (s[i][j] != 0.0 && ds[i] > 0.0) as[i][j] = s[i][j] / ds[i];

    std::vector<std::vector<double>> pl(m, std::vector<double>(d, 0.0));
    std::vector<std::vector<double>> ql(n, std::vector<double>(d, 0.0));
    for (Index u = 0; u < m; ++u)
      for (Index c = 0; c < d; ++c) pl[u][c] = p0(u, c);
    for (Index v = 0; v < n; ++v)
      for (Index c = 0; c < d; ++c) ql[v][c] = q0(v, c);
    auto p_acc = pl;
    auto q_acc = ql;

    for (int l = 0; l < layers; ++l) {
      std::vector<std::vector<double>> pn(m, std::vector<double>(d, 0.0));
      std::vector<std::vector<double>> qn(n, std::vector<double>(d, 0.0));
      for (Index u = 0; u < m; ++u)
        for (Index c = 0; c < d; ++c) {
          double acc = 0.0;
          for (Index v = 0; v < n; ++v) acc += ar[u][v] * ql[v][c];
          for (Index j = 0; j < m; ++j) acc += as[u][j] * pl[j][c];
          pn[u][c] = acc;
        }
      for (Index v = 0; v < n; ++v)
        for (Index c = 0; c < d; ++c) {
          double acc = 0.0;
          for (Index u = 0; u < m; ++u) acc += at[v][u] * pl[u][c];
          qn[v][c] = acc;
        }
      pl = pn;
      ql = qn;
      for (Index u = 0; u < m; ++u)
        for (Index c = 0; c < d; ++c) p_acc[u][c] += pl[u][c];
      for (Index v = 0; v < n; ++v)
        for (Index c = 0; c < d; ++c) q_acc[v][c] += ql[v][c];
    }
    const double inv = 1.0 / (layers + 1);
    for (auto& row : p_acc)
      for (auto& x : row) x *= inv;
    for (auto& row : q_acc)
      for (auto& x : row) x *= inv;
    p = p_acc;
    q = q_acc;
  }
};

Matrix fixed(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

}  // namespace

TEST_CASE("one user and one item swap embeddings in a single layer") {
  const auto g = bipartite({{0, 0}}, 1, 1);
  const SocialGraph s(1);
  const Propagation prop(s, g, BackboneKind::generic, 1);
  const Matrix p0 = fixed({{2.0, -1.0}});
  const Matrix q0 = fixed({{0.5, 3.0}});
  const auto out = prop.forward(p0, q0);
  // Layer 1: P = q0, Q = p0; output is the mean with layer 0.
  CHECK(out.users(0, 0) == Catch::Approx((2.0 + 0.5) / 2).margin(1e-15));
  CHECK(out.users(0, 1) == Catch::Approx((-1.0 + 3.0) / 2).margin(1e-15));
  CHECK(out.items(0, 0) == Catch::Approx((0.5 + 2.0) / 2).margin(1e-15));
}

TEST_CASE("socially linked users exchange embeddings when no interactions exist") {
  std::vector<std::string> uids = {"a", "b"};
  std::vector<std::string> iids = {"x"};
  // One train edge is needed for a non-degenerate item table; park it on a
  // third user... no third user, so give both zero interactions instead.
  const InteractionGraph g = InteractionGraph::from_parts(
      uids, iids, {{0, 0, 1.0, Split::val}});  // val edge: train split is empty
  const SocialGraph s = SocialGraph::from_edges(2, {{0, 1, 1.0}});
  const Propagation prop(s, g, BackboneKind::generic, 1);
  const Matrix p0 = fixed({{1.0, 2.0}, {5.0, -3.0}});
  const Matrix q0 = fixed({{0.0, 0.0}});
  const auto out = prop.forward(p0, q0);
  CHECK(out.users(0, 0) == Catch::Approx((1.0 + 5.0) / 2).margin(1e-15));
  CHECK(out.users(1, 0) == Catch::Approx((5.0 + 1.0) / 2).margin(1e-15));
  CHECK(out.users(0, 1) == Catch::Approx((2.0 - 3.0) / 2).margin(1e-15));
}

TEST_CASE("the 2x2 toy case matches hand-evaluated propagation") {
  // R = [[1,1],[1,0]], S = path 0-1.
  const auto g = bipartite({{0, 0}, {0, 1}, {1, 0}}, 2, 2);
  const SocialGraph s = SocialGraph::from_edges(2, {{0, 1, 1.0}});
  const Matrix p0 = fixed({{1.0, 2.0}, {3.0, 4.0}});
  const Matrix q0 = fixed({{5.0, 6.0}, {7.0, 8.0}});
  const Propagation prop(s, g, BackboneKind::generic, 1);
  const auto out = prop.forward(p0, q0);
  // P1 row0 = (q0+q1)/2 + p1 = [9,11]; row1 = q0 + p0 = [6,8].
  // Q1 row0 = (p0+p1)/2 = [2,3]; row1 = p0 = [1,2]. Mean with layer 0:
  CHECK(out.users(0, 0) == Catch::Approx(5.0).margin(1e-12));
  CHECK(out.users(0, 1) == Catch::Approx(6.5).margin(1e-12));
  CHECK(out.users(1, 0) == Catch::Approx(4.5).margin(1e-12));
  CHECK(out.users(1, 1) == Catch::Approx(6.0).margin(1e-12));
  CHECK(out.items(0, 0) == Catch::Approx(3.5).margin(1e-12));
  CHECK(out.items(0, 1) == Catch::Approx(4.5).margin(1e-12));
  CHECK(out.items(1, 0) == Catch::Approx(4.0).margin(1e-12));
  CHECK(out.items(1, 1) == Catch::Approx(5.0).margin(1e-12));
}

TEST_CASE("propagation agrees with the dense oracle on random small graphs") {
  Rng rng(314);
  for (int trial = 0; trial < 40; ++trial) {
    const Index m = 2 + static_cast<Index>(rng.uniform_index(7));
    const Index n = 2 + static_cast<Index>(rng.uniform_index(7));
    const Index d = 1 + static_cast<Index>(rng.uniform_index(4));
    const int layers = 1 + static_cast<int>(rng.uniform_index(3));
    std::vector<std::pair<Index, Index>> r_edges;
    for (Index u = 0; u < m; ++u)
      for (Index v = 0; v < n; ++v)
        if (rng.uniform() < 0.4) r_edges.emplace_back(u, v);
    std::vector<SocialEdge> s_edges;
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j)
        if (rng.uniform() < 0.3) s_edges.push_back({i, j, rng.uniform() < 0.5 ? 1.0 : rng.uniform()});
    if (r_edges.empty()) r_edges.emplace_back(0, 0);
    const auto g = bipartite(r_edges, m, n);
    const SocialGraph s = SocialGraph::from_edges(m, s_edges);
    Matrix p0(m, d), q0(n, d);
    for (size_t i = 0; i < p0.size(); ++i) p0.data()[i] = rng.uniform(-2, 2);
    for (size_t i = 0; i < q0.size(); ++i) q0.data()[i] = rng.uniform(-2, 2);

    for (const bool symmetric : {false, true}) {
      const Propagation prop(s, g, symmetric ? BackboneKind::lightgcn_social : BackboneKind::generic, layers);
      const auto out = prop.forward(p0, q0);
      const DenseOracle oracle(r_edges, s_edges, m, n, p0, q0, layers, symmetric);
      for (Index u = 0; u < m; ++u)
        for (Index c = 0; c < d; ++c) CHECK(out.users(u, c) == Catch::Approx(oracle.p[u][c]).margin(1e-12));
      for (Index v = 0; v < n; ++v)
        for (Index c = 0; c < d; ++c) CHECK(out.items(v, c) == Catch::Approx(oracle.q[v][c]).margin(1e-12));
    }
  }
}

TEST_CASE("the degenerate single-pair case makes both backbones coincide") {
  const auto g = bipartite({{0, 0}}, 1, 1);
  const SocialGraph s(1);
  const Matrix p0 = fixed({{1.5, -2.0}});
  const Matrix q0 = fixed({{0.25, 4.0}});
  const auto a = Propagation(s, g, BackboneKind::generic, 2).forward(p0, q0);
  const auto b = Propagation(s, g, BackboneKind::lightgcn_social, 2).forward(p0, q0);
  for (Index c = 0; c < 2; ++c) {
    CHECK(a.users(0, c) == Catch::Approx(b.users(0, c)).margin(1e-15));
    CHECK(a.items(0, c) == Catch::Approx(b.items(0, c)).margin(1e-15));
  }
}

TEST_CASE("an empty social graph contributes exactly nothing") {
  const auto g = bipartite({{0, 0}, {0, 1}, {1, 1}}, 2, 2);
  const SocialGraph none(2);
  const SocialGraph some = SocialGraph::from_edges(2, {{0, 1, 1.0}});
  const Matrix p0 = fixed({{1.0, 0.0}, {0.0, 1.0}});
  const Matrix q0 = fixed({{1.0, 1.0}, {2.0, -1.0}});
  const auto with_empty = Propagation(none, g, BackboneKind::generic, 2).forward(p0, q0);
  // Same computation with the social term removed by hand: zero the graph.
  const DenseOracle oracle({{0, 0}, {0, 1}, {1, 1}}, {}, 2, 2, p0, q0, 2, false);
  for (Index u = 0; u < 2; ++u)
    for (Index c = 0; c < 2; ++c) CHECK(with_empty.users(u, c) == Catch::Approx(oracle.p[u][c]).margin(1e-15));
  // And a non-empty graph changes the result.
  const auto with_social = Propagation(some, g, BackboneKind::generic, 2).forward(p0, q0);
  bool any_diff = false;
  for (Index u = 0; u < 2; ++u)
    for (Index c = 0; c < 2; ++c) any_diff |= std::abs(with_social.users(u, c) - with_empty.users(u, c)) > 1e-12;
  CHECK(any_diff);
}

TEST_CASE("propagation is linear in the base embeddings") {
  const auto g = bipartite({{0, 0}, {1, 0}, {1, 1}}, 3, 2);
  const SocialGraph s = SocialGraph::from_edges(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const Propagation prop(s, g, BackboneKind::generic, 2);
  Rng rng(8);
  Matrix p0(3, 3), q0(2, 3);
  for (size_t i = 0; i < p0.size(); ++i) p0.data()[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < q0.size(); ++i) q0.data()[i] = rng.uniform(-1, 1);
  const auto base = prop.forward(p0, q0);
  Matrix p_scaled = p0, q_scaled = q0;
  p_scaled.scale(-2.5);
  q_scaled.scale(-2.5);
  const auto scaled = prop.forward(p_scaled, q_scaled);
  for (Index u = 0; u < 3; ++u)
    for (Index c = 0; c < 3; ++c) CHECK(scaled.users(u, c) == Catch::Approx(-2.5 * base.users(u, c)).margin(1e-12));
}

TEST_CASE("score is the embedding dot product") {
  const Matrix p = fixed({{1.0, 2.0}});
  const Matrix q = fixed({{3.0, 4.0}, {0.0, 0.0}, {2.0, -1.0}});
  CHECK(score(p, q, 0, 0) == 11.0);
  CHECK(score(p, q, 0, 1) == 0.0);
  CHECK(score(p, q, 0, 2) == 0.0);  // orthogonal
}

TEST_CASE("bpr loss is ln 2 at zero margin and vanishes for large margins") {
  const Matrix p = fixed({{1.0, 0.0}});
  const Matrix q = fixed({{2.0, 0.0}, {2.0, 0.0}, {50.0, 0.0}, {-50.0, 0.0}});
  CHECK(bpr_loss({{0, 0, 1}}, p, q, nullptr, nullptr) == Catch::Approx(std::log(2.0)).margin(1e-12));
  CHECK(bpr_loss({{0, 2, 3}}, p, q, nullptr, nullptr) == Catch::Approx(0.0).margin(1e-12));
  // Strictly decreasing in the margin, never negative.
  double prev = bpr_loss({{0, 3, 2}}, p, q, nullptr, nullptr);
  CHECK(prev > 0.0);
  for (double x : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
    const Matrix qq = fixed({{x, 0.0}, {0.0, 0.0}});
    const double l = bpr_loss({{0, 0, 1}}, p, qq, nullptr, nullptr);
    CHECK(l <= prev + 1e-15);
    CHECK(l >= 0.0);
    prev = l;
  }
}

TEST_CASE("bpr gradients through propagation match finite differences") {
  Rng rng(2718);
  for (int trial = 0; trial < 5; ++trial) {
    const Index m = 3 + static_cast<Index>(rng.uniform_index(4));
    const Index n = 3 + static_cast<Index>(rng.uniform_index(4));
    const Index d = 2 + static_cast<Index>(rng.uniform_index(3));
    std::vector<std::pair<Index, Index>> r_edges;
    for (Index u = 0; u < m; ++u)
      for (Index v = 0; v < n; ++v)
        if (rng.uniform() < 0.45) r_edges.emplace_back(u, v);
    if (r_edges.empty()) r_edges.emplace_back(0, 0);
    std::vector<SocialEdge> s_edges;
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j)
        if (rng.uniform() < 0.4) s_edges.push_back({i, j, 1.0});
    const auto g = bipartite(r_edges, m, n);
    const SocialGraph s = SocialGraph::from_edges(m, s_edges);
    const Propagation prop(s, g, BackboneKind::generic, 2);

    std::vector<BprTriple> batch;
    for (int b = 0; b < 6; ++b)
      batch.push_back({static_cast<Index>(rng.uniform_index(m)), static_cast<Index>(rng.uniform_index(n)),
                       static_cast<Index>(rng.uniform_index(n))});

    EmbeddingState state = init_embeddings(m, n, d, 1000 + trial);
    const auto pq = prop.forward(state.user_base, state.item_base);
    Matrix gp(m, d), gq(n, d);
    bpr_loss(batch, pq.users, pq.items, &gp, &gq);
    Gradients analytic = state.zero_gradients();
    prop.backward(gp, gq, analytic.user, analytic.item);

    const LossFn loss = [&](const EmbeddingState& st) {
      const auto out = prop.forward(st.user_base, st.item_base);
      return bpr_loss(batch, out.users, out.items, nullptr, nullptr);
    };
    CHECK(finite_diff_check(state, loss, analytic, 25, 1e-5, 99 + trial) < 1e-5);
  }
}

TEST_CASE("negative sampling avoids the user's training items") {
  const auto g = bipartite({{0, 0}, {0, 1}, {0, 2}, {1, 0}}, 2, 4);
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const Index v = sample_negative(0, g, rng);
    CHECK(v == 3);  // the only non-interacted item
  }
  for (int k = 0; k < 1000; ++k) {
    const Index v = sample_negative(1, g, rng);
    CHECK(v != 0);
  }
}

TEST_CASE("negative sampling is reproducible and fails on saturated users") {
  const auto g = bipartite({{0, 0}, {0, 1}, {1, 0}}, 2, 2);
  Rng a = make_stream(5, "neg");
  Rng b = make_stream(5, "neg");
  for (int k = 0; k < 100; ++k) CHECK(sample_negative(1, g, a) == sample_negative(1, g, b));
  Rng c(3);
  CHECK_THROWS(sample_negative(0, g, c));  // u0 owns every item
}
