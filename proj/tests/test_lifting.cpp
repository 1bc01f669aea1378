/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lfglt/lifting.hpp"
#include "oracles.hpp"

using namespace lfglt;

namespace {

ObservedGraph graph_from_dense(const Eigen::MatrixXd &L) {
  ObservedGraph g;
  g.L = L;
  g.nodes.resize(size_t(L.rows()));
  std::iota(g.nodes.begin(), g.nodes.end(), 0);
  return g;
}

// Random connected weighted graph with optional self-loops: a random
// spanning tree plus extra edges.
ObservedGraph random_graph(int n, SplitMix64 &rng, double self_loop_hi) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const int j = int(rng.next_below(uint64_t(i)));
    const double w = rng.next_range(0.1, 2.0);
    A(i, j) = A(j, i) = w;
  }
  const int extra = int(rng.next_below(uint64_t(n)));
  for (int e = 0; e < extra; ++e) {
    const int i = int(rng.next_below(uint64_t(n)));
    const int j = int(rng.next_below(uint64_t(n)));
    if (i == j) continue;
    const double w = rng.next_range(0.1, 2.0);
    A(i, j) = A(j, i) = w;
  }
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double deg = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) {
        L(i, j) = -A(i, j);
        deg += A(i, j);
      }
    L(i, i) = deg + (self_loop_hi > 0 ? rng.next_range(0, self_loop_hi) : 0.0);
  }
  return graph_from_dense(L);
}

std::vector<double> random_signal(int n, SplitMix64 &rng, double amp) {
  std::vector<double> f(static_cast<size_t>(n));
  for (auto &v : f) v = rng.next_range(-amp, amp);
  return f;
}

} // namespace

TEST_CASE("bipartition") {
  SUBCASE("equal-weight path: middle node predicts from the ends") {
    Eigen::MatrixXd L(3, 3);
    L << 1, -1, 0, -1, 2, -1, 0, -1, 1;
    auto part = bipartition_mst(graph_from_dense(L));
    CHECK(part.update == std::vector<int>{0, 2});
    CHECK(part.predict == std::vector<int>{1});
  }
  SUBCASE("single node goes to the update set") {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(1, 1);
    auto part = bipartition_mst(graph_from_dense(L));
    CHECK(part.update == std::vector<int>{0});
    CHECK(part.predict.empty());
  }
  SUBCASE("isolated nodes go to the update set") {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(4, 4);
    L(0, 1) = L(1, 0) = -1;
    L(0, 0) = L(1, 1) = 1;
    auto part = bipartition_mst(graph_from_dense(L));
    for (int iso : {2, 3})
      CHECK(std::count(part.update.begin(), part.update.end(), iso) == 1);
  }
  SUBCASE("forest weight equals the brute-force maximum") {
    SplitMix64 rng(41);
    for (int t = 0; t < 50; ++t) {
      const int n = 3 + int(rng.next_below(5)); // up to 7 nodes
      auto g = random_graph(n, rng, 0.0);
      std::vector<std::tuple<int, int, double>> edges;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (g.weight(i, j) > 0) edges.emplace_back(i, j, g.weight(i, j));

      double kruskal = 0;
      for (const auto &[i, j] : max_spanning_forest(g)) kruskal += g.weight(i, j);
      const double brute = oracle::brute_force_max_spanning_weight(n, edges);
      CHECK(kruskal == doctest::Approx(brute).epsilon(1e-12));
    }
  }
  SUBCASE("update and predict partition the nodes, U non-empty") {
    SplitMix64 rng(42);
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + int(rng.next_below(30));
      auto g = random_graph(n, rng, 0.5);
      auto part = bipartition_mst(g);
      CHECK(int(part.update.size() + part.predict.size()) == n);
      CHECK(!part.update.empty());
      std::vector<uint8_t> seen(static_cast<size_t>(n), 0);
      for (int u : part.update) seen[size_t(u)] ^= 1;
      for (int p : part.predict) seen[size_t(p)] ^= 1;
      for (auto s : seen) CHECK(s == 1);
    }
  }
}

TEST_CASE("kron reconnection") {
  SUBCASE("already-bipartite graph keeps its normalized rows") {
    // Star: center node 1 predicts from leaves 0 and 2, self-loop 0.5.
    Eigen::MatrixXd L(3, 3);
    L << 2, -2, 0, -2, 5.5, -3, 0, -3, 3;
    Bipartition part{{0, 2}, {1}};
    auto bg = kron_reconnect(graph_from_dense(L), part, 0);
    REQUIRE(bg.pred_rows.size() == 1);
    REQUIRE(bg.pred_rows[0].size() == 2);
    // A_1u / (D_1 + H_1) with D+H = 5.5.
    CHECK(bg.pred_rows[0][0].second == doctest::Approx(2.0 / 5.5));
    CHECK(bg.pred_rows[0][1].second == doctest::Approx(3.0 / 5.5));
  }
  SUBCASE("3-node chain matches hand Schur elimination") {
    // u(0) - p1(1) - p2(2), w1 = 2, w2 = 3, self-loop 1 on p2.
    Eigen::MatrixXd L(3, 3);
    L << 2, -2, 0, -2, 5, -3, 0, -3, 4;
    Bipartition part{{0}, {1, 2}};
    auto bg = kron_reconnect(graph_from_dense(L), part, 0);
    REQUIRE(bg.pred_rows.size() == 2);
    REQUIRE(bg.pred_rows[0].size() == 1);
    REQUIRE(bg.pred_rows[1].size() == 1);
    CHECK(bg.pred_rows[0][0].second == doctest::Approx(8.0 / 11.0));
    CHECK(bg.pred_rows[1][0].second == doctest::Approx(6.0 / 11.0));
  }
  SUBCASE("unsparsified predictor equals the dense MMSE solve") {
    SplitMix64 rng(43);
    for (int t = 0; t < 100; ++t) {
      const int n = 2 + int(rng.next_below(40));
      auto g = random_graph(n, rng, 1.0);
      auto part = bipartition_mst(g);
      if (part.predict.empty()) continue;
      auto bg = kron_reconnect(g, part, 0);

      const int np = int(bg.p_nodes.size()), nu = int(bg.u_nodes.size());
      Eigen::MatrixXd Lpp(np, np), Lpu(np, nu);
      for (int a = 0; a < np; ++a) {
        for (int b = 0; b < np; ++b)
          Lpp(a, b) = g.L(bg.p_nodes[size_t(a)], bg.p_nodes[size_t(b)]);
        for (int b = 0; b < nu; ++b)
          Lpu(a, b) = g.L(bg.p_nodes[size_t(a)], bg.u_nodes[size_t(b)]);
      }
      Eigen::VectorXd fu(nu);
      for (int b = 0; b < nu; ++b) fu[b] = rng.next_range(-5, 5);
      const Eigen::VectorXd mmse = Lpp.fullPivLu().solve(-Lpu * fu);

      for (int p = 0; p < np; ++p) {
        double pred = 0;
        for (const auto &[u, w] : bg.pred_rows[size_t(p)]) pred += w * fu[u];
        CHECK(std::abs(pred - mmse[p]) < 1e-9);
      }
    }
  }
  SUBCASE("sparsification keeps at most k links and the row sum") {
    SplitMix64 rng(44);
    auto g = random_graph(30, rng, 0.3);
    auto part = bipartition_mst(g);
    auto dense = kron_reconnect(g, part, 0);
    auto sparse = kron_reconnect(g, part, 4);
    for (size_t p = 0; p < sparse.pred_rows.size(); ++p) {
      CHECK(sparse.pred_rows[p].size() <= 4);
      double d = 0, s = 0;
      for (const auto &[u, w] : dense.pred_rows[p]) d += w;
      for (const auto &[u, w] : sparse.pred_rows[p]) s += w;
      if (!sparse.pred_rows[p].empty())
        CHECK(s == doctest::Approx(d).epsilon(1e-9));
    }
  }
}

TEST_CASE("lifting transform") {
  SUBCASE("zero signal maps to zero coefficients") {
    SplitMix64 rng(45);
    auto g = random_graph(20, rng, 0.5);
    auto plan = LiftPlan::build(g, 2, 4, true);
    std::vector<double> zeros(20, 0.0);
    for (double c : lift_forward(zeros, plan)) CHECK(c == 0.0);
  }
  SUBCASE("integer constant on a zero-self-loop graph: zero high bands") {
    SplitMix64 rng(46);
    for (int t = 0; t < 20; ++t) {
      const int n = 2 + int(rng.next_below(30));
      auto g = random_graph(n, rng, 0.0); // combinatorial Laplacian
      auto plan = LiftPlan::build(g, 2, 4, true);
      std::vector<double> f(static_cast<size_t>(n), 37.0);
      auto coeffs = lift_forward(f, plan);
      for (size_t i = plan.band_sizes[0]; i < coeffs.size(); ++i)
        CHECK(coeffs[i] == 0.0);
    }
  }
  SUBCASE("round trip is exact in both rounding modes") {
    SplitMix64 rng(47);
    for (int t = 0; t < 200; ++t) {
      const int n = 1 + int(rng.next_below(64));
      auto g = random_graph(n, rng, rng.next_double() < 0.5 ? 0.8 : 0.0);
      auto f = random_signal(n, rng, 300.0);
      for (bool rounded : {true, false}) {
        auto plan = LiftPlan::build(g, 2, 4, rounded);
        auto coeffs = lift_forward(f, plan);
        CHECK(coeffs.size() == size_t(n)); // critical sampling
        CHECK(plan.band_sizes[0] + plan.band_sizes[1] + plan.band_sizes[2] ==
              size_t(n));
        auto back = lift_inverse(coeffs, plan);
        for (int i = 0; i < n; ++i)
          CHECK(std::abs(back[size_t(i)] - f[size_t(i)]) < 1e-10);
      }
    }
  }
  SUBCASE("round trip with externally chosen random partitions") {
    SplitMix64 rng(48);
    for (int t = 0; t < 100; ++t) {
      const int n = 2 + int(rng.next_below(40));
      auto g = random_graph(n, rng, 0.5);
      Bipartition part;
      for (int i = 0; i < n; ++i)
        (rng.next_double() < 0.5 ? part.update : part.predict).push_back(i);
      if (part.update.empty()) part.update.push_back(part.predict.back()),
          part.predict.pop_back();
      std::vector<Bipartition> parts = {part};
      auto plan = LiftPlan::build_with_partitions(g, parts, 4, true);
      auto f = random_signal(n, rng, 100.0);
      auto back = lift_inverse(lift_forward(f, plan), plan);
      for (int i = 0; i < n; ++i)
        CHECK(std::abs(back[size_t(i)] - f[size_t(i)]) < 1e-10);
    }
  }
  SUBCASE("quantized coefficients respect the interval-propagation bound") {
    SplitMix64 rng(49);
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + int(rng.next_below(40));
      auto g = random_graph(n, rng, 0.4);
      auto plan = LiftPlan::build(g, 2, 4, true);
      auto f = random_signal(n, rng, 200.0);
      const int qp = 16;
      const double step = qp_step(qp);

      auto coeffs = lift_forward(f, plan);
      auto rec = lift_inverse(dequantize(quantize(coeffs, qp), qp), plan);

      // Oracle: propagate the per-coefficient bound step/2 through the
      // inverse ladder; every rounded op can add at most one extra unit.
      std::vector<double> bound(static_cast<size_t>(n), 0.0);
      for (size_t i = 0; i < plan.band_sizes[0]; ++i)
        bound[size_t(plan.scan[i])] = step / 2;
      std::vector<std::vector<double>> high_bound(plan.levels.size());
      for (size_t lvl = 0; lvl < plan.levels.size(); ++lvl)
        high_bound[lvl].assign(plan.levels[lvl].bg.p_nodes.size(), step / 2);

      for (size_t lvl = plan.levels.size(); lvl-- > 0;) {
        const auto &bp = plan.levels[lvl].bg;
        for (size_t u = 0; u < bp.u_nodes.size(); ++u) {
          double acc = 0;
          for (const auto &[p, w] : bp.upd_rows[u])
            acc += std::abs(w) * high_bound[lvl][size_t(p)];
          bound[size_t(bp.u_nodes[u])] += acc + 1.0;
        }
        for (size_t p = 0; p < bp.p_nodes.size(); ++p) {
          double acc = 0;
          for (const auto &[u, w] : bp.pred_rows[p])
            acc += std::abs(w) * bound[size_t(bp.u_nodes[size_t(u)])];
          bound[size_t(bp.p_nodes[p])] = high_bound[lvl][p] + acc + 1.0;
        }
      }
      for (int i = 0; i < n; ++i)
        CHECK(std::abs(rec[size_t(i)] - f[size_t(i)]) <=
              bound[size_t(i)] + 1e-9);
    }
  }
}

TEST_CASE("quantizer") {
  SUBCASE("QP 4 has unit step and round-trips integers") {
    CHECK(qp_step(4) == 1.0);
    std::vector<double> c = {-5, 0, 3, 17, -123};
    auto lv = quantize(c, 4);
    auto back = dequantize(lv, 4);
    for (size_t i = 0; i < c.size(); ++i) CHECK(back[i] == c[i]);
  }
  SUBCASE("QP 16: step 4, c = 10 quantizes half away from zero") {
    CHECK(qp_step(16) == doctest::Approx(4.0));
    std::vector<double> c = {10.0, -10.0};
    auto lv = quantize(c, 16);
    CHECK(lv[0] == 3);
    CHECK(lv[1] == -3);
    auto back = dequantize(lv, 16);
    CHECK(back[0] == doctest::Approx(12.0));
    CHECK(std::abs(back[0] - c[0]) <= qp_step(16) / 2);
  }
  SUBCASE("error is bounded by half a step everywhere") {
    SplitMix64 rng(50);
    for (int t = 0; t < 1000; ++t) {
      const int qp = 4 + int(rng.next_below(33));
      const double c = rng.next_range(-1000, 1000);
      auto back = dequantize(quantize(std::span(&c, 1), qp), qp);
      CHECK(std::abs(back[0] - c) <= qp_step(qp) / 2 + 1e-12);
    }
  }
  SUBCASE("QP outside [4, 36] is rejected") {
    CHECK_THROWS_AS(qp_step(3), CodecError);
    CHECK_THROWS_AS(qp_step(37), CodecError);
  }
}

TEST_CASE("scan order is low band, then level-2, then level-1 highs") {
  SplitMix64 rng(51);
  auto g = random_graph(24, rng, 0.3);
  auto plan = LiftPlan::build(g, 2, 4, true);
  REQUIRE(plan.levels.size() == 2);
  CHECK(plan.band_sizes[0] == plan.levels[1].part.update.size());
  CHECK(plan.band_sizes[1] == plan.levels[1].part.predict.size());
  CHECK(plan.band_sizes[2] == plan.levels[0].part.predict.size());
  // Each band is sorted by node id.
  size_t pos = 0;
  for (int b = 0; b < 3; ++b) {
    for (size_t i = 1; i < plan.band_sizes[size_t(b)]; ++i)
      CHECK(plan.scan[pos + i] > plan.scan[pos + i - 1]);
    pos += plan.band_sizes[size_t(b)];
  }
}
