/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include <benchmark/benchmark.h>

#include <numeric>

#include "lfglt/codec.hpp"

using namespace lfglt;

namespace {

ObservedGraph bench_graph(int n, uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const int j = int(rng.next_below(uint64_t(i)));
    A(i, j) = A(j, i) = rng.next_range(0.1, 2.0);
  }
  for (int e = 0; e < 2 * n; ++e) {
    const int i = int(rng.next_below(uint64_t(n)));
    const int j = int(rng.next_below(uint64_t(n)));
    if (i != j) A(i, j) = A(j, i) = rng.next_range(0.1, 2.0);
  }
  ObservedGraph g;
  g.nodes.resize(size_t(n));
  std::iota(g.nodes.begin(), g.nodes.end(), 0);
  g.L = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double deg = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) {
        g.L(i, j) = -A(i, j);
        deg += A(i, j);
      }
    g.L(i, i) = deg + rng.next_range(0.05, 0.5);
  }
  return g;
}

SAIArray bench_sais(int views, int sai, uint64_t seed) {
  CalibrationParams p;
  p.macro_pixel_pitch = views;
  p.row_offset = 1;
  p.views_u = p.views_v = views;
  p.sai_width = p.sai_height = sai;
  SceneSpec spec;
  spec.views_v = spec.views_u = views;
  spec.height = spec.width = sai;
  auto scene = make_scene(spec, seed);
  return decompose(calibrate(synthesize_lenselet(scene, p, seed), p), p);
}

void BM_LiftForwardInverse(benchmark::State &state) {
  const int n = int(state.range(0));
  auto g = bench_graph(n, 1);
  auto plan = LiftPlan::build(g, 2, 4, true);
  SplitMix64 rng(2);
  std::vector<double> f(static_cast<size_t>(n));
  for (auto &v : f) v = rng.next_range(-255, 255);
  for (auto _ : state) {
    auto coeffs = lift_forward(f, plan);
    auto back = lift_inverse(coeffs, plan);
    benchmark::DoNotOptimize(back);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LiftForwardInverse)->Arg(16)->Arg(32)->Arg(64);

void BM_LiftPlanBuild(benchmark::State &state) {
  const int n = int(state.range(0));
  auto g = bench_graph(n, 3);
  for (auto _ : state) {
    auto plan = LiftPlan::build(g, 2, 4, true);
    benchmark::DoNotOptimize(plan);
  }
}
BENCHMARK(BM_LiftPlanBuild)->Arg(16)->Arg(32)->Arg(64);

void BM_ObservedGraphSchur(benchmark::State &state) {
  SplitMix64 rng(4);
  auto topo = TemplateTopology::lattice8(8);
  TemplateGraph g;
  g.topology = topo;
  g.edge_weights.resize(Eigen::Index(topo.edges.size()));
  for (Eigen::Index e = 0; e < g.edge_weights.size(); ++e)
    g.edge_weights[e] = rng.next_range(0.1, 2.0);
  g.self_loops = Eigen::VectorXd::Constant(64, 0.2);
  std::vector<int> occ;
  for (int i = 0; i < 64; ++i)
    if (rng.next_double() < 0.5) occ.push_back(i);
  for (auto _ : state) {
    auto og = observed_graph(g, occ, 8);
    benchmark::DoNotOptimize(og);
  }
}
BENCHMARK(BM_ObservedGraphSchur);

void BM_IntraPredictBlock(benchmark::State &state) {
  auto sais = bench_sais(3, 32, 5);
  const SparseSAI &sai = sais.grid[4];
  SparseSAI decoded = sai; // fully reconstructed neighborhood
  IntraParams ip;
  for (auto _ : state) {
    auto res = intra_predict_block(sai, {16, 16, 8, 8}, decoded, ip);
    benchmark::DoNotOptimize(res);
  }
}
BENCHMARK(BM_IntraPredictBlock);

void BM_EncodeLevels(benchmark::State &state) {
  SplitMix64 rng(6);
  std::vector<int32_t> levels(100000);
  for (auto &v : levels) {
    const double u = rng.next_double();
    v = u < 0.6 ? 0 : int32_t(rng.next_below(64)) - 32;
  }
  for (auto _ : state) {
    auto bytes = encode_levels(levels);
    benchmark::DoNotOptimize(bytes);
  }
  state.SetItemsProcessed(state.iterations() * levels.size());
}
BENCHMARK(BM_EncodeLevels);

void BM_EncodeSai(benchmark::State &state) {
  auto sais = bench_sais(3, int(state.range(0)), 7);
  TrainOptions topts;
  auto bank = train_bank(std::span(sais.grid.data(), 3), topts);
  CodecConfig cfg;
  cfg.qp = 16;
  for (auto _ : state) {
    auto enc = encode(sais, &bank, cfg);
    benchmark::DoNotOptimize(enc);
  }
  state.SetItemsProcessed(state.iterations() * sais.total_pixels());
}
BENCHMARK(BM_EncodeSai)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
