/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <span>
#include <vector>

#include "lfglt/graph.hpp"

namespace lfglt {

// Update/prediction split of one graph's nodes (local indices, ascending).
struct Bipartition {
  std::vector<int> update;
  std::vector<int> predict;
};

// Kruskal maximum-weight spanning forest (ties by smaller node indices).
std::vector<std::pair<int, int>> max_spanning_forest(const ObservedGraph &g);

// Maximum spanning tree 2-coloring: per connected component, BFS from the
// tree node of largest degree; the root and even-hop nodes predict, odd-hop
// nodes update. Isolated nodes go to the update set so their value passes
// straight to the low band.
Bipartition bipartition_mst(const ObservedGraph &g);

// Bipartite reconnection of the prediction set onto the update set. Row p of
// the prediction weights is the Kron-reduced (MMSE) row -L_PP^{-1} L_PU,
// optionally sparsified to the k strongest links with the row sum preserved.
// Update rows are half the row-normalized transpose.
struct BipartiteGraph {
  std::vector<int> p_nodes; // local node ids, ascending
  std::vector<int> u_nodes;
  // per p: (index into u_nodes, weight)
  std::vector<std::vector<std::pair<int, double>>> pred_rows;
  // per u: (index into p_nodes, weight)
  std::vector<std::vector<std::pair<int, double>>> upd_rows;
};

BipartiteGraph kron_reconnect(const ObservedGraph &g, const Bipartition &part,
                              int k_sparse);

struct LiftLevel {
  std::vector<int> active; // local node ids this level transforms
  Bipartition part;
  BipartiteGraph bg;
};

// Precomputed decomposition structure for one observed graph. `rounded`
// selects integer lifting (each predict/update contribution rounded before
// use), which maps integer signals to integer coefficients and is what the
// codec runs; either setting inverts exactly.
struct LiftPlan {
  int n = 0;
  bool rounded = true;
  std::vector<LiftLevel> levels;
  std::vector<int> scan;              // coefficient order: node ids
  std::array<size_t, 3> band_sizes{}; // low, high level 2, high level 1

  static LiftPlan build(const ObservedGraph &g, int levels, int k_sparse,
                        bool rounded = true);
  // Test hook: run with externally chosen partitions.
  static LiftPlan build_with_partitions(const ObservedGraph &g,
                                        std::span<const Bipartition> parts,
                                        int k_sparse, bool rounded = true);
};

// signal[i] lives on local node i; returns coefficients in scan order
// (low band, then level-2 high band, then level-1 high band, each sorted by
// node id). Critically sampled: output size equals input size.
std::vector<double> lift_forward(std::span<const double> signal,
                                 const LiftPlan &plan);
std::vector<double> lift_inverse(std::span<const double> coeffs,
                                 const LiftPlan &plan);

// Uniform mid-tread quantizer, step 2^((QP-4)/6), rounding half away from
// zero. QP 4 is transparent on integer coefficients.
double qp_step(int qp);
std::vector<int32_t> quantize(std::span<const double> coeffs, int qp);
std::vector<double> dequantize(std::span<const int32_t> levels, int qp);

} // namespace lfglt
