/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "lfglt/mode.hpp"
#include "lfglt/sai.hpp"
#include "lfglt/tensor.hpp"

namespace lfglt {

// Residual-block class from the eigen pair of its (estimated) structure
// tensor: DC when no direction dominates, otherwise the directional bin
// containing the edge angle. Total over all inputs.
ModeId classify_block(const TensorEigen &eig, double p, double T);

// Candidate edge set over the n-node block template.
struct TemplateTopology {
  uint8_t id = 0;
  int n = 64;
  int side = 8; // n == side * side for block templates
  std::vector<std::pair<int, int>> edges; // (i, j), i < j, template indices

  int node_count() const { return n; }
  // 8-connected lattice: horizontal, vertical and both diagonals.
  static TemplateTopology lattice8(int side);
};

// Learned generalized Laplacian Q = B dg(w) B^T + dg(h) over the template.
struct TemplateGraph {
  TemplateTopology topology;
  Eigen::VectorXd edge_weights; // >= 0, one per topology edge
  Eigen::VectorXd self_loops;   // >= 0, one per node
  bool fallback = false;        // true when learned from no data

  Eigen::MatrixXd laplacian() const;
};

// Plug-in covariance from incomplete observations (zero-mean assumption):
// pairwise sums normalized by pairwise observation counts. Merging two
// accumulators is exact, so training shards can combine.
class CovarianceAccumulator {
public:
  explicit CovarianceAccumulator(int n = 0)
      : n_(n), sum_(Eigen::MatrixXd::Zero(n, n)),
        count_(Eigen::MatrixXd::Zero(n, n)) {}

  int dim() const { return n_; }
  size_t samples() const { return samples_; }

  // values[i] is meaningful where mask[i] != 0.
  void add(std::span<const double> values, std::span<const uint8_t> mask);
  void merge(const CovarianceAccumulator &other);

  // S~ plus a per-pair observation flag; never-observed pairs come back as 0.
  Eigen::MatrixXd estimate(Eigen::MatrixXd *pair_observed = nullptr) const;

private:
  int n_ = 0;
  Eigen::MatrixXd sum_;
  Eigen::MatrixXd count_;
  size_t samples_ = 0;
};

struct LearnOptions {
  double tol = 1e-7;      // relative objective change per sweep
  int max_sweeps = 500;
  double reg_scale = 1e-4; // diagonal loading: reg_scale * trace(S)/n
  int max_retries = 3;     // reg escalations on a singular iterate
};

struct LearnResult {
  TemplateGraph graph;
  bool converged = false;
  int sweeps = 0;
  double objective = 0;
  std::vector<double> objective_trace; // one entry per sweep
};

// Constrained ML fit of the generalized Laplacian by projected
// block-coordinate ascent on log det(Q) - tr(Q S).
// edge_mask[e] == 0 freezes edge e at weight zero (never-observed pairs).
LearnResult learn_laplacian(const Eigen::MatrixXd &S,
                            const TemplateTopology &topology,
                            const std::vector<uint8_t> &edge_mask,
                            const LearnOptions &opts = {});

// Precision over the observed subset: Schur complement of Q_MM in Q.
Eigen::MatrixXd observed_precision(const Eigen::MatrixXd &Q,
                                   const std::vector<int> &observed);

// Per-block graph over the occupied positions of one color plane.
struct ObservedGraph {
  std::vector<int> nodes;  // template indices, ascending
  Eigen::MatrixXd L;       // operative generalized Laplacian over nodes

  int size() const { return int(nodes.size()); }
  double weight(int i, int j) const { return std::max(-L(i, j), 0.0); }
};

// Adjacency/self-loop form of a dense precision with per-node retention of
// the `keep_links` strongest incident links.
ObservedGraph sparsify_precision(const Eigen::MatrixXd &dense,
                                 std::vector<int> nodes, int keep_links);

ObservedGraph observed_graph(const TemplateGraph &tmpl,
                             const std::vector<int> &occupied,
                             int keep_links = 8);

// Non-learned baseline: k-nearest-neighbor graph with Gaussian distance
// weights and no self-loops.
ObservedGraph distance_graph(const std::vector<std::pair<int, int>> &positions,
                             std::vector<int> nodes, int k = 4);

struct BankMeta {
  int block_size = 8;
  uint8_t topology_id = 0;
  std::array<uint64_t, kModeCount> sample_counts{};
  std::array<uint8_t, kModeCount> fallback{};
};

struct ModeGraphBank {
  std::array<TemplateGraph, kModeCount> modes;
  BankMeta meta;

  const TemplateGraph &graph(ModeId m) const { return modes[uint8_t(m)]; }

  std::vector<uint8_t> serialize() const;
  static ModeGraphBank deserialize(std::span<const uint8_t> bytes);
  uint64_t hash() const { return fnv1a64(serialize()); }
};

void write_bank(const std::string &path, const ModeGraphBank &bank);
ModeGraphBank read_bank(const std::string &path);

struct TrainOptions {
  IntraParams intra;
  double p_dc = 0.001; // p of the classification ratio
  double T = 1.5;
  LearnOptions learn;
  int threads = 1;
};

// Run the intra front-end over training SAIs, classify residual blocks,
// accumulate per-mode plug-in covariances of the G residuals and learn the
// nine template Laplacians. Modes with no samples fall back to a distance
// template, recorded in the metadata.
ModeGraphBank train_bank(std::span<const SparseSAI> sais,
                         const TrainOptions &opts);

} // namespace lfglt
