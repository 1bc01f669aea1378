/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

namespace lfglt {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr uint8_t kTopologyLattice8 = 1;
constexpr uint8_t kBankVersion = 1;

} // namespace

ModeId classify_block(const TensorEigen &eig, double p, double T) {
  const double ratio = (eig.lambda2 + p) / (eig.lambda1 + p);
  if (ratio < T) return ModeId::DC;

  // Edge angle of e1 against the horizontal axis, reduced modulo pi into the
  // contiguous bin window [-7pi/16, 9pi/16). The eight pi/8-wide bins tile
  // the window exactly, so every angle lands in exactly one of them.
  double gamma = std::atan2(eig.e1.y, eig.e1.x);
  const double lo = -7.0 * kPi / 16.0;
  gamma -= kPi * std::floor((gamma - lo) / kPi);
  int bin = int(std::floor((gamma - lo) / (kPi / 8.0)));
  bin = std::clamp(bin, 0, 7);
  return static_cast<ModeId>(bin + 1);
}

TemplateTopology TemplateTopology::lattice8(int side) {
  TemplateTopology t;
  t.id = kTopologyLattice8;
  t.side = side;
  t.n = side * side;
  auto at = [side](int r, int c) { return r * side + c; };
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c + 1 < side) t.edges.emplace_back(at(r, c), at(r, c + 1));
      if (r + 1 < side) t.edges.emplace_back(at(r, c), at(r + 1, c));
      if (r + 1 < side && c + 1 < side)
        t.edges.emplace_back(at(r, c), at(r + 1, c + 1));
      if (r + 1 < side && c > 0) t.edges.emplace_back(at(r, c), at(r + 1, c - 1));
    }
  }
  std::sort(t.edges.begin(), t.edges.end());
  return t;
}

Eigen::MatrixXd TemplateGraph::laplacian() const {
  const int n = topology.node_count();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  for (size_t e = 0; e < topology.edges.size(); ++e) {
    const auto [i, j] = topology.edges[e];
    const double w = edge_weights[Eigen::Index(e)];
    Q(i, j) -= w;
    Q(j, i) -= w;
    Q(i, i) += w;
    Q(j, j) += w;
  }
  for (int i = 0; i < n; ++i) Q(i, i) += self_loops[i];
  return Q;
}

void CovarianceAccumulator::add(std::span<const double> values,
                                std::span<const uint8_t> mask) {
  if (int(values.size()) != n_ || int(mask.size()) != n_)
    fail(Err::ShapeMismatch, "observation length does not match accumulator");
  for (int a = 0; a < n_; ++a) {
    if (!mask[size_t(a)]) continue;
    for (int b = a; b < n_; ++b) {
      if (!mask[size_t(b)]) continue;
      sum_(a, b) += values[size_t(a)] * values[size_t(b)];
      count_(a, b) += 1.0;
    }
  }
  ++samples_;
}

void CovarianceAccumulator::merge(const CovarianceAccumulator &other) {
  if (other.n_ != n_)
    fail(Err::ShapeMismatch, "accumulator dimensions differ");
  sum_ += other.sum_;
  count_ += other.count_;
  samples_ += other.samples_;
}

Eigen::MatrixXd CovarianceAccumulator::estimate(
    Eigen::MatrixXd *pair_observed) const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n_, n_);
  if (pair_observed) *pair_observed = Eigen::MatrixXd::Zero(n_, n_);
  for (int a = 0; a < n_; ++a) {
    for (int b = a; b < n_; ++b) {
      if (count_(a, b) > 0) {
        const double v = sum_(a, b) / count_(a, b);
        S(a, b) = v;
        S(b, a) = v;
        if (pair_observed) {
          (*pair_observed)(a, b) = 1;
          (*pair_observed)(b, a) = 1;
        }
      }
    }
  }
  return S;
}

namespace {

double laplacian_objective(const Eigen::MatrixXd &Q, const Eigen::MatrixXd &S) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Q);
  if (ldlt.info() != Eigen::Success)
    return -std::numeric_limits<double>::infinity();
  const auto d = ldlt.vectorD();
  double logdet = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] <= 0) return -std::numeric_limits<double>::infinity();
    logdet += std::log(d[i]);
  }
  return logdet - Q.cwiseProduct(S).sum();
}

} // namespace

LearnResult learn_laplacian(const Eigen::MatrixXd &S,
                            const TemplateTopology &topology,
                            const std::vector<uint8_t> &edge_mask,
                            const LearnOptions &opts) {
  const int n = topology.node_count();
  const int m = int(topology.edges.size());
  if (S.rows() != n || S.cols() != n)
    fail(Err::ShapeMismatch, "covariance does not match topology");
  if (!edge_mask.empty() && int(edge_mask.size()) != m)
    fail(Err::ShapeMismatch, "edge mask does not match topology");

  double reg = std::max(opts.reg_scale * S.trace() / n, 1e-8);

  LearnResult result;
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    const Eigen::MatrixXd SL = S + reg * Eigen::MatrixXd::Identity(n, n);

    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) h[i] = 1.0 / SL(i, i);

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) Q(i, i) = h[i];
    Eigen::MatrixXd Qinv = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) Qinv(i, i) = 1.0 / h[i];

    // Single-coordinate objective in the new value u, with the coordinate's
    // rank-one term removed from Q: log(1 + u*qt) - u*s, maximized at
    // u = 1/s - 1/qt and projected onto u >= 0.
    auto update_coord = [&](int i, int j, double u_old) -> double {
      // qb = b^T Qinv b for b = e_i - e_j (edges) or e_i (self-loops, j < 0)
      double qb, s;
      if (j >= 0) {
        qb = Qinv(i, i) + Qinv(j, j) - 2 * Qinv(i, j);
        s = SL(i, i) + SL(j, j) - 2 * SL(i, j);
      } else {
        qb = Qinv(i, i);
        s = SL(i, i);
      }
      if (!(s > 1e-12)) return u_old; // unbounded direction, keep current

      const double denom = 1.0 - u_old * qb;
      double u_new;
      if (denom > 1e-12) {
        const double qt = qb / denom;
        u_new = std::max(0.0, 1.0 / s - 1.0 / qt);
      } else {
        // Removing this coordinate makes Q singular along b.
        u_new = 1.0 / s;
      }

      const double delta = u_new - u_old;
      if (std::abs(delta) < 1e-15) return u_old;

      // Apply Q += delta * b b^T and the matching Sherman-Morrison downdate.
      const double factor = 1.0 + delta * qb;
      if (factor > 1e-9) {
        Eigen::VectorXd v = Qinv.col(i);
        if (j >= 0) v -= Qinv.col(j);
        Qinv.noalias() -= (delta / factor) * (v * v.transpose());
      } else {
        // Fall back to a full refresh below by poisoning the inverse.
        Qinv.setConstant(std::numeric_limits<double>::quiet_NaN());
      }
      if (j >= 0) {
        Q(i, i) += delta;
        Q(j, j) += delta;
        Q(i, j) -= delta;
        Q(j, i) -= delta;
      } else {
        Q(i, i) += delta;
      }
      if (!std::isfinite(Qinv(0, 0)))
        Qinv = Q.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
      return u_new;
    };

    double prev_obj = laplacian_objective(Q, SL);
    bool singular = !std::isfinite(prev_obj);
    bool converged = false;
    int sweep = 0;
    std::vector<double> trace;

    while (!singular && !converged && sweep < opts.max_sweeps) {
      ++sweep;
      for (int e = 0; e < m; ++e) {
        if (!edge_mask.empty() && !edge_mask[size_t(e)]) continue;
        const auto [i, j] = topology.edges[size_t(e)];
        w[e] = update_coord(i, j, w[e]);
      }
      for (int i = 0; i < n; ++i) h[i] = update_coord(i, -1, h[i]);

      // Refresh the inverse once per sweep to bound rank-one drift.
      Qinv = Q.ldlt().solve(Eigen::MatrixXd::Identity(n, n));

      const double obj = laplacian_objective(Q, SL);
      if (!std::isfinite(obj)) {
        singular = true;
        break;
      }
      trace.push_back(obj);
      if (std::abs(obj - prev_obj) <
          opts.tol * std::max(1.0, std::abs(prev_obj)))
        converged = true;
      prev_obj = obj;
    }

    if (!singular) {
      result.graph.topology = topology;
      result.graph.edge_weights = w;
      result.graph.self_loops = h;
      result.converged = converged;
      result.sweeps = sweep;
      result.objective = prev_obj;
      result.objective_trace = std::move(trace);
      return result;
    }
    reg *= 10.0; // SingularQ: escalate the loading and retry
  }
  fail(Err::SingularMatrix, "laplacian learning failed to stay positive definite");
}

Eigen::MatrixXd observed_precision(const Eigen::MatrixXd &Q,
                                   const std::vector<int> &observed) {
  const int n = int(Q.rows());
  std::vector<uint8_t> is_obs(size_t(n), 0);
  for (int i : observed) {
    if (i < 0 || i >= n) fail(Err::InvalidArgument, "observed index out of range");
    is_obs[size_t(i)] = 1;
  }
  std::vector<int> missing;
  for (int i = 0; i < n; ++i)
    if (!is_obs[size_t(i)]) missing.push_back(i);

  const int no = int(observed.size());
  const int nm = int(missing.size());
  Eigen::MatrixXd Qoo(no, no);
  for (int a = 0; a < no; ++a)
    for (int b = 0; b < no; ++b) Qoo(a, b) = Q(observed[size_t(a)], observed[size_t(b)]);
  if (nm == 0) return Qoo;

  Eigen::MatrixXd Qmm(nm, nm), Qmo(nm, no);
  for (int a = 0; a < nm; ++a) {
    for (int b = 0; b < nm; ++b) Qmm(a, b) = Q(missing[size_t(a)], missing[size_t(b)]);
    for (int b = 0; b < no; ++b) Qmo(a, b) = Q(missing[size_t(a)], observed[size_t(b)]);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Qmm);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any()) {
    Qmm += 1e-8 * Eigen::MatrixXd::Identity(nm, nm);
    ldlt.compute(Qmm);
    if (ldlt.info() != Eigen::Success)
      fail(Err::SingularMatrix, "Q_MM not factorizable");
  }
  Eigen::MatrixXd X = ldlt.solve(Qmo);
  Eigen::MatrixXd L = Qoo - Qmo.transpose() * X;
  return 0.5 * (L + L.transpose());
}

ObservedGraph sparsify_precision(const Eigen::MatrixXd &dense,
                                 std::vector<int> nodes, int keep_links) {
  const int m = int(dense.rows());
  if (int(nodes.size()) != m)
    fail(Err::ShapeMismatch, "node list does not match precision size");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd H(m);
  for (int i = 0; i < m; ++i) {
    double wsum = 0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double w = std::max(-dense(i, j), 0.0);
      A(i, j) = w;
      wsum += w;
    }
    H[i] = std::max(dense(i, i) - wsum, 0.0);
  }

  // Per-node retention of the strongest incident links; an edge survives if
  // either endpoint keeps it.
  Eigen::MatrixXd keep = Eigen::MatrixXd::Zero(m, m);
  if (keep_links > 0 && keep_links < m - 1) {
    std::vector<std::pair<double, int>> order;
    for (int i = 0; i < m; ++i) {
      order.clear();
      for (int j = 0; j < m; ++j)
        if (j != i && A(i, j) > 0) order.emplace_back(-A(i, j), j);
      std::sort(order.begin(), order.end());
      const int take = std::min<int>(keep_links, int(order.size()));
      for (int t = 0; t < take; ++t) {
        keep(i, order[size_t(t)].second) = 1;
        keep(order[size_t(t)].second, i) = 1;
      }
    }
  } else {
    keep.setOnes();
  }

  ObservedGraph g;
  g.nodes = std::move(nodes);
  g.L = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    double deg = 0;
    for (int j = 0; j < m; ++j) {
      if (j == i || keep(i, j) == 0 || A(i, j) <= 0) continue;
      g.L(i, j) = -A(i, j);
      deg += A(i, j);
    }
    g.L(i, i) = deg + H[i];
  }
  return g;
}

ObservedGraph observed_graph(const TemplateGraph &tmpl,
                             const std::vector<int> &occupied,
                             int keep_links) {
  if (occupied.empty()) fail(Err::InvalidArgument, "empty occupancy");
  Eigen::MatrixXd dense = observed_precision(tmpl.laplacian(), occupied);
  return sparsify_precision(dense, occupied, keep_links);
}

ObservedGraph distance_graph(const std::vector<std::pair<int, int>> &positions,
                             std::vector<int> nodes, int k) {
  const int m = int(positions.size());
  if (m < 1) fail(Err::InvalidArgument, "distance graph needs at least 1 node");
  if (nodes.empty()) {
    nodes.resize(size_t(m));
    for (int i = 0; i < m; ++i) nodes[size_t(i)] = i;
  }

  ObservedGraph g;
  g.nodes = std::move(nodes);
  g.L = Eigen::MatrixXd::Zero(m, m);
  if (m == 1) return g;

  const int kk = std::min(k, m - 1);
  std::vector<std::vector<int>> nn(static_cast<size_t>(m));
  double dist_sum = 0;
  size_t dist_count = 0;
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < m; ++i) {
    order.clear();
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      const double dr = positions[size_t(i)].first - positions[size_t(j)].first;
      const double dc = positions[size_t(i)].second - positions[size_t(j)].second;
      order.emplace_back(dr * dr + dc * dc, j);
    }
    std::sort(order.begin(), order.end());
    for (int t = 0; t < kk; ++t) {
      nn[size_t(i)].push_back(order[size_t(t)].second);
      dist_sum += std::sqrt(order[size_t(t)].first);
      ++dist_count;
    }
  }
  const double sigma = dist_sum / double(dist_count);
  const double denom = 2.0 * sigma * sigma;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j : nn[size_t(i)]) {
      const double dr = positions[size_t(i)].first - positions[size_t(j)].first;
      const double dc = positions[size_t(i)].second - positions[size_t(j)].second;
      const double w = std::exp(-(dr * dr + dc * dc) / denom);
      A(i, j) = w;
      A(j, i) = w;
    }
  }
  for (int i = 0; i < m; ++i) {
    double deg = 0;
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      g.L(i, j) = -A(i, j);
      deg += A(i, j);
    }
    g.L(i, i) = deg; // no self-loops in the distance baseline
  }
  return g;
}

std::vector<uint8_t> ModeGraphBank::serialize() const {
  ByteWriter w;
  w.magic("LFGB");
  w.u8(kBankVersion);
  w.u8(uint8_t(meta.block_size));
  w.u8(meta.topology_id);
  for (int m = 0; m < kModeCount; ++m) {
    const TemplateGraph &g = modes[size_t(m)];
    const int n = g.topology.node_count();
    w.u8(uint8_t(m));
    w.u16(uint16_t(n));
    w.u32(uint32_t(g.topology.edges.size()));
    for (size_t e = 0; e < g.topology.edges.size(); ++e) {
      w.u16(uint16_t(g.topology.edges[e].first));
      w.u16(uint16_t(g.topology.edges[e].second));
      w.f64(g.edge_weights[Eigen::Index(e)]);
    }
    for (int i = 0; i < n; ++i) w.f64(g.self_loops[i]);
  }
  return w.take();
}

ModeGraphBank ModeGraphBank::deserialize(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  r.expect_magic("LFGB");
  if (r.u8() != kBankVersion)
    fail(Err::VersionUnsupported, "unsupported bank version");
  ModeGraphBank bank;
  bank.meta.block_size = r.u8();
  bank.meta.topology_id = r.u8();
  for (int m = 0; m < kModeCount; ++m) {
    if (r.u8() != uint8_t(m)) fail(Err::CorruptStream, "bank mode order");
    const int n = r.u16();
    const int side = int(std::lround(std::sqrt(double(n))));
    if (side * side != n) fail(Err::CorruptStream, "bank node count not square");
    const uint32_t ec = r.u32();
    TemplateGraph g;
    g.topology.id = bank.meta.topology_id;
    g.topology.side = side;
    g.topology.n = n;
    g.topology.edges.resize(ec);
    g.edge_weights.resize(Eigen::Index(ec));
    for (uint32_t e = 0; e < ec; ++e) {
      const int i = r.u16();
      const int j = r.u16();
      if (i >= n || j >= n || i == j)
        fail(Err::CorruptStream, "bank edge out of range");
      g.topology.edges[e] = {i, j};
      g.edge_weights[Eigen::Index(e)] = r.f64();
    }
    g.self_loops.resize(n);
    for (int i = 0; i < n; ++i) g.self_loops[i] = r.f64();
    bank.modes[size_t(m)] = std::move(g);
  }
  return bank;
}

void write_bank(const std::string &path, const ModeGraphBank &bank) {
  auto bytes = bank.serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char *>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) fail(Err::IoFailure, "write failed for " + path);
}

ModeGraphBank read_bank(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return ModeGraphBank::deserialize(bytes);
}

namespace {

// Distance-weighted template for modes that saw no training data: the 4-NN
// distance graph of the full lattice (unit spacing, so every kept link has
// weight exp(-1/2)), expressed on the base topology.
TemplateGraph fallback_template(const TemplateTopology &topology) {
  const int side = topology.side;
  TemplateGraph t;
  t.topology = topology;
  t.fallback = true;
  t.edge_weights = Eigen::VectorXd::Zero(Eigen::Index(topology.edges.size()));
  t.self_loops = Eigen::VectorXd::Zero(topology.node_count());
  const double w = std::exp(-0.5);
  for (size_t e = 0; e < topology.edges.size(); ++e) {
    const auto [i, j] = topology.edges[e];
    const int ri = i / side, ci = i % side, rj = j / side, cj = j % side;
    if (ri == rj || ci == cj) t.edge_weights[Eigen::Index(e)] = w;
  }
  return t;
}

} // namespace

ModeGraphBank train_bank(std::span<const SparseSAI> sais,
                         const TrainOptions &opts) {
  if (sais.empty()) fail(Err::InvalidArgument, "training set is empty");
  const int bs = opts.intra.block_size;
  const TemplateTopology topology = TemplateTopology::lattice8(bs);
  const int n = topology.node_count();

  std::array<CovarianceAccumulator, kModeCount> acc;
  acc.fill(CovarianceAccumulator(n));

  std::vector<double> values(static_cast<size_t>(n));
  std::vector<uint8_t> mask(static_cast<size_t>(n));

  for (const SparseSAI &sai : sais) {
    // The training front-end replays a lossless encode: blocks are predicted
    // from the causally reconstructed buffer, then copied in verbatim. The
    // buffer starts empty so prediction only ever sees coded pixels.
    SparseSAI decoded(sai.width(), sai.height());
    for (int r0 = 0; r0 < sai.height(); r0 += bs) {
      for (int c0 = 0; c0 < sai.width(); c0 += bs) {
        const BlockRect blk{r0, c0, bs, bs};
        IntraResult ir = intra_predict_block(sai, blk, decoded, opts.intra);
        const ModeId mode = classify_block(ir.eig, opts.p_dc, opts.T);

        std::fill(values.begin(), values.end(), 0.0);
        std::fill(mask.begin(), mask.end(), 0);
        bool any = false;
        for (const auto &px : ir.block.pixels) {
          if (px.color != Color::G) continue;
          const int t = (px.row - r0) * bs + (px.col - c0);
          values[size_t(t)] = double(px.residual);
          mask[size_t(t)] = 1;
          any = true;
        }
        if (any) acc[size_t(uint8_t(mode))].add(values, mask);

        for (const auto &px : ir.block.pixels)
          decoded.set(px.row, px.col, px.color, sai.value(px.row, px.col));
      }
    }
  }

  ModeGraphBank bank;
  bank.meta.block_size = bs;
  bank.meta.topology_id = topology.id;

  auto learn_mode = [&](int m) {
    if (acc[size_t(m)].samples() == 0) {
      bank.modes[size_t(m)] = fallback_template(topology);
      bank.meta.fallback[size_t(m)] = 1;
      bank.meta.sample_counts[size_t(m)] = 0;
      return;
    }
    Eigen::MatrixXd pair_seen;
    Eigen::MatrixXd S = acc[size_t(m)].estimate(&pair_seen);
    std::vector<uint8_t> edge_mask(topology.edges.size(), 1);
    for (size_t e = 0; e < topology.edges.size(); ++e) {
      const auto [i, j] = topology.edges[e];
      if (pair_seen(i, j) == 0) edge_mask[e] = 0;
    }
    LearnResult res = learn_laplacian(S, topology, edge_mask, opts.learn);
    bank.modes[size_t(m)] = std::move(res.graph);
    bank.meta.sample_counts[size_t(m)] = acc[size_t(m)].samples();
  };

  const int workers = std::clamp(opts.threads, 1, kModeCount);
  if (workers <= 1) {
    for (int m = 0; m < kModeCount; ++m) learn_mode(m);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int m = next.fetch_add(1); m < kModeCount; m = next.fetch_add(1))
          learn_mode(m);
      });
    for (auto &th : pool) th.join();
  }
  return bank;
}

} // namespace lfglt
