/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace lfglt {

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(size_t(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[size_t(x)] != x) {
      parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
      x = parent[size_t(x)];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[size_t(b)] = a;
    return true;
  }
};

} // namespace

std::vector<std::pair<int, int>> max_spanning_forest(const ObservedGraph &g) {
  const int n = g.size();
  struct Edge {
    double w;
    int i, j;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double w = g.weight(i, j);
      if (w > 0) edges.push_back({w, i, j});
    }
  // Maximum-weight spanning forest; ties broken by smaller node indices.
  std::sort(edges.begin(), edges.end(), [](const Edge &a, const Edge &b) {
    if (a.w != b.w) return a.w > b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  UnionFind uf(n);
  std::vector<std::pair<int, int>> out;
  for (const Edge &e : edges)
    if (uf.unite(e.i, e.j)) out.emplace_back(e.i, e.j);
  return out;
}

Bipartition bipartition_mst(const ObservedGraph &g) {
  const int n = g.size();
  Bipartition part;
  if (n == 0) return part;

  std::vector<std::vector<int>> tree(static_cast<size_t>(n));
  for (const auto &[i, j] : max_spanning_forest(g)) {
    tree[size_t(i)].push_back(j);
    tree[size_t(j)].push_back(i);
  }

  std::vector<int> state(size_t(n), -1); // -1 unseen, 0 update, 1 predict
  for (int start = 0; start < n; ++start) {
    if (state[size_t(start)] != -1) continue;

    // Collect this component.
    std::vector<int> comp;
    std::vector<uint8_t> seen(size_t(n), 0);
    std::queue<int> q;
    q.push(start);
    seen[size_t(start)] = 1;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      comp.push_back(v);
      for (int w : tree[size_t(v)])
        if (!seen[size_t(w)]) {
          seen[size_t(w)] = 1;
          q.push(w);
        }
    }

    if (comp.size() == 1) {
      state[size_t(start)] = 0;
      continue;
    }

    int root = comp[0];
    for (int v : comp) {
      const size_t dv = tree[size_t(v)].size(), dr = tree[size_t(root)].size();
      if (dv > dr || (dv == dr && v < root)) root = v;
    }

    // 2-color by BFS parity; the root predicts from its many neighbors.
    std::queue<std::pair<int, int>> bfs;
    bfs.emplace(root, 0);
    state[size_t(root)] = 1;
    while (!bfs.empty()) {
      auto [v, depth] = bfs.front();
      bfs.pop();
      for (int w : tree[size_t(v)]) {
        if (state[size_t(w)] != -1) continue;
        state[size_t(w)] = ((depth + 1) % 2 == 0) ? 1 : 0;
        bfs.emplace(w, depth + 1);
      }
    }
  }

  for (int i = 0; i < n; ++i)
    (state[size_t(i)] == 0 ? part.update : part.predict).push_back(i);
  return part;
}

BipartiteGraph kron_reconnect(const ObservedGraph &g, const Bipartition &part,
                              int k_sparse) {
  BipartiteGraph bg;
  bg.p_nodes = part.predict;
  bg.u_nodes = part.update;
  std::sort(bg.p_nodes.begin(), bg.p_nodes.end());
  std::sort(bg.u_nodes.begin(), bg.u_nodes.end());
  const int np = int(bg.p_nodes.size());
  const int nu = int(bg.u_nodes.size());
  bg.pred_rows.resize(size_t(np));
  bg.upd_rows.resize(size_t(nu));
  if (np == 0 || nu == 0) return bg;

  Eigen::MatrixXd Lpp(np, np), Lpu(np, nu);
  for (int a = 0; a < np; ++a) {
    for (int b = 0; b < np; ++b) Lpp(a, b) = g.L(bg.p_nodes[size_t(a)], bg.p_nodes[size_t(b)]);
    for (int b = 0; b < nu; ++b) Lpu(a, b) = g.L(bg.p_nodes[size_t(a)], bg.u_nodes[size_t(b)]);
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Lpp);
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any()) {
    Lpp += 1e-8 * Eigen::MatrixXd::Identity(np, np);
    ldlt.compute(Lpp);
    if (ldlt.info() != Eigen::Success)
      fail(Err::SingularMatrix, "L_PP not factorizable");
  }
  // Kron-reduced coupling: before sparsification row p applied to f_U is the
  // MMSE estimate of f_p given f_U.
  Eigen::MatrixXd W = ldlt.solve(-Lpu);

  for (int p = 0; p < np; ++p) {
    const double row_sum = W.row(p).sum();
    if (!(row_sum > 1e-12)) continue; // nothing usable to predict from

    std::vector<std::pair<int, double>> row;
    double clamped_sum = 0;
    for (int u = 0; u < nu; ++u) {
      const double w = std::max(W(p, u), 0.0);
      if (w > 0) {
        row.emplace_back(u, w);
        clamped_sum += w;
      }
    }
    if (clamped_sum <= 0) continue;
    // Clamping and sparsification both preserve the original row sum.
    double scale = row_sum / clamped_sum;
    for (auto &e : row) e.second *= scale;

    if (k_sparse > 0 && int(row.size()) > k_sparse) {
      std::sort(row.begin(), row.end(), [](const auto &a, const auto &b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      row.resize(size_t(k_sparse));
      double kept = 0;
      for (const auto &e : row) kept += e.second;
      const double rescale = row_sum / kept;
      for (auto &e : row) e.second *= rescale;
      std::sort(row.begin(), row.end());
    }
    bg.pred_rows[size_t(p)] = std::move(row);
  }

  // Update filter: half the row-normalized transpose of the final
  // prediction weights.
  std::vector<double> col_sum(size_t(nu), 0.0);
  for (int p = 0; p < np; ++p)
    for (const auto &[u, w] : bg.pred_rows[size_t(p)]) col_sum[size_t(u)] += w;
  for (int p = 0; p < np; ++p)
    for (const auto &[u, w] : bg.pred_rows[size_t(p)])
      bg.upd_rows[size_t(u)].emplace_back(p, 0.5 * w / col_sum[size_t(u)]);
  return bg;
}

namespace {

LiftPlan build_plan(const ObservedGraph &g, int levels, int k_sparse,
                    bool rounded, std::span<const Bipartition> fixed_parts) {
  if (g.size() < 1) fail(Err::InvalidArgument, "lifting needs at least 1 node");
  LiftPlan plan;
  plan.n = g.size();
  plan.rounded = rounded;

  ObservedGraph cur = g;
  std::vector<int> active(static_cast<size_t>(g.size()));
  std::iota(active.begin(), active.end(), 0);

  for (int lvl = 0; lvl < levels; ++lvl) {
    LiftLevel level;
    level.active = active;
    Bipartition local = fixed_parts.empty() ? bipartition_mst(cur)
                                            : fixed_parts[size_t(lvl)];
    level.bg = kron_reconnect(cur, local, k_sparse);
    // Map local indices of `cur` back to the plan's node ids. `active` is
    // ascending, so the mapped lists stay ascending too.
    for (int &v : level.bg.p_nodes) v = active[size_t(v)];
    for (int &v : level.bg.u_nodes) v = active[size_t(v)];
    level.part.update.reserve(local.update.size());
    for (int u : local.update) level.part.update.push_back(active[size_t(u)]);
    for (int p : local.predict) level.part.predict.push_back(active[size_t(p)]);
    std::sort(level.part.update.begin(), level.part.update.end());
    std::sort(level.part.predict.begin(), level.part.predict.end());

    const bool more = lvl + 1 < levels && !local.update.empty() &&
                      !local.predict.empty();
    std::vector<int> next_local = local.update;
    std::sort(next_local.begin(), next_local.end());
    if (more) {
      // Level-(l+1) graph: Kron reduction of the current Laplacian onto the
      // update set.
      ObservedGraph reduced;
      reduced.L = observed_precision(cur.L, next_local);
      reduced.nodes.resize(next_local.size());
      std::iota(reduced.nodes.begin(), reduced.nodes.end(), 0);
      cur = std::move(reduced);
    }
    std::vector<int> next_active;
    next_active.reserve(next_local.size());
    for (int u : next_local) next_active.push_back(active[size_t(u)]);
    active = std::move(next_active);
    plan.levels.push_back(std::move(level));
    if (!more) break;
  }

  // Scan order: final low band, then high bands from the deepest level up,
  // each sorted by node id.
  plan.scan = active;
  plan.band_sizes[0] = active.size();
  size_t slot = 1;
  for (size_t lvl = plan.levels.size(); lvl-- > 0;) {
    const auto &p = plan.levels[lvl].part.predict;
    plan.scan.insert(plan.scan.end(), p.begin(), p.end());
    plan.band_sizes[slot++] = p.size();
    if (slot > 2) break;
  }
  return plan;
}

double maybe_round(double v, bool rounded) {
  return rounded ? std::round(v) : v;
}

} // namespace

LiftPlan LiftPlan::build(const ObservedGraph &g, int levels, int k_sparse,
                         bool rounded) {
  return build_plan(g, levels, k_sparse, rounded, {});
}

LiftPlan LiftPlan::build_with_partitions(const ObservedGraph &g,
                                         std::span<const Bipartition> parts,
                                         int k_sparse, bool rounded) {
  return build_plan(g, int(parts.size()), k_sparse, rounded, parts);
}

std::vector<double> lift_forward(std::span<const double> signal,
                                 const LiftPlan &plan) {
  if (int(signal.size()) != plan.n)
    fail(Err::GraphMismatch, "signal length does not match plan");
  std::vector<double> buf(signal.begin(), signal.end());
  std::vector<std::vector<double>> highs(plan.levels.size());

  for (size_t lvl = 0; lvl < plan.levels.size(); ++lvl) {
    const LiftLevel &L = plan.levels[lvl];
    const auto &bp = L.bg;
    std::vector<double> ch(bp.p_nodes.size());
    for (size_t p = 0; p < bp.p_nodes.size(); ++p) {
      double acc = 0;
      for (const auto &[u, w] : bp.pred_rows[p])
        acc += w * buf[size_t(bp.u_nodes[size_t(u)])];
      ch[p] = buf[size_t(bp.p_nodes[p])] - maybe_round(acc, plan.rounded);
    }
    for (size_t u = 0; u < bp.u_nodes.size(); ++u) {
      double acc = 0;
      for (const auto &[p, w] : bp.upd_rows[u]) acc += w * ch[size_t(p)];
      buf[size_t(bp.u_nodes[u])] += maybe_round(acc, plan.rounded);
    }
    highs[lvl] = std::move(ch);
  }

  std::vector<double> out;
  out.reserve(size_t(plan.n));
  for (size_t i = 0; i < plan.band_sizes[0]; ++i)
    out.push_back(buf[size_t(plan.scan[i])]);
  for (size_t lvl = plan.levels.size(); lvl-- > 0;) {
    // Bands are stored sorted by node id; p_nodes is already ascending.
    for (double v : highs[lvl]) out.push_back(v);
  }
  return out;
}

std::vector<double> lift_inverse(std::span<const double> coeffs,
                                 const LiftPlan &plan) {
  if (int(coeffs.size()) != plan.n)
    fail(Err::GraphMismatch, "coefficient count does not match plan");
  std::vector<double> buf(size_t(plan.n), 0.0);

  // Unpack the scan-ordered coefficients.
  size_t pos = 0;
  for (size_t i = 0; i < plan.band_sizes[0]; ++i)
    buf[size_t(plan.scan[i])] = coeffs[pos++];
  std::vector<std::vector<double>> highs(plan.levels.size());
  for (size_t lvl = plan.levels.size(); lvl-- > 0;) {
    highs[lvl].resize(plan.levels[lvl].bg.p_nodes.size());
    for (double &v : highs[lvl]) v = coeffs[pos++];
  }

  for (size_t lvl = plan.levels.size(); lvl-- > 0;) {
    const auto &bp = plan.levels[lvl].bg;
    const auto &ch = highs[lvl];
    for (size_t u = 0; u < bp.u_nodes.size(); ++u) {
      double acc = 0;
      for (const auto &[p, w] : bp.upd_rows[u]) acc += w * ch[size_t(p)];
      buf[size_t(bp.u_nodes[u])] -= maybe_round(acc, plan.rounded);
    }
    for (size_t p = 0; p < bp.p_nodes.size(); ++p) {
      double acc = 0;
      for (const auto &[u, w] : bp.pred_rows[p])
        acc += w * buf[size_t(bp.u_nodes[size_t(u)])];
      buf[size_t(bp.p_nodes[p])] = ch[p] + maybe_round(acc, plan.rounded);
    }
  }
  return buf;
}

double qp_step(int qp) {
  if (qp < 4 || qp > 36) fail(Err::QPOutOfRange, "QP must be in [4, 36]");
  return std::exp2((qp - 4) / 6.0);
}

std::vector<int32_t> quantize(std::span<const double> coeffs, int qp) {
  const double step = qp_step(qp);
  std::vector<int32_t> out(coeffs.size());
  for (size_t i = 0; i < coeffs.size(); ++i)
    out[i] = int32_t(std::llround(coeffs[i] / step));
  return out;
}

std::vector<double> dequantize(std::span<const int32_t> levels, int qp) {
  const double step = qp_step(qp);
  std::vector<double> out(levels.size());
  for (size_t i = 0; i < levels.size(); ++i) out[i] = levels[i] * step;
  return out;
}

} // namespace lfglt
