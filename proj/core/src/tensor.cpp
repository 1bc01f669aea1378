/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace lfglt {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Direction vectors from the input block toward its four decoded reference
// blocks (up-left, left, up-right, up). The third one is written as the
// negation of up-right; the weighting below is symmetric under v -> -v, so
// only the line matters.
constexpr Vec2 kRefDirections[4] = {
    {-0.7071067811865476, -0.7071067811865476},
    {-1.0, 0.0},
    {-0.7071067811865476, 0.7071067811865476},
    {0.0, -1.0},
};

}

TensorEigen eigen2x2(const StructureTensor &h) {
  TensorEigen out;
  const double tr = h.hh + h.vv;
  const double diff = (h.hh - h.vv) * 0.5;
  const double disc = std::sqrt(diff * diff + h.hv * h.hv);
  double l1 = tr * 0.5 - disc;
  double l2 = tr * 0.5 + disc;
  // Structure tensors are PSD by construction; clamp rounding dust.
  if (l1 < 0 && l1 > -1e-9) l1 = 0;
  if (l2 < 0 && l2 > -1e-9) l2 = 0;
  out.lambda1 = l1;
  out.lambda2 = l2;

  // Eigenvector of lambda2 (dominant gradient direction). Pick the better
  // conditioned of the two analytic forms.
  Vec2 v2;
  const double a = h.hh - l2, b = h.hv, c = h.vv - l2;
  if (std::abs(a) >= std::abs(c)) {
    v2 = {b, -a};
  } else {
    v2 = {-c, b};
  }
  double n2 = std::hypot(v2.x, v2.y);
  if (n2 < 1e-300) {
    // Isotropic tensor: any orthonormal pair works.
    v2 = {0, 1};
    n2 = 1;
  }
  v2.x /= n2;
  v2.y /= n2;
  Vec2 v1{-v2.y, v2.x};

  auto apply_sign = [](Vec2 &v) {
    if (v.x < 0 || (v.x == 0 && v.y < 0)) {
      v.x = -v.x;
      v.y = -v.y;
    }
    if (v.x == 0) v.x = 0; // normalize -0
    if (v.y == 0) v.y = 0;
  };
  apply_sign(v1);
  apply_sign(v2);
  out.e1 = v1;
  out.e2 = v2;
  return out;
}

Gradient estimate_gradient(const SparseSAI &sai, int row, int col,
                           int radius) {
  // Nearest occupied G pixel on each half-axis within the search bound.
  struct Nb {
    double dh, dv, df;
  };
  Nb nbs[4];
  int count = 0;
  const double f0 = sai.value(row, col);

  const int steps[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}}; // (dr, dc)
  for (auto &step : steps) {
    for (int d = 1; d <= radius; ++d) {
      const int r = row + step[0] * d;
      const int c = col + step[1] * d;
      if (!sai.in_bounds(r, c)) break;
      if (sai.occupied(r, c) && sai.color(r, c) == Color::G) {
        nbs[count++] = {double(c - col), double(r - row),
                        double(sai.value(r, c)) - f0};
        break;
      }
    }
  }

  if (count < 2) return {0, 0, true};

  // Normal equations of the hyperplane fit; pseudo-inverse handles the
  // collinear (rank-1) case with the minimum-norm solution.
  double mhh = 0, mhv = 0, mvv = 0, rh = 0, rv = 0;
  for (int i = 0; i < count; ++i) {
    mhh += nbs[i].dh * nbs[i].dh;
    mhv += nbs[i].dh * nbs[i].dv;
    mvv += nbs[i].dv * nbs[i].dv;
    rh += nbs[i].dh * nbs[i].df;
    rv += nbs[i].dv * nbs[i].df;
  }

  const double det = mhh * mvv - mhv * mhv;
  const double scale = std::max(mhh, mvv);
  if (det > 1e-12 * scale * scale) {
    return {(mvv * rh - mhv * rv) / det, (mhh * rv - mhv * rh) / det, false};
  }

  // Rank-deficient: pinv via the eigen-decomposition of the 2x2 normal matrix.
  TensorEigen eig = eigen2x2({mhh, mhv, mvv});
  Gradient g{0, 0, false};
  const double tol = 1e-12 * std::max(1.0, eig.lambda2);
  auto add_component = [&](double lambda, const Vec2 &e) {
    if (lambda <= tol) return;
    const double proj = (e.x * rh + e.y * rv) / lambda;
    g.dh += proj * e.x;
    g.dv += proj * e.y;
  };
  add_component(eig.lambda1, eig.e1);
  add_component(eig.lambda2, eig.e2);
  return g;
}

BlockTensor block_tensor(const SparseSAI &sai, const BlockRect &block,
                         int radius) {
  BlockTensor bt;
  for (int r = block.row0; r < block.row0 + block.rows; ++r) {
    for (int c = block.col0; c < block.col0 + block.cols; ++c) {
      if (!sai.in_bounds(r, c) || !sai.occupied(r, c)) continue;
      if (sai.color(r, c) != Color::G) continue;
      const Gradient g = estimate_gradient(sai, r, c, radius);
      bt.tensor += {g.dh * g.dh, g.dh * g.dv, g.dv * g.dv};
      ++bt.n;
    }
  }
  return bt;
}

double direction_weight(double theta, double delta) {
  // Both branches agree at pi/2, which also covers the boundary case.
  const double t = theta <= kPi / 2 ? theta : kPi - theta;
  return std::exp(-t / delta);
}

StructureTensor estimate_input_tensor(std::span<const ReferenceTensor> refs,
                                      double delta) {
  StructureTensor acc;
  double wsum = 0;
  for (const auto &ref : refs) {
    if (!ref.available || ref.n <= 0) continue;
    const TensorEigen eig = eigen2x2(ref.tensor);
    const double dot =
        std::clamp(ref.direction.x * eig.e1.x + ref.direction.y * eig.e1.y,
                   -1.0, 1.0);
    const double theta = std::acos(dot);
    const double w = direction_weight(theta, delta);
    acc += ref.tensor.scaled(w / double(ref.n));
    wsum += w;
  }
  if (wsum <= 0) fail(Err::NoReferences, "no reference tensors available");
  return acc.scaled(1.0 / wsum);
}

KernelParams kernel_params(const TensorEigen &eig, int n, double sigma,
                           double p1, double p2) {
  KernelParams kp;
  kp.sigma = sigma;
  kp.p1 = p1;
  kp.p2 = p2;
  const int nn = std::max(n, 1);
  kp.epsilon = (eig.lambda2 + p2) / (eig.lambda1 + p2);
  kp.phi = std::sqrt(eig.lambda1 * eig.lambda2 + p1) / double(nn);

  // C = phi * [e1 e2] diag(1/eps, eps) [e1 e2]^T
  const double d1 = kp.phi / kp.epsilon;
  const double d2 = kp.phi * kp.epsilon;
  kp.c00 = d1 * eig.e1.x * eig.e1.x + d2 * eig.e2.x * eig.e2.x;
  kp.c01 = d1 * eig.e1.x * eig.e1.y + d2 * eig.e2.x * eig.e2.y;
  kp.c11 = d1 * eig.e1.y * eig.e1.y + d2 * eig.e2.y * eig.e2.y;
  return kp;
}

double kernel_weight(const KernelParams &kp, double dx, double dy) {
  const double quad = dx * (kp.c00 * dx + kp.c01 * dy) +
                      dy * (kp.c01 * dx + kp.c11 * dy);
  const double det = kp.c00 * kp.c11 - kp.c01 * kp.c01;
  const double s2 = kp.sigma * kp.sigma;
  return std::sqrt(std::max(det, 0.0)) / (2 * kPi * s2) *
         std::exp(-quad / (2 * s2));
}

double predict_pixel(std::span<const RefPixel> refs, const KernelParams &kp) {
  if (refs.empty()) return 0.0;
  double num = 0, den = 0;
  for (const auto &r : refs) {
    const double w = kernel_weight(kp, r.dx, r.dy);
    num += w * r.value;
    den += w;
  }
  if (den <= 0) return 0.0;
  return num / den;
}

double predict_from_window(const SparseSAI &decoded, int row, int col,
                           Color color, const KernelParams &kp, int radius,
                           const BlockRect *current, int block_size,
                           bool *had_refs) {
  auto floor_div = [](int a, int b) {
    return a >= 0 ? a / b : -((-a + b - 1) / b);
  };
  std::vector<RefPixel> refs;
  refs.reserve(32);
  for (int r = row - radius; r <= row + radius; ++r) {
    for (int c = col - radius; c <= col + radius; ++c) {
      if (!decoded.in_bounds(r, c)) continue;
      if (current) {
        // Restrict to the four causal neighbor blocks of `current`.
        const int br = floor_div(r - current->row0, block_size);
        const int bc = floor_div(c - current->col0, block_size);
        const bool causal =
            (br == -1 && (bc == -1 || bc == 0 || bc == 1)) ||
            (br == 0 && bc == -1);
        if (!causal) continue;
      }
      if (!decoded.occupied(r, c) || decoded.color(r, c) != color) continue;
      refs.push_back({double(c - col), double(r - row),
                      double(decoded.value(r, c))});
    }
  }
  if (had_refs) *had_refs = !refs.empty();
  return predict_pixel(refs, kp);
}

BlockPrediction predict_block(const SparseSAI &occupancy,
                              const BlockRect &blk, const SparseSAI &decoded,
                              const IntraParams &params,
                              bool with_predictions) {
  BlockPrediction out;
  const int bs = params.block_size;

  // Reference tensors are recomputed from the live reconstruction each time;
  // the decoder sees the same buffer state at this point in the scan.
  ReferenceTensor refs[4];
  const int offsets[4][2] = {{-1, -1}, {0, -1}, {-1, 1}, {-1, 0}}; // (dr, dc)
  for (int i = 0; i < 4; ++i) {
    const int r0 = blk.row0 + offsets[i][0] * bs;
    const int c0 = blk.col0 + offsets[i][1] * bs;
    if (r0 < 0 || c0 < 0 || r0 >= decoded.height() || c0 >= decoded.width())
      continue;
    BlockTensor bt = block_tensor(decoded, {r0, c0, bs, bs},
                                  params.grad_radius);
    refs[i].tensor = bt.tensor;
    refs[i].n = bt.n;
    refs[i].direction = kRefDirections[i];
    refs[i].available = true;
  }

  // Count of occupied G pixels in the input block scales the kernel.
  int n_g = 0;
  for (int r = blk.row0; r < blk.row0 + blk.rows; ++r)
    for (int c = blk.col0; c < blk.col0 + blk.cols; ++c)
      if (occupancy.in_bounds(r, c) && occupancy.occupied(r, c) &&
          occupancy.color(r, c) == Color::G)
        ++n_g;

  StructureTensor est;
  bool have_refs = false;
  for (const auto &ref : refs)
    if (ref.available && ref.n > 0) have_refs = true;
  if (have_refs) est = estimate_input_tensor(refs, params.delta);
  out.had_refs = have_refs;

  out.eig = eigen2x2(est); // zero tensor -> isotropic kernel
  out.kp = kernel_params(out.eig, n_g, params.sigma, params.p1, params.p2);

  const int maxv = (1 << 16) - 1; // clamping to bit depth happens at recon
  for (int r = blk.row0; r < blk.row0 + blk.rows; ++r) {
    for (int c = blk.col0; c < blk.col0 + blk.cols; ++c) {
      if (!occupancy.in_bounds(r, c) || !occupancy.occupied(r, c)) continue;
      const Color col = occupancy.color(r, c);
      int32_t pred_i = 0;
      if (with_predictions) {
        const double pred = predict_from_window(decoded, r, c, col, out.kp,
                                                params.ref_radius, &blk, bs);
        pred_i = int32_t(std::clamp<long>(std::lround(pred), 0, maxv));
      }
      out.pixels.push_back({r, c, col, pred_i});
    }
  }
  return out;
}

IntraResult intra_predict_block(const SparseSAI &source, const BlockRect &blk,
                                const SparseSAI &decoded,
                                const IntraParams &params) {
  BlockPrediction bp = predict_block(source, blk, decoded, params);
  IntraResult out;
  out.block.row0 = blk.row0;
  out.block.col0 = blk.col0;
  out.eig = bp.eig;
  out.kp = bp.kp;
  out.had_refs = bp.had_refs;
  out.block.pixels.reserve(bp.pixels.size());
  for (const auto &px : bp.pixels)
    out.block.pixels.push_back(
        {px.row, px.col, px.color,
         int32_t(source.value(px.row, px.col)) - px.pred});
  return out;
}

} // namespace lfglt
