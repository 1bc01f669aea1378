/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "lfglt/mode.hpp"
#include "lfglt/sai.hpp"

namespace lfglt {

struct Vec2 {
  double x = 0, y = 0;
};

struct Gradient {
  double dh = 0; // along columns
  double dv = 0; // along rows
  bool degenerate = false;
};

// 2x2 symmetric nonnegative-definite gradient statistics.
struct StructureTensor {
  double hh = 0, hv = 0, vv = 0;

  StructureTensor &operator+=(const StructureTensor &o) {
    hh += o.hh;
    hv += o.hv;
    vv += o.vv;
    return *this;
  }
  StructureTensor scaled(double s) const { return {hh * s, hv * s, vv * s}; }
};

// lambda1 <= lambda2; e1 spans the dominant edge direction, e2 the dominant
// gradient direction. Sign convention: e1.x >= 0, ties broken by e1.y >= 0.
struct TensorEigen {
  double lambda1 = 0, lambda2 = 0;
  Vec2 e1{1, 0}, e2{0, 1};
};

TensorEigen eigen2x2(const StructureTensor &h);

struct BlockRect {
  int row0 = 0, col0 = 0;
  int rows = 0, cols = 0;

  bool contains(int r, int c) const {
    return r >= row0 && r < row0 + rows && c >= col0 && c < col0 + cols;
  }
};

// Local gradient of the G plane at an occupied G position, fit from the
// nearest occupied G pixel on each of the four half-axes (capped search).
// Rank-deficient neighbor sets fall back to the minimum-norm solution; fewer
// than two neighbors returns (0, 0) flagged degenerate.
Gradient estimate_gradient(const SparseSAI &sai, int row, int col,
                           int radius = 6);

// Accumulated gradient outer products over the occupied G pixels of a block,
// plus the number of those pixels.
struct BlockTensor {
  StructureTensor tensor;
  int n = 0; // occupied G pixels in the block
};
BlockTensor block_tensor(const SparseSAI &sai, const BlockRect &block,
                         int radius = 6);

// One reference block's contribution to the input-tensor estimate.
struct ReferenceTensor {
  StructureTensor tensor;
  int n = 0;
  Vec2 direction{0, 0}; // unit vector from the input block toward this one
  bool available = false;
};

double direction_weight(double theta, double delta);

// Weighted average of the per-pixel-normalized reference tensors; references
// whose edge direction lines up with their displacement get larger weight.
StructureTensor estimate_input_tensor(std::span<const ReferenceTensor> refs,
                                      double delta);

// Steering kernel parameters derived from the estimated tensor.
struct KernelParams {
  double c00 = 0, c01 = 0, c11 = 0; // SPD matrix C
  double sigma = 1.6;
  double epsilon = 1;
  double phi = 0;
  double p1 = 0, p2 = 0;
};

KernelParams kernel_params(const TensorEigen &eig, int n, double sigma,
                           double p1, double p2);

double kernel_weight(const KernelParams &kp, double dx, double dy);

struct RefPixel {
  double dx, dy; // offset reference - target
  double value;
};

// Zero-order kernel regression: kernel-weighted average of the references.
// An empty reference set predicts 0 (residual equals the raw value).
double predict_pixel(std::span<const RefPixel> refs, const KernelParams &kp);

struct IntraParams {
  double delta = 0.9;
  double sigma = 1.6;
  double p1 = 0.001;
  double p2 = 0.001;
  int ref_radius = 7;  // Chebyshev window for reference pixels
  int grad_radius = 6; // half-axis search bound for gradients
  int block_size = 8;
};

struct ResidualPixel {
  int row, col;
  Color color;
  int32_t residual; // value - rounded prediction
};

struct ResidualBlock {
  int row0 = 0, col0 = 0;
  ModeId mode = ModeId::DC;
  std::vector<ResidualPixel> pixels;
};

struct PredictedPixel {
  int row, col;
  Color color;
  int32_t pred;
};

// Tensor, kernel and per-pixel predictions for one block, computed purely
// from the causal reconstruction and the block's occupancy pattern. Both
// codec sides call this with identical inputs, which is what makes the
// scheme side-information free.
struct BlockPrediction {
  TensorEigen eig;
  KernelParams kp;
  bool had_refs = false;
  std::vector<PredictedPixel> pixels;
};

// `with_predictions = false` skips the per-pixel kernel regression and
// returns zero predictions (tensor/kernel analysis only).
BlockPrediction predict_block(const SparseSAI &occupancy, const BlockRect &blk,
                              const SparseSAI &decoded,
                              const IntraParams &params,
                              bool with_predictions = true);

struct IntraResult {
  ResidualBlock block;
  TensorEigen eig;   // of the estimated input tensor
  KernelParams kp;   // G-derived kernel applied to all colors
  bool had_refs = false;
};

// Encoder-side wrapper: predictions minus the source values.
IntraResult intra_predict_block(const SparseSAI &source, const BlockRect &blk,
                                const SparseSAI &decoded,
                                const IntraParams &params);

// Kernel prediction of `color` at (row, col) from decoded pixels in the four
// causal neighbor blocks. Exposed for the decoder-side demosaicking path,
// which reuses it with an unrestricted window. `had_refs`, when given,
// reports whether the reference set was non-empty.
double predict_from_window(const SparseSAI &decoded, int row, int col,
                           Color color, const KernelParams &kp, int radius,
                           const BlockRect *restrict_to_causal_of = nullptr,
                           int block_size = 8, bool *had_refs = nullptr);

} // namespace lfglt
