/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lfglt/sai.hpp"
#include "lfglt/scene.hpp"

namespace lfglt {

struct CollisionRecord {
  uint16_t src_x, src_y; // dropped sensor sample
  uint16_t dst_x, dst_y; // cell it lost
};

struct OutOfCanvasRecord {
  uint16_t src_x, src_y;
};

struct CalibrationReport {
  std::vector<CollisionRecord> collisions;
  std::vector<OutOfCanvasRecord> out_of_canvas;
};

// The value-free part of calibration: for every calibrated cell, which sensor
// sample lands there after affine mapping and nearest-integer snapping. This
// is a pure function of the params and canvas size, so the decoder can replay
// it without side information.
class CalibrationGeometry {
public:
  static CalibrationGeometry build(const CalibrationParams &params, int width,
                                   int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool occupied(int x, int y) const { return src_of_cell_[idx(x, y)] >= 0; }
  // Sensor coordinate feeding cell (x, y); only valid when occupied.
  void source(int x, int y, int &sx, int &sy) const {
    int32_t s = src_of_cell_[idx(x, y)];
    sx = s % width_;
    sy = s / width_;
  }
  size_t occupied_count() const { return occupied_count_; }
  const CalibrationReport &report() const { return report_; }

private:
  size_t idx(int x, int y) const { return size_t(y) * width_ + x; }

  int width_ = 0, height_ = 0;
  std::vector<int32_t> src_of_cell_; // -1 when empty
  size_t occupied_count_ = 0;
  CalibrationReport report_;
};

// Calibrated lenselet frame: same canvas as the raw image plus an occupancy
// mask and, per occupied cell, the originating sensor coordinate (needed both
// for exact inversion and to derive the Bayer color label).
class CalibratedLenslet {
public:
  CalibratedLenslet() = default;
  CalibratedLenslet(int width, int height, int bit_depth, BayerPhase phase)
      : width_(width), height_(height), bit_depth_(bit_depth), phase_(phase),
        src_(size_t(width) * height, -1), value_(size_t(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int bit_depth() const { return bit_depth_; }
  BayerPhase phase() const { return phase_; }

  bool occupied(int x, int y) const { return src_[idx(x, y)] >= 0; }
  uint16_t value(int x, int y) const { return value_[idx(x, y)]; }
  void source(int x, int y, int &sx, int &sy) const {
    int32_t s = src_[idx(x, y)];
    sx = s % width_;
    sy = s / width_;
  }
  Color color(int x, int y) const {
    int sx, sy;
    source(x, y, sx, sy);
    return bayer_color_at(phase_, sx, sy);
  }
  void place(int x, int y, int sx, int sy, uint16_t v) {
    size_t i = idx(x, y);
    if (src_[i] >= 0) fail(Err::DuplicatePosition, "calibrated cell occupied");
    src_[i] = int32_t(sy) * width_ + sx;
    value_[i] = v;
    ++count_;
  }
  size_t occupied_count() const { return count_; }

  bool operator==(const CalibratedLenslet &) const = default;

private:
  size_t idx(int x, int y) const { return size_t(y) * width_ + x; }

  int width_ = 0, height_ = 0, bit_depth_ = 8;
  BayerPhase phase_ = BayerPhase::RGGB;
  std::vector<int32_t> src_;
  std::vector<uint16_t> value_;
  size_t count_ = 0;
};

// Affine-calibrate a raw frame; snapping collisions keep the sample with the
// smaller pre-snap distance and report the rest.
CalibratedLenslet calibrate(const RawLensletImage &raw,
                            const CalibrationParams &params,
                            CalibrationReport *report = nullptr);

// Scatter the calibrated frame into sparse SAIs based on each pixel's offset
// within its macro-pixel; exact inverse of compose.
SAIArray decompose(const CalibratedLenslet &cal, const CalibrationParams &params);

// Gather sparse SAIs back into the calibrated lenselet frame.
CalibratedLenslet compose(const SAIArray &arr);

// Undo calibrate: place each surviving sample back at its sensor coordinate.
// Cells dropped during calibration come back as zero.
RawLensletImage uncalibrate(const CalibratedLenslet &cal,
                            const CalibrationParams &params);

// Render a 4D scene into the raw mosaic the pipeline would decompose into it.
// Sensor cells the pipeline drops are filled with seeded noise so downstream
// checks cannot accidentally depend on them.
RawLensletImage synthesize_lenselet(const LightFieldScene &scene,
                                    const CalibrationParams &params,
                                    uint64_t seed);

} // namespace lfglt
