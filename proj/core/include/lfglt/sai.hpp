/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <vector>

#include "lfglt/raw_image.hpp"

namespace lfglt {

struct SaiPixel {
  int row;
  int col;
  Color color;
  uint16_t value;
};

// A sub-aperture image whose grid is only partially populated; each occupied
// position holds exactly one color sample.
class SparseSAI {
public:
  SparseSAI() = default;
  SparseSAI(int width, int height)
      : width_(width), height_(height),
        color_(size_t(width) * height, -1),
        value_(size_t(width) * height, 0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  size_t pixel_count() const { return count_; }

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height_ && col >= 0 && col < width_;
  }
  bool occupied(int row, int col) const { return color_[idx(row, col)] >= 0; }
  Color color(int row, int col) const {
    return static_cast<Color>(color_[idx(row, col)]);
  }
  uint16_t value(int row, int col) const { return value_[idx(row, col)]; }

  void set(int row, int col, Color c, uint16_t v) {
    size_t i = idx(row, col);
    if (color_[i] >= 0)
      fail(Err::DuplicatePosition, "SAI position already occupied");
    color_[i] = static_cast<int8_t>(c);
    value_[i] = v;
    ++count_;
  }

  // Overwrite the value of an already-occupied position (reconstruction path).
  void set_value(int row, int col, uint16_t v) { value_[idx(row, col)] = v; }

  std::vector<SaiPixel> pixels() const {
    std::vector<SaiPixel> out;
    out.reserve(count_);
    for (int r = 0; r < height_; ++r)
      for (int c = 0; c < width_; ++c)
        if (occupied(r, c)) out.push_back({r, c, color(r, c), value(r, c)});
    return out;
  }

  // Copy of this SAI with identical occupancy/colors and all values zeroed.
  SparseSAI occupancy_skeleton() const {
    SparseSAI s(*this);
    std::fill(s.value_.begin(), s.value_.end(), 0);
    return s;
  }

  bool operator==(const SparseSAI &) const = default;

private:
  size_t idx(int row, int col) const { return size_t(row) * width_ + col; }

  int width_ = 0;
  int height_ = 0;
  std::vector<int8_t> color_;
  std::vector<uint16_t> value_;
  size_t count_ = 0;
};

// views_v x views_u grid of sparse SAIs plus the calibration they came from.
struct SAIArray {
  int views_v = 0;
  int views_u = 0;
  int bit_depth = 8;
  BayerPhase phase = BayerPhase::RGGB;
  CalibrationParams provenance;
  std::vector<SparseSAI> grid; // index dv * views_u + du

  SparseSAI &at(int dv, int du) { return grid[size_t(dv) * views_u + du]; }
  const SparseSAI &at(int dv, int du) const {
    return grid[size_t(dv) * views_u + du];
  }
  size_t total_pixels() const {
    size_t n = 0;
    for (const auto &s : grid) n += s.pixel_count();
    return n;
  }
};

} // namespace lfglt
