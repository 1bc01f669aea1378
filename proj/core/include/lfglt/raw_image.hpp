/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lfglt/common.hpp"

namespace lfglt {

enum class BayerPhase : uint8_t { RGGB = 0, GRBG = 1, GBRG = 2, BGGR = 3 };

enum class Color : int8_t { R = 0, G = 1, B = 2 };

// Color filter at sensor coordinate (x = column, y = row).
inline Color bayer_color_at(BayerPhase phase, int x, int y) {
  const int px = x & 1, py = y & 1;
  switch (phase) {
  case BayerPhase::RGGB: return py == 0 ? (px == 0 ? Color::R : Color::G)
                                        : (px == 0 ? Color::G : Color::B);
  case BayerPhase::GRBG: return py == 0 ? (px == 0 ? Color::G : Color::R)
                                        : (px == 0 ? Color::B : Color::G);
  case BayerPhase::GBRG: return py == 0 ? (px == 0 ? Color::G : Color::B)
                                        : (px == 0 ? Color::R : Color::G);
  case BayerPhase::BGGR: return py == 0 ? (px == 0 ? Color::B : Color::G)
                                        : (px == 0 ? Color::G : Color::R);
  }
  fail(Err::InvalidArgument, "unknown bayer phase");
}

// One Bayer-mosaicked sensor frame behind the microlens array.
struct RawLensletImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8; // in [8, 16]
  BayerPhase phase = BayerPhase::RGGB;
  std::vector<uint16_t> samples; // row-major, height * width

  uint16_t at(int x, int y) const { return samples[size_t(y) * width + x]; }
  uint16_t &at(int x, int y) { return samples[size_t(y) * width + x]; }
  uint16_t max_value() const { return uint16_t((1u << bit_depth) - 1); }

  void validate() const;
};

// Affine calibration plus the macro-pixel lattice geometry. The affine part
// maps sensor coordinates (x, y) to calibrated coordinates; the lattice part
// describes how calibrated pixels split into sub-aperture images.
struct CalibrationParams {
  // row-major 2x3: [a b tx; c d ty], (x', y') = (a x + b y + tx, c x + d y + ty)
  std::array<double, 6> affine{1, 0, 0, 0, 1, 0};
  double macro_pixel_pitch = 0; // horizontal center spacing, == views_u after rounding
  double row_offset = 0;        // horizontal shift of odd macro-pixel rows
  int views_u = 1;
  int views_v = 1;
  int sai_width = 8;
  int sai_height = 8;

  double affine_det() const { return affine[0] * affine[4] - affine[1] * affine[3]; }
  bool affine_invertible() const;
  void apply_affine(double x, double y, double &ox, double &oy) const {
    ox = affine[0] * x + affine[1] * y + affine[2];
    oy = affine[3] * x + affine[4] * y + affine[5];
  }

  int pitch_int() const;
  int row_offset_int() const;
  // Calibrated canvas implied by the lattice; raw frames must match it.
  int canvas_width() const { return sai_width * views_u; }
  int canvas_height() const { return sai_height * views_v; }

  // Lattice consistency (invertible affine, pitch/views agreement, canvas fit).
  void validate(int raw_width, int raw_height) const;
  // Extra constraints required before coding (block-sized SAIs).
  void validate_for_codec() const;

  bool operator==(const CalibrationParams &) const = default;
};

// .lfraw container: "LFRW", u16 width, u16 height, u8 bit_depth,
// u8 bayer_phase, then row-major u16 samples, all little-endian.
void write_lfraw(const std::string &path, const RawLensletImage &img);
RawLensletImage read_lfraw(const std::string &path);
std::vector<uint8_t> serialize_lfraw(const RawLensletImage &img);
RawLensletImage parse_lfraw(std::span<const uint8_t> bytes);

// JSON sidecar <name>.calib.json carrying CalibrationParams.
void write_calib_json(const std::string &path, const CalibrationParams &p);
CalibrationParams read_calib_json(const std::string &path);
std::string calib_sidecar_path(const std::string &lfraw_path);

} // namespace lfglt
