/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lfglt/common.hpp"

namespace lfglt {

// Full-color 4D light field: views_v x views_u views of height x width RGB.
// Serves as codec ground truth and as the input to synthesize_lenselet.
struct LightFieldScene {
  int views_v = 0;
  int views_u = 0;
  int height = 0;
  int width = 0;
  int bit_depth = 8;
  std::vector<uint16_t> rgb; // (((dv*views_u + du)*height + y)*width + x)*3 + c

  LightFieldScene() = default;
  LightFieldScene(int vv, int vu, int h, int w, int depth)
      : views_v(vv), views_u(vu), height(h), width(w), bit_depth(depth),
        rgb(size_t(vv) * vu * h * w * 3, 0) {}

  size_t idx(int dv, int du, int y, int x, int c) const {
    return (((size_t(dv) * views_u + du) * height + y) * width + x) * 3 + c;
  }
  uint16_t at(int dv, int du, int y, int x, int c) const {
    return rgb[idx(dv, du, y, x, c)];
  }
  uint16_t &at(int dv, int du, int y, int x, int c) {
    return rgb[idx(dv, du, y, x, c)];
  }
  uint16_t max_value() const { return uint16_t((1u << bit_depth) - 1); }

  bool operator==(const LightFieldScene &) const = default;
};

enum class ScenePreset {
  Smooth,  // low-frequency ramps, nearly DC blocks
  Edges,   // straight oriented contours over smooth background
  Texture, // smooth base plus seeded mid-amplitude texture
  Mixed,   // edges + texture, the default for RD experiments
};

struct SceneSpec {
  ScenePreset preset = ScenePreset::Mixed;
  int views_v = 3;
  int views_u = 3;
  int height = 48;
  int width = 48;
  int bit_depth = 8;
  double disparity = 0.6; // per-view sampling shift in pixels
};

LightFieldScene make_scene(const SceneSpec &spec, uint64_t seed);

// .lfscene container: "LFSC", u8 version, u16 views_v, u16 views_u,
// u16 height, u16 width, u8 bit_depth, then u16 samples in index order.
void write_lfscene(const std::string &path, const LightFieldScene &scene);
LightFieldScene read_lfscene(const std::string &path);

} // namespace lfglt
