/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace lfglt {

namespace {

struct EdgeLine {
  double nx, ny, off; // signed distance nx*x + ny*y - off
  double step;        // intensity jump across the line
};

// Continuous scene function: smooth base + oriented step edges + texture.
// Per-channel gains keep R/G/B correlated the way demosaicked content is.
struct SceneField {
  double base, amp_x, amp_y, kx, ky, phase_x, phase_y;
  double texture_amp;
  std::vector<EdgeLine> edges;
  double chan_gain[3];
  double chan_bias[3];

  double eval(double x, double y, int c, double noise) const {
    double v = base + amp_x * std::cos(kx * x + phase_x) +
               amp_y * std::cos(ky * y + phase_y);
    for (const auto &e : edges)
      if (e.nx * x + e.ny * y - e.off > 0) v += e.step;
    v += texture_amp * noise;
    return v * chan_gain[c] + chan_bias[c];
  }
};

} // namespace

LightFieldScene make_scene(const SceneSpec &spec, uint64_t seed) {
  if (spec.views_v < 1 || spec.views_u < 1 || spec.height < 1 ||
      spec.width < 1)
    fail(Err::InvalidArgument, "scene dimensions must be positive");

  LightFieldScene scene(spec.views_v, spec.views_u, spec.height, spec.width,
                        spec.bit_depth);
  const double maxv = scene.max_value();

  SplitMix64 rng(seed);
  SceneField f;
  f.base = maxv * rng.next_range(0.35, 0.55);
  f.amp_x = maxv * rng.next_range(0.08, 0.18);
  f.amp_y = maxv * rng.next_range(0.08, 0.18);
  f.kx = rng.next_range(0.5, 1.5) * 2.0 * M_PI / spec.width;
  f.ky = rng.next_range(0.5, 1.5) * 2.0 * M_PI / spec.height;
  f.phase_x = rng.next_range(0.0, 2.0 * M_PI);
  f.phase_y = rng.next_range(0.0, 2.0 * M_PI);
  f.texture_amp = 0.0;
  for (int c = 0; c < 3; ++c) {
    f.chan_gain[c] = rng.next_range(0.75, 1.0);
    f.chan_bias[c] = maxv * rng.next_range(0.0, 0.06);
  }

  int edge_count = 0;
  switch (spec.preset) {
  case ScenePreset::Smooth: break;
  case ScenePreset::Edges: edge_count = 6; break;
  case ScenePreset::Texture: f.texture_amp = maxv * 0.08; break;
  case ScenePreset::Mixed:
    edge_count = 4;
    f.texture_amp = maxv * 0.05;
    break;
  }
  for (int i = 0; i < edge_count; ++i) {
    const double ang = rng.next_range(0.0, M_PI);
    EdgeLine e;
    e.nx = std::cos(ang);
    e.ny = std::sin(ang);
    e.off = e.nx * rng.next_range(0.1, 0.9) * spec.width +
            e.ny * rng.next_range(0.1, 0.9) * spec.height;
    e.step = maxv * rng.next_range(0.15, 0.35) * (rng.next_u64() & 1 ? 1 : -1);
    f.edges.push_back(e);
  }

  // Texture noise must be a deterministic function of the pixel, not of the
  // evaluation order, so views sample a fixed per-position noise grid.
  const double cu = (spec.views_u - 1) / 2.0;
  const double cv = (spec.views_v - 1) / 2.0;
  for (int dv = 0; dv < spec.views_v; ++dv) {
    for (int du = 0; du < spec.views_u; ++du) {
      const double sx = (du - cu) * spec.disparity;
      const double sy = (dv - cv) * spec.disparity;
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const double px = x + sx, py = y + sy;
          const uint32_t nx = uint32_t(std::lround(px));
          const uint32_t ny = uint32_t(std::lround(py));
          SplitMix64 nrng(seed ^
                          (uint64_t(nx * 73856093u ^ ny * 19349663u) + 17));
          const double noise = 2.0 * nrng.next_double() - 1.0;
          for (int c = 0; c < 3; ++c) {
            double v = f.eval(px, py, c, noise);
            v = std::clamp(v, 0.0, maxv);
            scene.at(dv, du, y, x, c) = uint16_t(std::lround(v));
          }
        }
      }
    }
  }
  return scene;
}

void write_lfscene(const std::string &path, const LightFieldScene &scene) {
  ByteWriter w;
  w.magic("LFSC");
  w.u8(1);
  w.u16(uint16_t(scene.views_v));
  w.u16(uint16_t(scene.views_u));
  w.u16(uint16_t(scene.height));
  w.u16(uint16_t(scene.width));
  w.u8(uint8_t(scene.bit_depth));
  for (uint16_t s : scene.rgb) w.u16(s);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoFailure, "cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char *>(w.data().data()),
            std::streamsize(w.size()));
  if (!out) fail(Err::IoFailure, "write failed for " + path);
}

LightFieldScene read_lfscene(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoFailure, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  r.expect_magic("LFSC");
  if (r.u8() != 1) fail(Err::VersionUnsupported, "unsupported lfscene version");
  LightFieldScene scene;
  scene.views_v = r.u16();
  scene.views_u = r.u16();
  scene.height = r.u16();
  scene.width = r.u16();
  scene.bit_depth = r.u8();
  const size_t count = size_t(scene.views_v) * scene.views_u * scene.height *
                       scene.width * 3;
  if (r.remaining() != count * 2)
    fail(Err::TruncatedStream, "scene payload does not match declared size");
  scene.rgb.resize(count);
  for (auto &s : scene.rgb) s = r.u16();
  return scene;
}

} // namespace lfglt
