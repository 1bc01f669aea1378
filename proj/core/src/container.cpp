/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "lfglt/container.hpp"

#include <algorithm>
#include <cmath>

namespace lfglt {

namespace {

// Hex lattice address of a calibrated cell: which SAI the sample belongs to
// (du, dv) and where it sits in the SAI grid (gx, gy). Odd macro-pixel rows
// are shifted right by row_offset; the shift wraps at the canvas edge so the
// mapping stays a bijection on the whole frame.
struct LatticeAddress {
  int du, dv, gx, gy;
};

LatticeAddress cell_to_sai(const CalibrationParams &p, int x, int y) {
  LatticeAddress a;
  a.gy = y / p.views_v;
  a.dv = y % p.views_v;
  const int width = p.canvas_width();
  const int shift = (a.gy & 1) ? p.row_offset_int() : 0;
  int xe = (x - shift) % width;
  if (xe < 0) xe += width;
  a.gx = xe / p.views_u;
  a.du = xe % p.views_u;
  return a;
}

void sai_to_cell(const CalibrationParams &p, const LatticeAddress &a, int &x,
                 int &y) {
  y = a.gy * p.views_v + a.dv;
  const int width = p.canvas_width();
  const int shift = (a.gy & 1) ? p.row_offset_int() : 0;
  x = (a.gx * p.views_u + a.du + shift) % width;
}

} // namespace

CalibrationGeometry CalibrationGeometry::build(const CalibrationParams &params,
                                               int width, int height) {
  params.validate(width, height);
  CalibrationGeometry g;
  g.width_ = width;
  g.height_ = height;
  g.src_of_cell_.assign(size_t(width) * height, -1);

  // Snap distance of the current winner per cell; raster order breaks ties.
  std::vector<double> dist(size_t(width) * height, 0.0);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double fx, fy;
      params.apply_affine(double(x), double(y), fx, fy);
      const int ix = int(std::lround(fx));
      const int iy = int(std::lround(fy));
      if (ix < 0 || ix >= width || iy < 0 || iy >= height) {
        g.report_.out_of_canvas.push_back({uint16_t(x), uint16_t(y)});
        continue;
      }
      const double dx = fx - ix, dy = fy - iy;
      const double d2 = dx * dx + dy * dy;
      const size_t cell = g.idx(ix, iy);
      if (g.src_of_cell_[cell] < 0) {
        g.src_of_cell_[cell] = int32_t(y) * width + x;
        dist[cell] = d2;
        ++g.occupied_count_;
      } else if (d2 < dist[cell]) {
        const int32_t old = g.src_of_cell_[cell];
        g.report_.collisions.push_back({uint16_t(old % width),
                                        uint16_t(old / width), uint16_t(ix),
                                        uint16_t(iy)});
        g.src_of_cell_[cell] = int32_t(y) * width + x;
        dist[cell] = d2;
      } else {
        g.report_.collisions.push_back(
            {uint16_t(x), uint16_t(y), uint16_t(ix), uint16_t(iy)});
      }
    }
  }
  return g;
}

CalibratedLenslet calibrate(const RawLensletImage &raw,
                            const CalibrationParams &params,
                            CalibrationReport *report) {
  raw.validate();
  auto geom = CalibrationGeometry::build(params, raw.width, raw.height);
  if (report) *report = geom.report();

  CalibratedLenslet cal(raw.width, raw.height, raw.bit_depth, raw.phase);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      if (!geom.occupied(x, y)) continue;
      int sx, sy;
      geom.source(x, y, sx, sy);
      cal.place(x, y, sx, sy, raw.at(sx, sy));
    }
  }
  return cal;
}

SAIArray decompose(const CalibratedLenslet &cal,
                   const CalibrationParams &params) {
  params.validate(cal.width(), cal.height());

  SAIArray arr;
  arr.views_v = params.views_v;
  arr.views_u = params.views_u;
  arr.bit_depth = cal.bit_depth();
  arr.phase = cal.phase();
  arr.provenance = params;
  arr.grid.assign(size_t(params.views_v) * params.views_u,
                  SparseSAI(params.sai_width, params.sai_height));

  for (int y = 0; y < cal.height(); ++y) {
    for (int x = 0; x < cal.width(); ++x) {
      if (!cal.occupied(x, y)) continue;
      const auto a = cell_to_sai(params, x, y);
      arr.at(a.dv, a.du).set(a.gy, a.gx, cal.color(x, y), cal.value(x, y));
    }
  }
  return arr;
}

CalibratedLenslet compose(const SAIArray &arr) {
  const CalibrationParams &p = arr.provenance;
  const int width = p.canvas_width(), height = p.canvas_height();
  if (arr.views_v != p.views_v || arr.views_u != p.views_u ||
      int(arr.grid.size()) != p.views_v * p.views_u)
    fail(Err::InconsistentParams, "SAI grid does not match provenance");

  // Replay the calibration geometry to recover each cell's source coordinate.
  auto geom = CalibrationGeometry::build(p, width, height);

  CalibratedLenslet cal(width, height, arr.bit_depth, arr.phase);
  for (int dv = 0; dv < p.views_v; ++dv) {
    for (int du = 0; du < p.views_u; ++du) {
      const SparseSAI &sai = arr.at(dv, du);
      for (int gy = 0; gy < sai.height(); ++gy) {
        for (int gx = 0; gx < sai.width(); ++gx) {
          if (!sai.occupied(gy, gx)) continue;
          int x, y;
          sai_to_cell(p, {du, dv, gx, gy}, x, y);
          if (!geom.occupied(x, y))
            fail(Err::InconsistentParams,
                 "SAI pixel maps to a cell the calibration leaves empty");
          int sx, sy;
          geom.source(x, y, sx, sy);
          cal.place(x, y, sx, sy, sai.value(gy, gx));
        }
      }
    }
  }
  return cal;
}

RawLensletImage uncalibrate(const CalibratedLenslet &cal,
                            const CalibrationParams &params) {
  params.validate(cal.width(), cal.height());
  RawLensletImage raw;
  raw.width = cal.width();
  raw.height = cal.height();
  raw.bit_depth = cal.bit_depth();
  raw.phase = cal.phase();
  raw.samples.assign(size_t(raw.width) * raw.height, 0);
  for (int y = 0; y < cal.height(); ++y)
    for (int x = 0; x < cal.width(); ++x)
      if (cal.occupied(x, y)) {
        int sx, sy;
        cal.source(x, y, sx, sy);
        raw.at(sx, sy) = cal.value(x, y);
      }
  return raw;
}

RawLensletImage synthesize_lenselet(const LightFieldScene &scene,
                                    const CalibrationParams &params,
                                    uint64_t seed) {
  const int width = params.canvas_width(), height = params.canvas_height();
  if (scene.views_v != params.views_v || scene.views_u != params.views_u ||
      scene.height != params.sai_height || scene.width != params.sai_width)
    fail(Err::ShapeMismatch, "scene dimensions do not match params");

  auto geom = CalibrationGeometry::build(params, width, height);

  RawLensletImage raw;
  raw.width = width;
  raw.height = height;
  raw.bit_depth = scene.bit_depth;
  raw.phase = BayerPhase::RGGB;
  raw.samples.assign(size_t(width) * height, 0);

  // Sensor cells the pipeline maps: write the Bayer-selected scene sample of
  // the SAI slot they end up in, so decompose(calibrate(.)) recovers the
  // scene exactly at occupied positions.
  std::vector<uint8_t> mapped(size_t(width) * height, 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!geom.occupied(x, y)) continue;
      int sx, sy;
      geom.source(x, y, sx, sy);
      const auto a = cell_to_sai(params, x, y);
      const Color c = bayer_color_at(raw.phase, sx, sy);
      raw.at(sx, sy) =
          std::min(scene.at(a.dv, a.du, a.gy, a.gx, int(c)), raw.max_value());
      mapped[size_t(sy) * width + sx] = 1;
    }
  }

  // Dropped cells never reach an SAI; fill them with seeded noise so nothing
  // downstream can depend on their content.
  SplitMix64 rng(seed ^ 0x6c66676c74'73796eull);
  const uint16_t maxv = raw.max_value();
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (!mapped[size_t(y) * width + x])
        raw.at(x, y) = uint16_t(rng.next_below(uint64_t(maxv) + 1));

  return raw;
}

} // namespace lfglt
