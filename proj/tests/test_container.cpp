/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <tuple>

#include "lfglt/container.hpp"

using namespace lfglt;

namespace {

CalibrationParams simple_params(int views, int sai_w, int sai_h,
                                int row_offset = 0) {
  CalibrationParams p;
  p.macro_pixel_pitch = views;
  p.row_offset = row_offset;
  p.views_u = views;
  p.views_v = views;
  p.sai_width = sai_w;
  p.sai_height = sai_h;
  return p;
}

RawLensletImage random_raw(const CalibrationParams &p, uint64_t seed,
                           int bit_depth = 8) {
  RawLensletImage raw;
  raw.width = p.canvas_width();
  raw.height = p.canvas_height();
  raw.bit_depth = bit_depth;
  raw.phase = BayerPhase::RGGB;
  raw.samples.resize(size_t(raw.width) * raw.height);
  SplitMix64 rng(seed);
  for (auto &s : raw.samples)
    s = uint16_t(rng.next_below(uint64_t(raw.max_value()) + 1));
  return raw;
}

} // namespace

TEST_CASE("identity affine keeps every sample in place") {
  auto p = simple_params(3, 8, 8);
  auto raw = random_raw(p, 7);
  CalibrationReport report;
  auto cal = calibrate(raw, p, &report);

  CHECK(report.collisions.empty());
  CHECK(report.out_of_canvas.empty());
  CHECK(cal.occupied_count() == size_t(raw.width) * raw.height);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) {
      CHECK(cal.occupied(x, y));
      CHECK(cal.value(x, y) == raw.at(x, y));
      int sx, sy;
      cal.source(x, y, sx, sy);
      CHECK(sx == x);
      CHECK(sy == y);
    }
}

TEST_CASE("sub-half-pixel translation snaps back to the original cells") {
  auto p = simple_params(3, 8, 8);
  p.affine = {1, 0, 0.4, 0, 1, 0.0};
  auto raw = random_raw(p, 8);
  CalibrationReport report;
  auto cal = calibrate(raw, p, &report);
  CHECK(report.collisions.empty());
  CHECK(report.out_of_canvas.empty());
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x) CHECK(cal.value(x, y) == raw.at(x, y));
}

TEST_CASE("rotation occupancy and collisions match a scalar remap oracle") {
  // 8x8 canvas, 3 degree rotation about the canvas center.
  CalibrationParams p = simple_params(1, 8, 8);
  const double th = 3.0 * M_PI / 180.0;
  const double cx = 3.5, cy = 3.5;
  p.affine = {std::cos(th), -std::sin(th),
              cx - std::cos(th) * cx + std::sin(th) * cy,
              std::sin(th), std::cos(th),
              cy - std::sin(th) * cx - std::cos(th) * cy};

  auto raw = random_raw(p, 9);
  CalibrationReport report;
  auto cal = calibrate(raw, p, &report);

  // Independent scalar loop: round(affine * x) per sample, first winner by
  // smaller snap distance.
  std::map<std::pair<int, int>, std::pair<double, std::pair<int, int>>> cells;
  size_t oracle_oob = 0, oracle_collisions = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      const double fx = p.affine[0] * x + p.affine[1] * y + p.affine[2];
      const double fy = p.affine[3] * x + p.affine[4] * y + p.affine[5];
      const int ix = int(std::lround(fx)), iy = int(std::lround(fy));
      if (ix < 0 || ix >= 8 || iy < 0 || iy >= 8) {
        ++oracle_oob;
        continue;
      }
      const double d2 = (fx - ix) * (fx - ix) + (fy - iy) * (fy - iy);
      auto it = cells.find({ix, iy});
      if (it == cells.end()) {
        cells[{ix, iy}] = {d2, {x, y}};
      } else {
        ++oracle_collisions;
        if (d2 < it->second.first) it->second = {d2, {x, y}};
      }
    }

  CHECK(cal.occupied_count() == cells.size());
  CHECK(report.out_of_canvas.size() == oracle_oob);
  CHECK(report.collisions.size() == oracle_collisions);
  for (const auto &[cell, best] : cells) {
    CHECK(cal.occupied(cell.first, cell.second));
    int sx, sy;
    cal.source(cell.first, cell.second, sx, sy);
    CHECK(sx == best.second.first);
    CHECK(sy == best.second.second);
  }
}

TEST_CASE("snapping never moves a sample more than half a diagonal") {
  auto p = simple_params(3, 8, 8);
  p.affine = {0.996, -0.05, 0.7, 0.05, 0.996, -0.3};
  auto raw = random_raw(p, 10);
  auto cal = calibrate(raw, p, nullptr);
  const double bound = 0.5 * std::sqrt(2.0) + 1e-12;
  for (int y = 0; y < cal.height(); ++y)
    for (int x = 0; x < cal.width(); ++x) {
      if (!cal.occupied(x, y)) continue;
      int sx, sy;
      cal.source(x, y, sx, sy);
      double fx, fy;
      p.apply_affine(sx, sy, fx, fy);
      CHECK(std::hypot(fx - x, fy - y) <= bound);
    }
}

TEST_CASE("non-invertible affine is rejected") {
  auto p = simple_params(3, 8, 8);
  p.affine = {1, 0, 0, 2, 0, 0}; // singular linear part
  auto raw = random_raw(p, 11);
  CHECK_THROWS_AS(calibrate(raw, p, nullptr), CodecError);
}

TEST_CASE("single macro-pixel image puts one pixel in every SAI") {
  auto p = simple_params(3, 1, 1); // one macro-pixel, 3x3 views
  auto raw = random_raw(p, 12);
  auto arr = decompose(calibrate(raw, p), p);
  for (int dv = 0; dv < 3; ++dv)
    for (int du = 0; du < 3; ++du) {
      const auto &sai = arr.at(dv, du);
      CHECK(sai.pixel_count() == 1);
      CHECK(sai.occupied(0, 0));
      CHECK(sai.value(0, 0) == raw.at(du, dv));
    }
}

TEST_CASE("compose inverts decompose bit-exactly") {
  auto p = simple_params(3, 8, 8, /*row_offset=*/1);
  auto raw = random_raw(p, 13);
  auto cal = calibrate(raw, p);
  auto arr = decompose(cal, p);
  CHECK(arr.total_pixels() == cal.occupied_count());
  CHECK(compose(arr) == cal);
}

TEST_CASE("empty SAI array composes to an all-empty lenselet") {
  auto p = simple_params(3, 8, 8);
  SAIArray arr;
  arr.views_v = arr.views_u = 3;
  arr.provenance = p;
  arr.grid.assign(9, SparseSAI(8, 8));
  auto cal = compose(arr);
  CHECK(cal.occupied_count() == 0);
  for (int y = 0; y < cal.height(); ++y)
    for (int x = 0; x < cal.width(); ++x) CHECK(!cal.occupied(x, y));
}

TEST_CASE("G occupancy of decomposed SAIs matches Bayer enumeration") {
  // 16x16 mosaic: 2x2 views over 8x8 SAIs with an odd-row shift.
  auto p = simple_params(2, 8, 8, /*row_offset=*/1);
  auto raw = random_raw(p, 14);
  auto arr = decompose(calibrate(raw, p), p);

  // Independent enumeration: every sensor pixel (x, y) with a G filter must
  // appear at exactly its hex-mapped SAI slot.
  std::set<std::tuple<int, int, int, int>> expected; // (dv, du, gy, gx)
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      if (bayer_color_at(BayerPhase::RGGB, x, y) != Color::G) continue;
      const int gy = y / 2, dv = y % 2;
      const int shift = (gy % 2 == 1) ? 1 : 0;
      const int xe = ((x - shift) % 16 + 16) % 16;
      expected.insert({dv, xe % 2, gy, xe / 2});
    }

  std::set<std::tuple<int, int, int, int>> got;
  for (int dv = 0; dv < 2; ++dv)
    for (int du = 0; du < 2; ++du)
      for (const auto &px : arr.at(dv, du).pixels())
        if (px.color == Color::G) got.insert({dv, du, px.row, px.col});
  CHECK(got == expected);
}

TEST_CASE("random round trips raw -> SAIs -> raw") {
  SplitMix64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const int views = 2 + int(rng.next_below(3));
    auto p = simple_params(views, 8, 8, int(rng.next_below(uint64_t(views))));
    auto raw = random_raw(p, rng.next_u64(), 8 + int(rng.next_below(9)));
    auto cal = calibrate(raw, p);
    auto back = uncalibrate(compose(decompose(cal, p)), p);
    // Identity affine: nothing is dropped, so the full frame must survive.
    CHECK(back.samples == raw.samples);
  }
}

TEST_CASE("synthesize: constant scene gives a constant mosaic") {
  auto p = simple_params(3, 8, 8);
  LightFieldScene scene(3, 3, 8, 8, 8);
  for (auto &v : scene.rgb) v = 77;
  auto raw = synthesize_lenselet(scene, p, 1);
  for (auto s : raw.samples) CHECK(s == 77);
}

TEST_CASE("synthesize: G plane of decomposed SAIs reproduces a ramp") {
  auto p = simple_params(3, 8, 8);
  LightFieldScene scene(3, 3, 8, 8, 8);
  for (int dv = 0; dv < 3; ++dv)
    for (int du = 0; du < 3; ++du)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          for (int c = 0; c < 3; ++c)
            scene.at(dv, du, y, x, c) = uint16_t(10 + 5 * x);

  auto arr = decompose(calibrate(synthesize_lenselet(scene, p, 2), p), p);
  for (int dv = 0; dv < 3; ++dv)
    for (int du = 0; du < 3; ++du)
      for (const auto &px : arr.at(dv, du).pixels())
        if (px.color == Color::G) CHECK(px.value == 10 + 5 * px.col);
}

TEST_CASE("pipeline inversion: occupied values equal scene values, any seed") {
  auto p = simple_params(3, 8, 8, 1);
  p.affine = {0.999, -0.01, 0.2, 0.01, 0.999, -0.1};
  for (uint64_t seed : {1ull, 42ull, 1234567ull}) {
    SceneSpec spec;
    spec.views_v = spec.views_u = 3;
    spec.height = spec.width = 8;
    auto scene = make_scene(spec, seed);
    auto arr = decompose(calibrate(synthesize_lenselet(scene, p, seed), p), p);
    for (int dv = 0; dv < 3; ++dv)
      for (int du = 0; du < 3; ++du)
        for (const auto &px : arr.at(dv, du).pixels())
          CHECK(px.value == scene.at(dv, du, px.row, px.col, int(px.color)));
  }
}

TEST_CASE("lfraw and sidecar files round trip") {
  auto p = simple_params(3, 8, 8, 2);
  p.affine = {1.001, 0.002, -0.3, -0.001, 0.999, 0.25};
  auto raw = random_raw(p, 16, 10);

  const std::string base = "/tmp/lfglt_test_io";
  write_lfraw(base + ".lfraw", raw);
  write_calib_json(calib_sidecar_path(base + ".lfraw"), p);

  auto raw2 = read_lfraw(base + ".lfraw");
  CHECK(raw2.width == raw.width);
  CHECK(raw2.height == raw.height);
  CHECK(raw2.bit_depth == raw.bit_depth);
  CHECK(raw2.samples == raw.samples);

  auto p2 = read_calib_json(calib_sidecar_path(base + ".lfraw"));
  CHECK(p2 == p);

  std::remove((base + ".lfraw").c_str());
  std::remove(calib_sidecar_path(base + ".lfraw").c_str());
}

TEST_CASE("lfraw parser rejects a bad magic") {
  auto p = simple_params(3, 8, 8);
  auto bytes = serialize_lfraw(random_raw(p, 17));
  bytes[0] = 'X';
  CHECK_THROWS_AS(parse_lfraw(bytes), CodecError);
}

TEST_CASE("double occupancy of an SAI position is rejected") {
  SparseSAI sai(8, 8);
  sai.set(2, 3, Color::G, 100);
  bool ok = false;
  try {
    sai.set(2, 3, Color::R, 50);
  } catch (const CodecError &e) {
    ok = e.code() == Err::DuplicatePosition;
  }
  CHECK(ok);
}

TEST_CASE("scene container round trips") {
  SceneSpec spec;
  spec.views_v = spec.views_u = 2;
  spec.height = spec.width = 16;
  auto scene = make_scene(spec, 3);
  const std::string path = "/tmp/lfglt_test_scene.lfscene";
  write_lfscene(path, scene);
  CHECK(read_lfscene(path) == scene);
  std::remove(path.c_str());
}
