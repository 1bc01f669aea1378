/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "lfglt/tensor.hpp"
#include "oracles.hpp"

using namespace lfglt;

namespace {

// SAI with a G pixel at every position sampled from f (other colors absent).
template <typename F>
SparseSAI g_field(int w, int h, F f) {
  SparseSAI sai(w, h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      sai.set(r, c, Color::G, uint16_t(std::lround(f(c, r))));
  return sai;
}

} // namespace

TEST_CASE("gradient of a constant plane is zero") {
  auto sai = g_field(9, 9, [](int, int) { return 100.0; });
  auto g = estimate_gradient(sai, 4, 4);
  CHECK(!g.degenerate);
  CHECK(g.dh == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.dv == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("linear field 2h + 3v is fit exactly") {
  auto sai = g_field(9, 9, [](int x, int y) { return 2.0 * x + 3.0 * y; });
  auto g = estimate_gradient(sai, 4, 4);
  CHECK(g.dh == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g.dv == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("gradient equals a dense pseudo-inverse solve on sparse data") {
  SplitMix64 rng(21);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Random sparse G occupancy of a quadratic field. Values are rounded to
    // integers by storage, so the oracle reads back the stored values.
    SparseSAI sai(13, 13);
    for (int r = 0; r < 13; ++r)
      for (int c = 0; c < 13; ++c)
        if (rng.next_double() < 0.45) {
          const double v = 200 + 3.0 * c - 2.0 * r + 0.25 * c * r;
          sai.set(r, c, Color::G, uint16_t(std::lround(v)));
        }
    const int row = 6, col = 6;
    if (!sai.occupied(row, col)) continue;

    auto g = estimate_gradient(sai, row, col, 6);

    // Oracle: collect the same half-axis neighbors, then solve via Eigen's
    // SVD-based least squares (minimum-norm for rank-deficient systems).
    std::vector<std::array<double, 3>> rows; // dh, dv, df
    const int dirs[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
    for (auto &d : dirs)
      for (int s = 1; s <= 6; ++s) {
        const int rr = row + d[0] * s, cc = col + d[1] * s;
        if (rr < 0 || rr >= 13 || cc < 0 || cc >= 13) break;
        if (sai.occupied(rr, cc)) {
          rows.push_back({double(cc - col), double(rr - row),
                          double(sai.value(rr, cc)) - sai.value(row, col)});
          break;
        }
      }
    if (int(rows.size()) < 2) {
      CHECK(g.degenerate);
      continue;
    }
    Eigen::MatrixXd X(rows.size(), 2);
    Eigen::VectorXd F(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      X(Eigen::Index(i), 0) = rows[i][0];
      X(Eigen::Index(i), 1) = rows[i][1];
      F(Eigen::Index(i)) = rows[i][2];
    }
    Eigen::Vector2d sol =
        X.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(F);
    CHECK(g.dh == doctest::Approx(sol[0]).epsilon(1e-9));
    CHECK(g.dv == doctest::Approx(sol[1]).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("affine fields are recovered exactly whenever non-collinear") {
  SplitMix64 rng(22);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    // Integer slopes keep the stored field exactly affine.
    const int a = -8 + int(rng.next_below(17));
    const int b = -8 + int(rng.next_below(17));
    SparseSAI sai(11, 11);
    for (int r = 0; r < 11; ++r)
      for (int c = 0; c < 11; ++c)
        if (rng.next_double() < 0.5)
          sai.set(r, c, Color::G, uint16_t(500 + a * c + b * r));
    for (int r = 0; r < 11; ++r)
      for (int c = 0; c < 11; ++c) {
        if (!sai.occupied(r, c)) continue;
        // The neighbor set is non-collinear iff it spans both axes.
        bool has_h = false, has_v = false;
        const int dirs[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
        for (int d = 0; d < 4; ++d)
          for (int s = 1; s <= 6; ++s) {
            const int rr = r + dirs[d][0] * s, cc = c + dirs[d][1] * s;
            if (rr < 0 || rr >= 11 || cc < 0 || cc >= 11) break;
            if (sai.occupied(rr, cc)) {
              (d < 2 ? has_h : has_v) = true;
              break;
            }
          }
        if (!(has_h && has_v)) continue;
        auto g = estimate_gradient(sai, r, c, 6);
        CHECK(!g.degenerate);
        CHECK(std::abs(g.dh - a) < 1e-9);
        CHECK(std::abs(g.dv - b) < 1e-9);
        ++checked;
      }
  }
  CHECK(checked > 1000);
}

TEST_CASE("block tensor accumulates gradients") {
  SUBCASE("constant block is the zero matrix") {
    auto sai = g_field(8, 8, [](int, int) { return 42.0; });
    auto bt = block_tensor(sai, {0, 0, 8, 8});
    CHECK(bt.n == 64);
    CHECK(bt.tensor.hh == 0);
    CHECK(bt.tensor.hv == 0);
    CHECK(bt.tensor.vv == 0);
  }
  SUBCASE("pure horizontal gradient is rank one") {
    auto sai = g_field(8, 8, [](int x, int) { return 5.0 * x; });
    auto bt = block_tensor(sai, {0, 0, 8, 8});
    CHECK(bt.n == 64);
    CHECK(bt.tensor.hh == doctest::Approx(64 * 25.0));
    CHECK(bt.tensor.hv == doctest::Approx(0.0));
    CHECK(bt.tensor.vv == doctest::Approx(0.0));
  }
  SUBCASE("mixed field equals the scalar accumulation oracle") {
    auto sai = g_field(8, 8, [](int x, int y) {
      return 100.0 + 7.0 * x - 2.0 * y + (((x + y) % 3) - 1) * 6.0;
    });
    auto bt = block_tensor(sai, {0, 0, 8, 8});
    double hh = 0, hv = 0, vv = 0;
    int n = 0;
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) {
        auto g = estimate_gradient(sai, r, c, 6);
        hh += g.dh * g.dh;
        hv += g.dh * g.dv;
        vv += g.dv * g.dv;
        ++n;
      }
    CHECK(bt.n == n);
    CHECK(bt.tensor.hh == doctest::Approx(hh).epsilon(1e-12));
    CHECK(bt.tensor.hv == doctest::Approx(hv).epsilon(1e-12));
    CHECK(bt.tensor.vv == doctest::Approx(vv).epsilon(1e-12));
  }
  SUBCASE("empty block gives zero matrix and zero count") {
    SparseSAI sai(8, 8);
    auto bt = block_tensor(sai, {0, 0, 8, 8});
    CHECK(bt.n == 0);
    CHECK(bt.tensor.hh == 0);
  }
}

TEST_CASE("closed-form 2x2 eigendecomposition") {
  SUBCASE("identity") {
    auto e = eigen2x2({1, 0, 1});
    CHECK(e.lambda1 == doctest::Approx(1.0));
    CHECK(e.lambda2 == doctest::Approx(1.0));
    CHECK(e.e1.x * e.e2.x + e.e1.y * e.e2.y == doctest::Approx(0.0));
    CHECK(e.e1.x >= 0);
    CHECK(e.e2.x >= 0);
  }
  SUBCASE("diagonal [[4,0],[0,1]]") {
    auto e = eigen2x2({4, 0, 1});
    CHECK(e.lambda1 == doctest::Approx(1.0));
    CHECK(e.lambda2 == doctest::Approx(4.0));
    CHECK(e.e1.x == doctest::Approx(0.0));
    CHECK(e.e1.y == doctest::Approx(1.0));
    CHECK(e.e2.x == doctest::Approx(1.0));
    CHECK(e.e2.y == doctest::Approx(0.0));
  }
  SUBCASE("random PSD matrices reconstruct") {
    SplitMix64 rng(23);
    for (int t = 0; t < 500; ++t) {
      const double a = rng.next_range(-4, 4), b = rng.next_range(-4, 4);
      const double c = rng.next_range(-4, 4), d = rng.next_range(-4, 4);
      // Gram matrix of a random 2x2 is PSD.
      StructureTensor h{a * a + c * c, a * b + c * d, b * b + d * d};
      auto e = eigen2x2(h);
      CHECK(e.lambda1 >= 0);
      CHECK(e.lambda1 <= e.lambda2 + 1e-12);
      CHECK(std::abs(e.e1.x * e.e2.x + e.e1.y * e.e2.y) <= 1e-9);
      CHECK(std::hypot(e.e1.x, e.e1.y) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::hypot(e.e2.x, e.e2.y) == doctest::Approx(1.0).epsilon(1e-9));
      const double r00 = e.lambda1 * e.e1.x * e.e1.x + e.lambda2 * e.e2.x * e.e2.x;
      const double r01 = e.lambda1 * e.e1.x * e.e1.y + e.lambda2 * e.e2.x * e.e2.y;
      const double r11 = e.lambda1 * e.e1.y * e.e1.y + e.lambda2 * e.e2.y * e.e2.y;
      CHECK(std::abs(r00 - h.hh) < 1e-9);
      CHECK(std::abs(r01 - h.hv) < 1e-9);
      CHECK(std::abs(r11 - h.vv) < 1e-9);
      // Sign convention.
      CHECK((e.e1.x > 0 || (e.e1.x == 0 && e.e1.y >= 0)));
    }
  }
}

TEST_CASE("input tensor estimation") {
  SUBCASE("single reference: that tensor scaled by 1/n") {
    ReferenceTensor ref;
    ref.tensor = {8, 2, 4};
    ref.n = 4;
    ref.direction = {-1, 0};
    ref.available = true;
    auto est = estimate_input_tensor(std::span(&ref, 1), 0.9);
    CHECK(est.hh == doctest::Approx(2.0));
    CHECK(est.hv == doctest::Approx(0.5));
    CHECK(est.vv == doctest::Approx(1.0));
  }
  SUBCASE("weight at theta = pi/4 with delta 0.9") {
    const double w = direction_weight(M_PI / 4, 0.9);
    CHECK(w == doctest::Approx(std::exp(-(M_PI / 4) / 0.9)).epsilon(1e-12));
    // Frozen from a 30-digit evaluation of exp(-(pi/4)/0.9).
    CHECK(std::abs(w - 0.417836686064321) < 1e-12);
  }
  SUBCASE("weight is continuous and symmetric at pi/2") {
    CHECK(direction_weight(M_PI / 2, 0.9) ==
          doctest::Approx(std::exp(-(M_PI / 2) / 0.9)));
    CHECK(direction_weight(0.3, 0.7) ==
          doctest::Approx(direction_weight(M_PI - 0.3, 0.7)));
  }
  SUBCASE("weight decreases with angle below pi/2") {
    SplitMix64 rng(24);
    for (int t = 0; t < 100; ++t) {
      const double t1 = rng.next_range(0, M_PI / 2);
      const double t2 = rng.next_range(0, M_PI / 2);
      if (t1 == t2) continue;
      const double lo = std::min(t1, t2), hi = std::max(t1, t2);
      CHECK(direction_weight(lo, 0.9) > direction_weight(hi, 0.9));
    }
  }
  SUBCASE("four references match the scalar formula") {
    const Vec2 dirs[4] = {{-1 / std::sqrt(2.0), -1 / std::sqrt(2.0)},
                          {-1, 0},
                          {-1 / std::sqrt(2.0), 1 / std::sqrt(2.0)},
                          {0, -1}};
    SplitMix64 rng(25);
    std::vector<ReferenceTensor> refs(4);
    for (int i = 0; i < 4; ++i) {
      const double a = rng.next_range(-2, 2), b = rng.next_range(-2, 2);
      const double c = rng.next_range(-2, 2), d = rng.next_range(-2, 2);
      refs[size_t(i)].tensor = {a * a + c * c, a * b + c * d, b * b + d * d};
      refs[size_t(i)].n = 1 + int(rng.next_below(8));
      refs[size_t(i)].direction = dirs[i];
      refs[size_t(i)].available = true;
    }
    auto est = estimate_input_tensor(refs, 0.9);

    double c_sum = 0, hh = 0, hv = 0, vv = 0;
    for (int i = 0; i < 4; ++i) {
      auto e = eigen2x2(refs[size_t(i)].tensor);
      const double dot = dirs[i].x * e.e1.x + dirs[i].y * e.e1.y;
      const double th = std::acos(std::clamp(dot, -1.0, 1.0));
      const double w = th <= M_PI / 2 ? std::exp(-th / 0.9)
                                      : std::exp(-(M_PI - th) / 0.9);
      c_sum += w;
      hh += w * refs[size_t(i)].tensor.hh / refs[size_t(i)].n;
      hv += w * refs[size_t(i)].tensor.hv / refs[size_t(i)].n;
      vv += w * refs[size_t(i)].tensor.vv / refs[size_t(i)].n;
    }
    CHECK(est.hh == doctest::Approx(hh / c_sum).epsilon(1e-12));
    CHECK(est.hv == doctest::Approx(hv / c_sum).epsilon(1e-12));
    CHECK(est.vv == doctest::Approx(vv / c_sum).epsilon(1e-12));
  }
  SUBCASE("PSD inputs stay PSD through the weighted average") {
    SplitMix64 rng(26);
    const Vec2 dir{-1, 0};
    for (int t = 0; t < 200; ++t) {
      std::vector<ReferenceTensor> refs(2);
      for (auto &r : refs) {
        const double a = rng.next_range(-2, 2), b = rng.next_range(-2, 2);
        r.tensor = {a * a, a * b, b * b};
        r.n = 1 + int(rng.next_below(5));
        r.direction = dir;
        r.available = true;
      }
      auto e = eigen2x2(estimate_input_tensor(refs, 0.9));
      CHECK(e.lambda1 >= 0);
    }
  }
  SUBCASE("no references throws") {
    std::vector<ReferenceTensor> refs(4); // all unavailable
    CHECK_THROWS_AS(estimate_input_tensor(refs, 0.9), CodecError);
  }
}

TEST_CASE("kernel parameters") {
  SUBCASE("flat tensor gives an isotropic kernel") {
    TensorEigen eig; // lambdas 0, canonical axes
    auto kp = kernel_params(eig, 4, 1.6, 0.001, 0.001);
    CHECK(kp.epsilon == doctest::Approx(1.0));
    const double expect = std::sqrt(0.001) / 4.0;
    CHECK(kp.c00 == doctest::Approx(expect));
    CHECK(kp.c11 == doctest::Approx(expect));
    CHECK(kp.c01 == doctest::Approx(0.0));
  }
  SUBCASE("eigenvalue ratio with stabilizers") {
    TensorEigen eig;
    eig.lambda1 = 0;
    eig.lambda2 = 4;
    auto kp = kernel_params(eig, 1, 1.6, 0.001, 0.001);
    CHECK(kp.epsilon == doctest::Approx(4001.0));
  }
  SUBCASE("C is SPD with det = phi^2") {
    SplitMix64 rng(27);
    for (int t = 0; t < 200; ++t) {
      const double a = rng.next_range(-3, 3), b = rng.next_range(-3, 3);
      auto eig = eigen2x2({a * a, a * b, b * b});
      auto kp = kernel_params(eig, 1 + int(rng.next_below(10)), 1.6, 0.001,
                              0.001);
      CHECK(kp.c00 > 0);
      const double det = kp.c00 * kp.c11 - kp.c01 * kp.c01;
      CHECK(det == doctest::Approx(kp.phi * kp.phi).epsilon(1e-9));
    }
  }
}

TEST_CASE("pixel prediction") {
  TensorEigen flat;
  auto iso = kernel_params(flat, 1, 1.6, 0.001, 0.001);

  SUBCASE("all references equal v predicts v") {
    std::vector<RefPixel> refs = {{1, 0, 37}, {-2, 1, 37}, {0, 3, 37}};
    CHECK(predict_pixel(refs, iso) == doctest::Approx(37.0));
  }
  SUBCASE("isotropic kernel averages equidistant references") {
    std::vector<RefPixel> refs = {{2, 0, 10}, {-2, 0, 20}};
    CHECK(predict_pixel(refs, iso) == doctest::Approx(15.0));
  }
  SUBCASE("empty reference set predicts zero") {
    CHECK(predict_pixel({}, iso) == 0.0);
  }
  SUBCASE("prediction stays within the reference range") {
    SplitMix64 rng(28);
    for (int t = 0; t < 200; ++t) {
      std::vector<RefPixel> refs;
      double lo = 1e9, hi = -1e9;
      const int n = 1 + int(rng.next_below(10));
      for (int i = 0; i < n; ++i) {
        RefPixel r{rng.next_range(-7, 7), rng.next_range(-7, 7),
                   rng.next_range(0, 255)};
        lo = std::min(lo, r.value);
        hi = std::max(hi, r.value);
        refs.push_back(r);
      }
      const double p = predict_pixel(refs, iso);
      CHECK(p >= lo - 1e-9);
      CHECK(p <= hi + 1e-9);
    }
  }
  SUBCASE("anisotropic kernel favors references along the edge") {
    // Vertical edge: e1 (edge direction) vertical, strong lambda2.
    StructureTensor h{50, 0, 0.5};
    auto eig = eigen2x2(h);
    auto kp = kernel_params(eig, 1, 1.6, 0.001, 0.001);
    const double along = kernel_weight(kp, 0, 3);  // same side, on the edge
    const double across = kernel_weight(kp, 3, 0); // across the edge
    CHECK(along > across);
  }
}

TEST_CASE("block intra prediction") {
  IntraParams ip;

  SUBCASE("constant image with references predicts within rounding") {
    auto sai = g_field(24, 24, [](int, int) { return 128.0; });
    SparseSAI decoded = sai; // causal blocks already reconstructed
    auto res = intra_predict_block(sai, {8, 8, 8, 8}, decoded, ip);
    CHECK(res.had_refs);
    size_t unreachable = 0;
    for (const auto &px : res.block.pixels) {
      // The block's far corner sits at Chebyshev distance 8 from every
      // causal block, so its reference set is empty and it predicts 0.
      if (px.row == 15 && px.col == 15) {
        ++unreachable;
        CHECK(px.residual == 128);
      } else {
        CHECK(px.residual == 0);
      }
    }
    CHECK(unreachable == 1);
  }

  SUBCASE("top-left block has no references: residual equals the value") {
    auto sai = g_field(16, 16, [](int x, int y) { return 10.0 * x + y; });
    SparseSAI decoded(16, 16); // nothing coded yet
    auto res = intra_predict_block(sai, {0, 0, 8, 8}, decoded, ip);
    CHECK(!res.had_refs);
    for (const auto &px : res.block.pixels)
      CHECK(px.residual == int32_t(sai.value(px.row, px.col)));
  }

  SUBCASE("edge scene: prediction beats no prediction on energy") {
    auto sai = g_field(24, 24, [](int x, int) { return x < 12 ? 40.0 : 200.0; });
    SparseSAI decoded = sai;
    auto res = intra_predict_block(sai, {8, 8, 8, 8}, decoded, ip);
    double with = 0, without = 0;
    for (const auto &px : res.block.pixels) {
      with += double(px.residual) * px.residual;
      without += double(sai.value(px.row, px.col)) * sai.value(px.row, px.col);
    }
    CHECK(with < without);
  }

  SUBCASE("identical inputs give bit-identical residuals") {
    SplitMix64 rng(29);
    SparseSAI sai(24, 24);
    for (int r = 0; r < 24; ++r)
      for (int c = 0; c < 24; ++c)
        if (rng.next_double() < 0.6)
          sai.set(r, c, Color(int(rng.next_below(3))),
                  uint16_t(rng.next_below(256)));
    SparseSAI decoded = sai;
    auto a = intra_predict_block(sai, {8, 8, 8, 8}, decoded, ip);
    auto b = intra_predict_block(sai, {8, 8, 8, 8}, decoded, ip);
    REQUIRE(a.block.pixels.size() == b.block.pixels.size());
    for (size_t i = 0; i < a.block.pixels.size(); ++i)
      CHECK(a.block.pixels[i].residual == b.block.pixels[i].residual);
  }
}
