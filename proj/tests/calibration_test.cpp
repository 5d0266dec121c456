// Copyright 2026 The nrmosaic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nrmosaic/calibration.hpp"
#include "nrmosaic/force_rect.hpp"
#include "nrmosaic/simulator.hpp"
#include "synthetic.hpp"

using namespace nrm;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const Phantom& phantom() {
  static const Phantom ph = generate_phantom(90, 70, 10, 12);
  return ph;
}

std::vector<YoungsPair> pairs(const MaterialParams& mp, const std::vector<double>& loads, double noise = 0.0,
                              std::uint64_t seed = 1) {
  const auto k = nrm::testing::camera();
  const Waypoint at{45, 35, 0};
  const Image unloaded = render_frame(phantom(), at, {0, 0, 0}, mp, k, ScannerGeometry{}).image;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<YoungsPair> out;
  for (double f : loads) {
    auto r = render_frame(phantom(), at, {f, 0, 0}, mp, k, ScannerGeometry{});
    if (noise > 0)
      for (double* s : {&r.forces.f1, &r.forces.f2, &r.forces.f3, &r.forces.f4})
        *s = std::max(0.0, *s * (1.0 + noise * n(rng)));
    out.push_back({unloaded, r.image, r.forces});
  }
  return out;
}

}  // namespace

TEST_CASE("calibrate_hooke") {
  SUBCASE("single sample inverts the tilt example") {
    const std::vector<HookeSample> s{{{0, 10.0, 200.8, 50, 50}, std::asin(0.1)}};
    CHECK(calibrate_hooke(s, 53.0) == doctest::Approx(190.8 / (2 * 0.1 * 53)));
    CHECK(calibrate_hooke(s, 53.0) == doctest::Approx(18.0));
  }
  SUBCASE("zero reference angles") {
    const std::vector<HookeSample> s{{{0, 5, 5, 5, 5}, 0.0}, {{0, 6, 6, 6, 6}, 0.0}, {{0, 1, 2, 3, 4}, 0.0}};
    CHECK_THROWS_AS(calibrate_hooke(s, 53.0), InsufficientExcitationError);
    CHECK_THROWS_AS(calibrate_hooke({}, 53.0), InsufficientExcitationError);
  }
  SUBCASE("simulated sensors") {
    MaterialParams mp;
    mp.hooke_constant = 21.5;
    std::vector<HookeSample> s;
    for (double f : {8.0, 12.0, 15.0}) {
      const double lim = max_tilt_for_load(f, mp.hooke_constant, mp.sensor_sep_x);
      for (double frac : {-0.9, 0.5, 0.9}) {
        const double th = frac * lim;
        s.push_back({synthesize_forces({f, th / kDeg, 0.0}, mp), th});
      }
    }
    CHECK(calibrate_hooke(s, mp.sensor_sep_x) == doctest::Approx(21.5).epsilon(1e-9));
  }
  SUBCASE("equal offsets on all sensors change nothing") {
    std::vector<HookeSample> a, b;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 20), th(-0.05, 0.05);
    for (int k = 0; k < 6; ++k) {
      const double t = th(rng);
      const double d = 2 * 18.0 * 53.0 * std::sin(t) + 0.3 * (u(rng) - 10) / 10;
      ForceSample f{k, u(rng) + 120, 0, u(rng), u(rng)};
      f.f2 = f.f1 + d;
      a.push_back({f, t});
      b.push_back({{k, f.f1 + 7, f.f2 + 7, f.f3 + 7, f.f4 + 7}, t});
    }
    CHECK(calibrate_hooke(a, 53) == doctest::Approx(calibrate_hooke(b, 53)).epsilon(1e-12));
  }
  SUBCASE("one outlier sample is dropped") {
    std::vector<HookeSample> s;
    for (int k = 1; k <= 20; ++k) {
      const double t = 0.004 * k;
      s.push_back({{k, 50, 50 + 2 * 18.0 * 53.0 * std::sin(t), 0, 0}, t});
    }
    s[3].forces.f2 += 12.0;
    CHECK(calibrate_hooke(s, 53) == doctest::Approx(18.0).epsilon(1e-9));
  }
}

TEST_CASE("lateral strain inverts to the modulus") {
  const MaterialParams mp;
  const double sigma = 10.0 / 0.0048;
  const double eps = -0.0647;
  CHECK(-mp.poisson_ratio * sigma / eps == doctest::Approx(16100).epsilon(1e-3));
}

TEST_CASE("fit_stretch on synthetic features") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 400);
  std::vector<Feature> a, b;
  for (int k = 0; k < 80; ++k) {
    Feature f;
    f.x = u(rng);
    f.y = u(rng);
    for (int j = 0; j < 128; ++j) f.descriptor[j] = float(rng() % 1000);
    float n = 0;
    for (float v : f.descriptor) n += v * v;
    for (float& v : f.descriptor) v /= std::sqrt(n);
    Feature g = f;
    g.x = 1.07 * f.x - 12.0;
    g.y = 1.07 * f.y + 3.0;
    if (k % 10 == 0) g.x += 40;  // mismatched location
    a.push_back(f);
    b.push_back(g);
  }
  const StretchFit s = fit_stretch(a, b);
  CHECK(s.scale == doctest::Approx(1.07).epsilon(1e-9));
  CHECK(s.shift.x() == doctest::Approx(-12.0));
  CHECK(s.shift.y() == doctest::Approx(3.0));
  CHECK(s.inliers == 72);
}

TEST_CASE("calibrate_youngs on simulated pairs") {
  MaterialParams mp;
  mp.youngs_modulus = 16100;
  const auto ps = pairs(mp, {4.0, 8.0, 12.0, 16.0});
  const YoungsResult r = calibrate_youngs(ps, mp);
  CHECK(std::abs(r.youngs_modulus / 16100.0 - 1.0) < 0.05);
  REQUIRE(r.strains.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(r.strains[k] < 0.0);
    CHECK(r.stresses[k] == doctest::Approx(total_force(ps[k].forces) / 0.0048));
  }

  SUBCASE("a stiffer material") {
    MaterialParams hard = mp;
    hard.youngs_modulus = 30000;
    CHECK(std::abs(calibrate_youngs(pairs(hard, {5.0, 10.0, 15.0}), hard).youngs_modulus / 30000.0 - 1.0) < 0.05);
  }
  SUBCASE("translation of both images") {
    std::vector<YoungsPair> moved;
    for (const auto& p : ps) {
      moved.push_back({Image(Plane8(p.unloaded.data().block(6, 9, 460, 620))),
                       Image(Plane8(p.loaded.data().block(6, 9, 460, 620))), p.forces});
    }
    CHECK(calibrate_youngs(moved, mp).youngs_modulus == doctest::Approx(r.youngs_modulus).epsilon(0.01));
  }
  SUBCASE("one percent sensor noise") {
    const YoungsResult n = calibrate_youngs(pairs(mp, {4.0, 8.0, 12.0, 16.0}, 0.01, 5), mp);
    CHECK(std::abs(n.youngs_modulus / 16100.0 - 1.0) < 0.10);
  }
}

TEST_CASE("calibrate_youngs errors") {
  const MaterialParams mp;
  const Image img(64, 64, 100);
  const std::vector<YoungsPair> tilted{{img, img, {0, 0, 2 * 18 * 53 * std::sin(2.5 * kDeg), 5, 5}}};
  CHECK_THROWS_AS(calibrate_youngs(tilted, mp), TiltedCaptureError);
  CHECK_THROWS_AS(calibrate_youngs({}, mp), InvalidArgument);
  const auto zero = pairs(mp, {0.0});
  CHECK_THROWS_AS(calibrate_youngs(zero, mp), InsufficientExcitationError);
  const std::vector<YoungsPair> blank{{img, img, {0, 1, 1, 1, 1}}};
  CHECK_THROWS_AS(calibrate_youngs(blank, mp), NoMatchesError);
}
