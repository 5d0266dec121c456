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


#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "nrmosaic/features.hpp"
#include "nrmosaic/imgproc.hpp"
#include "nrmosaic/simulator.hpp"

using namespace nrm;

namespace {

const Image& texture() {
  static const Image img = [] {
    const Phantom ph = generate_phantom(80, 60, 10, 21);
    return Image(ph.image.data().block(60, 80, 240, 320).eval());
  }();
  return img;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  double s = 0;
  for (int k = 0; k < 128; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double fraction_below(const std::vector<double>& v, double thr) {
  return double(std::count_if(v.begin(), v.end(), [&](double d) { return d < thr; })) / double(v.size());
}

}  // namespace

TEST_CASE("tilt_from_angle") {
  CHECK(tilt_from_angle(0.0) == 1.0);
  CHECK(tilt_from_angle(28 * std::numbers::pi / 180) == doctest::Approx(1.1326).epsilon(1e-4));
  CHECK(tilt_from_angle(std::numbers::pi / 3) == doctest::Approx(2.0));
}

TEST_CASE("asift_schedule for the observed stretch ratio") {
  const AsiftConfig cfg = asift_schedule(1.13);
  CHECK(cfg.delta_t == doctest::Approx(std::sqrt(1.13)));
  CHECK(std::abs(cfg.delta_t - 1.0630) < 1e-4);
  CHECK(std::abs(cfg.latitude_deg - 19.84) < 0.05);
  REQUIRE(cfg.tilt_levels.size() == 2);
  CHECK(cfg.tilt_levels[0] == 1.0);
  CHECK(cfg.tilt_levels[1] == cfg.delta_t);
  REQUIRE(cfg.rotations_deg.size() == 9);
  for (int k = 0; k < 9; ++k) CHECK(cfg.rotations_deg[k] == 20.0 * k);
  CHECK(cfg.peak_threshold == 1.0);
  CHECK(cfg.edge_threshold == 10.0);
  // 1 + 9 cos(latitude); the rounded 20 degree figure gives 9.457
  CHECK(cfg.compute_factor() == doctest::Approx(1 + 9 * std::cos(cfg.latitude_deg * std::numbers::pi / 180)));
  CHECK(std::abs(cfg.compute_factor() / 9.46 - 1) < 0.02);
  CHECK(1 + 9 * std::cos(20 * std::numbers::pi / 180) == doctest::Approx(9.457).epsilon(1e-4));
}

TEST_CASE("asift_schedule with no stretch is plain SIFT") {
  const AsiftConfig cfg = asift_schedule(1.0);
  CHECK(cfg.delta_t == 1.0);
  CHECK(cfg.tilt_levels == std::vector<double>{1.0});
  CHECK(cfg.rotations_deg.empty());
  CHECK(cfg.compute_factor() == 1.0);
  CHECK_THROWS_AS(asift_schedule(0.9), InvalidArgument);
}

TEST_CASE("uniform image has no features") {
  CHECK(detect_sift(Image(128, 128, 120), asift_schedule(1.13)).empty());
}

TEST_CASE("tiny image is rejected") {
  CHECK_THROWS_AS(detect_sift(Image(20, 20, 0), AsiftConfig{}), TooSmallImageError);
}

TEST_CASE("sift descriptors are unit length and inside the image") {
  const auto fs = detect_sift(texture(), asift_schedule(1.13));
  CHECK(fs.size() > 100);
  for (const auto& f : fs) {
    double n = 0;
    for (float v : f.descriptor) {
      CHECK(v >= 0.0f);
      n += double(v) * v;
    }
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
    CHECK(f.x >= 0);
    CHECK(f.y >= 0);
    CHECK(f.x <= texture().width() - 1);
    CHECK(f.y <= texture().height() - 1);
  }
}

TEST_CASE("sift is deterministic") {
  const AsiftConfig cfg = asift_schedule(1.13);
  const auto a = detect_sift(texture(), cfg);
  const auto b = detect_sift(texture(), cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].x == b[k].x);
    CHECK(a[k].y == b[k].y);
    CHECK(a[k].descriptor == b[k].descriptor);
  }
}

TEST_CASE("sift under a 90 degree rotation") {
  const AsiftConfig cfg = asift_schedule(1.13);
  const Image& a = texture();
  const Image b(Plane8(a.data().transpose().rowwise().reverse()));
  const auto fa = detect_sift(a, cfg);
  const auto fb = detect_sift(b, cfg);
  CHECK(std::abs(double(fb.size()) / double(fa.size()) - 1.0) <= 0.05);
  std::vector<double> dist;
  for (const auto& m : match_features(fa, fb)) {
    // a(x, y) lands at b(h - 1 - y, x)
    const auto& p = fa[m.query];
    const auto& q = fb[m.train];
    if (std::hypot(q.x - (a.height() - 1 - p.y), q.y - p.x) > 1.5) continue;
    dist.push_back(m.distance);
  }
  REQUIRE(dist.size() > 100);
  std::sort(dist.begin(), dist.end());
  CHECK(dist[dist.size() / 2] < 0.1);
  CHECK(fraction_below(dist, 0.2) >= 0.95);
}

TEST_CASE("simulate_view maps its centre to the original centre") {
  const Image& img = texture();
  for (double phi : {0.0, 20.0, 80.0, 160.0}) {
    const AsiftView v = simulate_view(img, std::sqrt(1.13), phi);
    // row count is floored after the squash, so the centre is only good to a pixel
    const Eigen::Vector2d c_view(0.5 * (v.image.width() - 1), 0.5 * (v.image.height() - 1));
    const Eigen::Vector2d p = v.map_to_original(c_view);
    CHECK(std::abs(p.x() - 0.5 * (img.width() - 1)) < 1.0);
    CHECK(std::abs(p.y() - 0.5 * (img.height() - 1)) < 1.0);
  }
}

TEST_CASE("asift view features remap onto the original features") {
  const AsiftConfig cfg = asift_schedule(1.13);
  const Image& img = texture();
  const auto base = detect_sift(img, cfg);
  for (double phi : {0.0, 40.0, 100.0}) {
    const AsiftView v = simulate_view(img, cfg.delta_t, phi);
    std::vector<double> off;
    for (const auto& f : detect_sift(v.image, cfg)) {
      const Eigen::Vector2d p = v.map_to_original({f.x, f.y});
      double best = 1e9;
      const Feature* hit = nullptr;
      for (const auto& g : base) {
        const double d = std::hypot(g.x - p.x(), g.y - p.y());
        if (d < best) best = d, hit = &g;
      }
      // same keypoint seen in both: close and alike
      if (best < 3.0 && descriptor_distance(hit->descriptor, f.descriptor) < 0.5) off.push_back(best);
    }
    REQUIRE(off.size() > 50);
    std::sort(off.begin(), off.end());
    CHECK(off[off.size() / 2] < 0.5);
    CHECK(fraction_below(off, 1.0) >= 0.95);
  }
}

TEST_CASE("detect_asift") {
  const AsiftConfig cfg = asift_schedule(1.13);
  Image img = texture();
  img.set_mask(circular_mask(img.width(), img.height(), 159.5, 119.5, 118));
  AsiftStats stats;
  const auto fs = detect_asift(img, cfg, &stats);
  const auto plain = detect_sift(img, cfg);

  SUBCASE("untilted view is plain sift") {
    std::vector<Feature> first;
    for (const auto& f : fs)
      if (f.provenance.view == 0) first.push_back(f);
    REQUIRE(first.size() == plain.size());
    for (std::size_t k = 0; k < plain.size(); ++k) {
      CHECK(first[k].x == plain[k].x);
      CHECK(first[k].y == plain[k].y);
      CHECK(first[k].descriptor == plain[k].descriptor);
    }
  }
  SUBCASE("ten views, processed area") {
    CHECK(stats.views == 10);
    CHECK(std::abs(stats.area_factor() / cfg.compute_factor() - 1.0) <= 0.02);
  }
  SUBCASE("provenance and bounds") {
    for (const auto& f : fs) {
      CHECK(f.x >= 0);
      CHECK(f.x <= img.width() - 1);
      CHECK(f.y >= 0);
      CHECK(f.y <= img.height() - 1);
      if (f.provenance.view == 0) {
        CHECK(f.provenance.tilt == 1.0);
      } else {
        CHECK(f.provenance.tilt == cfg.delta_t);
        CHECK(f.provenance.rotation_deg == cfg.rotations_deg[f.provenance.view - 1]);
      }
    }
    CHECK(fs.size() > 5 * plain.size());
  }
  SUBCASE("deterministic") {
    const auto again = detect_asift(img, cfg);
    REQUIRE(again.size() == fs.size());
    for (std::size_t k = 0; k < fs.size(); ++k) {
      CHECK(again[k].x == fs[k].x);
      CHECK(again[k].descriptor == fs[k].descriptor);
    }
  }
}

TEST_CASE("matching a list against itself") {
  const auto fs = detect_sift(texture(), asift_schedule(1.13));
  const auto m = match_features(fs, fs);
  // keypoints with several orientations share a location, but each still pairs with itself
  CHECK(m.size() >= fs.size() * 9 / 10);
  for (const auto& x : m) {
    CHECK(x.query == x.train);
    CHECK(x.distance == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("random descriptors do not survive the ratio test") {
  std::mt19937_64 rng(17);
  std::normal_distribution<float> n;
  auto make = [&](int count) {
    std::vector<Feature> out(count);
    for (auto& f : out) {
      float s = 0;
      for (auto& v : f.descriptor) v = std::abs(n(rng)), s += v * v;
      for (auto& v : f.descriptor) v /= std::sqrt(s);
    }
    return out;
  };
  const auto a = make(300), b = make(300);
  CHECK(match_features(a, b).size() <= 3);
}

TEST_CASE("matches are one-to-one") {
  const AsiftConfig cfg = asift_schedule(1.13);
  const Image& a = texture();
  const Image b(Plane8(a.data().block(5, 7, 220, 300).eval()));
  const auto m = match_features(detect_sift(a, cfg), detect_sift(b, cfg));
  std::vector<int> q, t;
  for (const auto& x : m) q.push_back(x.query), t.push_back(x.train);
  std::sort(q.begin(), q.end());
  std::sort(t.begin(), t.end());
  CHECK(std::adjacent_find(q.begin(), q.end()) == q.end());
  CHECK(std::adjacent_find(t.begin(), t.end()) == t.end());
  CHECK(m.size() > 50);
}
