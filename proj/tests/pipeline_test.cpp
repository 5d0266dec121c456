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
#include <vector>

#include "doctest.h"
#include "nrmosaic/pipeline.hpp"
#include "nrmosaic/simulator.hpp"
#include "synthetic.hpp"

using namespace nrm;

namespace {

PathEstimate path(std::vector<PathEntry> e) { return {std::move(e)}; }

struct Sequence {
  std::vector<Image> frames;
  std::vector<ForceSample> forces;
  PathEstimate truth;
};

const Phantom& phantom() {
  static const Phantom ph = generate_phantom(120, 80, 10, 31);
  return ph;
}

Sequence render(const std::vector<Waypoint>& way, const std::vector<double>& loads) {
  Sequence s;
  const MaterialParams mp;
  const CameraIntrinsics k = nrm::testing::camera();
  for (std::size_t i = 0; i < way.size(); ++i) {
    const auto r = render_frame(phantom(), way[i], {loads[i], 0.0, 0.0}, mp, k, ScannerGeometry{}, long(i + 1));
    s.frames.push_back(r.image);
    s.forces.push_back(r.forces);
    s.truth.entries.push_back({long(i + 1), way[i].x_mm - way[0].x_mm, way[i].y_mm - way[0].y_mm, false});
  }
  return s;
}

PipelineOptions options() {
  PipelineOptions o;
  o.ransac.seed = 7;
  o.window_radius_px = 240;
  return o;
}

}  // namespace

TEST_CASE("stitch onto an empty mosaic") {
  Image img(Plane8(phantom().image.data().block(0, 0, 60, 80)));
  Plane8 mask = Plane8::Ones(60, 80);
  mask.block(0, 0, 10, 80).setZero();  // blank top rows, not part of the covered box
  mask(30, 40) = 0;
  img.set_mask(mask);
  const Mosaic m = stitch(Mosaic(0.1), img, {0.0, 0.0});
  const Image c = m.canvas();
  REQUIRE(c.width() == 80);
  REQUIRE(c.height() == 50);
  Plane8 expected = img.data().block(10, 0, 50, 80);
  expected(20, 40) = 0;  // uncovered pixels read as zero
  CHECK((c.data() == expected).all());
  CHECK(c.valid_count() == img.valid_count());
  CHECK_FALSE(c.valid(40, 20));
  CHECK(m.canvas_origin_mm().isApprox(Eigen::Vector2d(0, 1.0)));
}

TEST_CASE("stitching an image onto itself leaves the canvas unchanged") {
  const Image img(Plane8(phantom().image.data().block(100, 100, 50, 70)));
  const Mosaic once = stitch(Mosaic(0.1), img, {-1.0, 2.0});
  const Mosaic twice = stitch(once, img, {-1.0, 2.0});
  CHECK(once.canvas() == twice.canvas());
  CHECK(twice.placements().size() == 2);
}

TEST_CASE("feathered blend of two half-overlapping constants") {
  const Image a(100, 200, 100), b(100, 200, 200);
  Mosaic m(0.1);
  m.add(a, {0.0, 0.0}, 1);
  m.add(b, {5.0, 0.0}, 2);  // 50 px to the right
  const Image c = m.canvas();
  REQUIRE(c.width() == 150);
  CHECK(c(10, 100) == 100);
  CHECK(c(140, 100) == 200);
  // overlap spans columns 50..99, midline between 74 and 75
  CHECK(std::abs(int(c(74, 100)) - 150) <= 1);
  CHECK(std::abs(int(c(75, 100)) - 150) <= 1);
  CHECK(std::abs(0.5 * (c(74, 100) + c(75, 100)) - 150.0) <= 1.0);
  for (int x = 51; x < 100; ++x) CHECK(c(x, 100) >= c(x - 1, 100));
}

TEST_CASE("fractional placement and crop") {
  const Image a(40, 30, 90);
  Mosaic m(0.1);
  m.add(a, {0.25, -0.35}, 1);
  Eigen::Vector2d tl;
  const Image crop = m.crop({2.0, 1.0}, 10, 10, &tl);
  CHECK(crop.width() == 10);
  CHECK(crop.height() == 10);
  CHECK((crop.data() == 90).all());
  CHECK(m.crop({500.0, 500.0}, 10, 10, &tl).empty());
  CHECK(Mosaic().canvas().empty());
  CHECK_THROWS_AS(Mosaic(0.0), InvalidArgument);
}

TEST_CASE("path_metrics fixtures") {
  SUBCASE("identical paths") {
    const auto p = path({{1, 0, 0}, {2, 3, 4}, {3, 6, 8}});
    const auto m = path_metrics(p, p);
    CHECK(m.rmse_mm == 0.0);
    CHECK(m.error_ratio_percent == 0.0);
    CHECK(m.per_frame_errors == std::vector<double>{0, 0, 0});
    CHECK(m.distance_mm == 10.0);
  }
  SUBCASE("constant 1 mm offset over 1274 mm") {
    const auto truth = path({{1, 0, 0}, {2, 637, 0}, {3, 1274, 0}});
    const auto est = path({{1, 0, 1}, {2, 637, 1}, {3, 1274, 1}});
    const auto m = path_metrics(est, truth);
    CHECK(std::abs(m.rmse_mm - 1.0) <= 1e-12);
    CHECK(std::abs(m.error_ratio_percent - 100.0 * 3 / 1274) <= 1e-12);
    CHECK(m.distance_mm == 1274.0);
  }
  SUBCASE("mixed errors on a square") {
    const auto truth = path({{1, 0, 0}, {2, 10, 0}, {3, 10, 10}, {4, 0, 10}});
    const auto est = path({{1, 0, 0}, {2, 10, 1}, {3, 12, 10}, {4, 0, 7}});
    const auto m = path_metrics(est, truth);
    CHECK(std::abs(m.rmse_mm - std::sqrt(14.0 / 4)) <= 1e-12);
    CHECK(std::abs(m.error_ratio_percent - 20.0) <= 1e-12);
    CHECK(m.total_error_mm == 6.0);
    CHECK(m.per_frame_errors == std::vector<double>{0, 1, 2, 3});
  }
  SUBCASE("frame mismatch") {
    CHECK_THROWS_AS(path_metrics(path({{1, 0, 0}}), path({{2, 0, 0}})), FrameMismatchError);
    CHECK_THROWS_AS(path_metrics(path({{1, 0, 0}}), path({{1, 0, 0}, {2, 1, 1}})), FrameMismatchError);
  }
}

TEST_CASE("path bookkeeping") {
  PathEstimate p = path({{1, 0, 0}, {2, 3, 4, true}, {3, 3, 4}});
  CHECK(p.skipped() == 1);
  CHECK(p.length_mm() == 5.0);
}

TEST_CASE("two identical unloaded frames") {
  const Image f = render(std::vector<Waypoint>{{40, 30, 0}}, {0.0}).frames[0];
  const std::vector<Image> frames{f, f};
  const std::vector<ForceSample> forces{{1, 0, 0, 0, 0}, {2, 0, 0, 0, 0}};
  const auto r = reconstruct(frames, forces, MaterialParams{}, nrm::testing::camera(), asift_schedule(1.13), options());
  REQUIRE(r.path.entries.size() == 2);
  // features on the tilted views carry sub-pixel resampling error
  CHECK(std::abs(r.path.entries[1].x_mm) < 1e-3);
  CHECK(std::abs(r.path.entries[1].y_mm) < 1e-3);
  CHECK_FALSE(r.path.entries[1].skipped);
  // the canvas is the rectified first frame, trimmed to its covered box
  const Image c = r.mosaic.canvas();
  const Image first = rectify_frame(f, forces[0], MaterialParams{}, nrm::testing::camera(), options());
  const Eigen::Vector2d o = r.mosaic.canvas_origin_mm() / 0.1 + Eigen::Vector2d(319.5, 239.5);
  const int ox = int(std::lround(o.x())), oy = int(std::lround(o.y()));
  CHECK(c.valid_count() == first.valid_count());
  int diff = 0;
  for (int y = 0; y < c.height(); ++y)
    for (int x = 0; x < c.width(); ++x)
      if (c.valid(x, y) && std::abs(int(c(x, y)) - int(first(x + ox, y + oy))) > 1) ++diff;
  CHECK(diff == 0);
  CHECK(r.warnings.empty());
}

TEST_CASE("short loaded sequence") {
  const std::vector<Waypoint> way{{40, 30, 0}, {45, 31, 1.5}, {50, 33, 2.0}, {54, 36, 0.5}, {57, 40, -1.0}};
  const std::vector<double> loads{0.0, 4.0, 8.0, 12.0, 6.0};
  const Sequence s = render(way, loads);
  std::vector<long> seen;
  PipelineOptions o = options();
  o.on_frame = [&](const FrameReport& f) { seen.push_back(f.frame_id); };
  const auto r = reconstruct(s.frames, s.forces, MaterialParams{}, nrm::testing::camera(), asift_schedule(1.13), o);
  CHECK(seen == std::vector<long>{1, 2, 3, 4, 5});
  CHECK(r.path.entries.front().x_mm == 0.0);
  CHECK(r.path.entries.front().y_mm == 0.0);
  CHECK(int(r.mosaic.placements().size()) + r.path.skipped() == int(s.frames.size()));
  for (std::size_t k = 1; k < r.mosaic.placements().size(); ++k)
    CHECK(r.mosaic.placements()[k].frame_id > r.mosaic.placements()[k - 1].frame_id);
  CHECK(std::abs(r.path.length_mm() / s.truth.length_mm() - 1.0) < 0.05);
  const auto m = path_metrics(r.path, s.truth);
  CHECK(m.rmse_mm < 0.5);
}

TEST_CASE("reversing a pure translation sequence negates the displacement") {
  std::vector<Waypoint> way;
  for (int k = 0; k < 4; ++k) way.push_back({40.0 + 6 * k, 30.0 + 2 * k, 0.0});
  const Sequence s = render(way, std::vector<double>(4, 0.0));
  auto rev = s;
  std::reverse(rev.frames.begin(), rev.frames.end());
  std::reverse(rev.forces.begin(), rev.forces.end());
  const auto k = nrm::testing::camera();
  const auto a = reconstruct(s.frames, s.forces, MaterialParams{}, k, asift_schedule(1.13), options());
  const auto b = reconstruct(rev.frames, rev.forces, MaterialParams{}, k, asift_schedule(1.13), options());
  const auto& ea = a.path.entries.back();
  const auto& eb = b.path.entries.back();
  CHECK(ea.x_mm > 10.0);
  CHECK(std::abs(ea.x_mm + eb.x_mm) < 0.1);
  CHECK(std::abs(ea.y_mm + eb.y_mm) < 0.1);
}

TEST_CASE("a loaded first frame raises a warning") {
  const Sequence s = render(std::vector<Waypoint>{{40, 30, 0}, {44, 30, 0}}, {3.0, 3.0});
  const auto r = reconstruct(s.frames, s.forces, MaterialParams{}, nrm::testing::camera(), asift_schedule(1.13), options());
  CHECK(r.warnings.size() == 1);
}

TEST_CASE("lost tracking is extrapolated and flagged") {
  Sequence s = render(std::vector<Waypoint>{{40, 30, 0}, {44, 30, 0}, {48, 30, 0}}, {0.0, 0.0, 0.0});
  s.frames[2] = Image(640, 480, 128);  // blank frame, nothing to match
  const auto r = reconstruct(s.frames, s.forces, MaterialParams{}, nrm::testing::camera(), asift_schedule(1.13), options());
  REQUIRE(r.path.entries.size() == 3);
  CHECK(r.path.entries[2].skipped);
  CHECK(r.path.skipped() == 1);
  CHECK(r.mosaic.placements().size() == 2);
  // linear extrapolation from the last step
  CHECK(r.path.entries[2].x_mm == doctest::Approx(2 * r.path.entries[1].x_mm));
  CHECK(r.path.entries[2].y_mm == doctest::Approx(2 * r.path.entries[1].y_mm));
}

TEST_CASE("reconstruct input checks") {
  const std::vector<Image> frames{Image(64, 48)};
  const std::vector<ForceSample> none;
  CHECK_THROWS_AS(reconstruct(frames, none, MaterialParams{}, {500, 500, 32, 24, 0.1}, AsiftConfig{}),
                  FrameMismatchError);
}
