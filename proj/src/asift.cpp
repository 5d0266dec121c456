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

#include <Eigen/Dense>

#include "nrmosaic/errors.hpp"
#include "nrmosaic/features.hpp"
#include "nrmosaic/imgproc.hpp"

namespace nrm {

namespace {

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

double AsiftConfig::compute_factor() const {
  return 1.0 + double(rotations_deg.size()) * std::cos(deg2rad(latitude_deg));
}

double tilt_from_angle(double theta) { return 1.0 / std::cos(theta); }

AsiftConfig asift_schedule(double stretch_ratio) {
  if (!(stretch_ratio >= 1.0)) throw InvalidArgument("asift_schedule: stretch ratio must be >= 1");
  AsiftConfig cfg;
  cfg.stretch_ratio = stretch_ratio;
  cfg.delta_t = std::sqrt(stretch_ratio);
  cfg.latitude_deg = std::acos(1.0 / cfg.delta_t) * 180.0 / std::numbers::pi;
  cfg.tilt_levels = {1.0};
  cfg.rotations_deg.clear();
  if (stretch_ratio > 1.0) {
    cfg.tilt_levels.push_back(cfg.delta_t);
    for (int phi = 0; phi <= 160; phi += 20) cfg.rotations_deg.push_back(phi);
  }
  return cfg;
}

AsiftView simulate_view(const Image& img, double tilt, double rotation_deg) {
  const double a = deg2rad(rotation_deg);
  const double c = std::cos(a);
  const double s = std::sin(a);
  const int w = img.width();
  const int h = img.height();
  // Canvas large enough to hold the whole rotated image.
  const int rw = int(std::ceil(std::abs(c) * (w - 1) + std::abs(s) * (h - 1) - 1e-9)) + 1;
  const int rh = int(std::ceil(std::abs(s) * (w - 1) + std::abs(c) * (h - 1) - 1e-9)) + 1;
  const Eigen::Vector2d c_in(0.5 * (w - 1), 0.5 * (h - 1));
  const Eigen::Vector2d c_rot(0.5 * (rw - 1), 0.5 * (rh - 1));
  Eigen::Matrix2d rot;  // rotated-canvas -> original
  rot << c, s, -s, c;

  Image rotated = (rotation_deg == 0.0 && rw == w && rh == h)
                      ? Image(img.data(), img.validity())
                      : warp_image(img, rw, rh, [&](double x, double y) -> Eigen::Vector2d {
                          return rot * (Eigen::Vector2d(x, y) - c_rot) + c_in;
                        });

  AsiftView view;
  view.tilt = tilt;
  view.rotation_deg = rotation_deg;
  Eigen::Matrix2d squash = Eigen::Matrix2d::Identity();
  squash(1, 1) = tilt;  // view -> rotated canvas
  view.to_original.leftCols<2>() = rot * squash;
  view.to_original.col(2) = c_in - rot * c_rot;

  if (tilt <= 1.0) {
    view.image = std::move(rotated);
    return view;
  }
  const PlaneF blurred = gaussian_blur_y(rotated.to_float(), 0.8 * std::sqrt(tilt * tilt - 1.0));
  const int th = int(std::floor((rh - 1) / tilt)) + 1;
  Plane8 data(th, rw);
  Plane8 mask(th, rw);
  const Plane8 valid = rotated.validity();
  for (int y = 0; y < th; ++y) {
    const double sy = y * tilt;
    const int y0 = std::min(int(sy), rh - 1);
    const int y1 = std::min(y0 + 1, rh - 1);
    const double f = sy - y0;
    for (int x = 0; x < rw; ++x) {
      const double v = (1 - f) * blurred(y0, x) + f * blurred(y1, x);
      data(y, x) = std::uint8_t(std::clamp(std::lround(v), 0L, 255L));
      mask(y, x) = (valid(y0, x) && (f == 0.0 || valid(y1, x))) ? 1 : 0;
    }
  }
  view.image = Image(std::move(data), std::move(mask));
  return view;
}

std::vector<Feature> detect_asift(const Image& img, const AsiftConfig& cfg, AsiftStats* stats) {
  std::vector<Feature> out = detect_sift(img, cfg);
  AsiftStats local;
  local.base_area = img.valid_count();
  local.processed_area = local.base_area;
  local.views = 1;
  int view_index = 1;
  for (double t : cfg.tilt_levels) {
    if (t == 1.0) continue;
    for (double phi : cfg.rotations_deg) {
      const AsiftView view = simulate_view(img, t, phi);
      local.processed_area += view.image.valid_count();
      ++local.views;
      std::vector<Feature> found;
      if (view.image.valid_count() >= 32 * 32) found = detect_sift(view.image, cfg);
      const Eigen::Matrix2d lin = view.to_original.leftCols<2>();
      const double scale_gain = std::sqrt(std::abs(lin.determinant()));
      for (Feature f : found) {
        const Eigen::Vector2d p = view.map_to_original({f.x, f.y});
        if (p.x() < 0 || p.y() < 0 || p.x() > img.width() - 1 || p.y() > img.height() - 1) continue;
        const Eigen::Vector2d dir = lin * Eigen::Vector2d(std::cos(f.orientation), std::sin(f.orientation));
        f.x = p.x();
        f.y = p.y();
        f.scale *= scale_gain;
        f.orientation = std::fmod(std::atan2(dir.y(), dir.x()) + 2 * std::numbers::pi, 2 * std::numbers::pi);
        f.provenance = {t, phi, view_index};
        out.push_back(f);
      }
      ++view_index;
    }
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace nrm
