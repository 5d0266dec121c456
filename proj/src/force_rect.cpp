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

#include "nrmosaic/force_rect.hpp"

#include <cmath>

#include "nrmosaic/errors.hpp"

namespace nrm {

double total_force(const ForceSample& fs) { return fs.f1 + fs.f2 + fs.f3 + fs.f4; }

Eigen::Vector2d tilt_angles(const ForceSample& fs, const MaterialParams& mp) {
  const double ax = (fs.f2 - fs.f1) / (2.0 * mp.hooke_constant * mp.sensor_sep_x);
  const double ay = (fs.f4 - fs.f3) / (2.0 * mp.hooke_constant * mp.sensor_sep_y);
  if (!(std::abs(ax) <= 1.0) || !(std::abs(ay) <= 1.0))
    throw OutOfDomainError("tilt_angles: sensor difference exceeds 2*kappa*S; check sensors or kappa");
  return {std::asin(ax), std::asin(ay)};
}

Eigen::Vector3d tilt_normal(double theta_x, double theta_y) {
  const Eigen::Vector3d u = rotation_x(theta_x) * rotation_y(theta_y) * Eigen::Vector3d::UnitZ();
  return u.normalized();
}

TiltState tilt_state(const ForceSample& fs, const MaterialParams& mp) {
  const Eigen::Vector2d t = tilt_angles(fs, mp);
  return {total_force(fs), t.x(), t.y(), tilt_normal(t.x(), t.y())};
}

PlaneD depth_deviation_field(const Eigen::Vector3d& normal, int width, int height, double pitch,
                             const Eigen::Vector2d& centre) {
  if (normal.z() < 0.1) throw GrazingTiltError("depth_deviation_field: tilt normal too close to the plane");
  PlaneD z(height, width);
  const double gx = -normal.x() / normal.z() * pitch;
  const double gy = -normal.y() / normal.z() * pitch;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) z(y, x) = gx * (x - centre.x()) + gy * (y - centre.y());
  return z;
}

PlaneD depth_deviation_field(const Eigen::Vector3d& normal, int width, int height, double pitch) {
  return depth_deviation_field(normal, width, height, pitch, {0.5 * (width - 1), 0.5 * (height - 1)});
}

LoadField load_field(double total_force, const PlaneD& depth_deviation, double kappa) {
  return {(total_force + kappa * depth_deviation).max(0.0)};
}

LoadField load_field_for(const ForceSample& fs, const MaterialParams& mp, const CameraIntrinsics& intrinsics,
                         int width, int height) {
  const TiltState t = tilt_state(fs, mp);
  const PlaneD z = depth_deviation_field(t.normal, width, height, intrinsics.pixel_pitch, {intrinsics.cx, intrinsics.cy});
  return load_field(t.total_force, z, mp.hooke_constant);
}

double lateral_strain(double sigma_z, const MaterialParams& mp) {
  return -(mp.poisson_ratio / mp.youngs_modulus) * sigma_z;
}

PlaneD correction_factors(const LoadField& lf, const MaterialParams& mp) {
  PlaneD s = 1.0 - mp.radial_coefficient() * lf.load;
  if (s.size() > 0 && !(s.minCoeff() > 0.0))
    throw FoldOverError("correction factor is not positive; load exceeds the model range");
  return s;
}

CoordinateMap deformation_map(const LoadField& lf, const MaterialParams& mp, const Eigen::Vector2d& centre) {
  const PlaneD s = correction_factors(lf, mp);
  const int w = lf.width();
  const int h = lf.height();
  CoordinateMap m{PlaneD(h, w), PlaneD(h, w), Plane8::Ones(h, w)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      m.x(y, x) = centre.x() + (x - centre.x()) * s(y, x);
      m.y(y, x) = centre.y() + (y - centre.y()) * s(y, x);
    }
  return m;
}

namespace {

// Bilinear value and gradient of a plane at (x, y), with coordinates clamped into
// the grid.
struct FieldSample {
  double value;
  Eigen::Vector2d grad;
};

FieldSample sample_with_gradient(const PlaneD& f, double x, double y) {
  const int w = int(f.cols());
  const int h = int(f.rows());
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = std::min(int(x), std::max(w - 2, 0));
  const int y0 = std::min(int(y), std::max(h - 2, 0));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const double f00 = f(y0, x0), f01 = f(y0, x1), f10 = f(y1, x0), f11 = f(y1, x1);
  FieldSample out;
  out.value = (1 - ay) * ((1 - ax) * f00 + ax * f01) + ay * ((1 - ax) * f10 + ax * f11);
  out.grad.x() = (1 - ay) * (f01 - f00) + ay * (f11 - f10);
  out.grad.y() = (1 - ax) * (f10 - f00) + ax * (f11 - f01);
  return out;
}

}  // namespace

CoordinateMap rectification_map(const LoadField& lf, const MaterialParams& mp, const Eigen::Vector2d& centre) {
  const PlaneD s = correction_factors(lf, mp);
  const int w = lf.width();
  const int h = lf.height();
  CoordinateMap m{PlaneD(h, w), PlaneD(h, w), Plane8::Zero(h, w)};
  constexpr int max_iters = 30;
  constexpr double tol = 1e-9;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector2d target(x, y);
      const Eigen::Vector2d d = target - centre;
      Eigen::Vector2d q = centre + d / s(y, x);
      bool converged = false;
      for (int it = 0; it < max_iters; ++it) {
        const FieldSample fs = sample_with_gradient(s, q.x(), q.y());
        const Eigen::Vector2d rel = q - centre;
        const Eigen::Vector2d residual = centre + rel * fs.value - target;
        if (residual.norm() < tol) {
          converged = true;
          break;
        }
        Eigen::Matrix2d jac = fs.value * Eigen::Matrix2d::Identity() + rel * fs.grad.transpose();
        const double det = jac.determinant();
        if (!(std::abs(det) > 1e-12)) break;
        q -= jac.inverse() * residual;
      }
      m.x(y, x) = q.x();
      m.y(y, x) = q.y();
      m.valid(y, x) = converged ? 1 : 0;
    }
  }
  return m;
}

Image apply_map(const Image& src, const CoordinateMap& map, Interpolation mode) {
  const int w = int(map.x.cols());
  const int h = int(map.x.rows());
  constexpr double nowhere = -1e9;
  return warp_image(
      src, w, h,
      [&](double x, double y) -> Eigen::Vector2d {
        const int xi = int(x);
        const int yi = int(y);
        if (!map.valid(yi, xi)) return {nowhere, nowhere};
        return {map.x(yi, xi), map.y(yi, xi)};
      },
      mode);
}

Image rectify_image(const Image& img, const LoadField& lf, const MaterialParams& mp,
                    const CameraIntrinsics& intrinsics, Interpolation mode) {
  if (img.width() != lf.width() || img.height() != lf.height())
    throw InvalidArgument("rectify_image: image and load field dimensions differ");
  const CoordinateMap map = rectification_map(lf, mp, {intrinsics.cx, intrinsics.cy});
  return apply_map(img, map, mode);
}

}  // namespace nrm
