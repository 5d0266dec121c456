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

#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "nrmosaic/errors.hpp"

namespace nrm {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

/// Pinhole intrinsics (zero skew) plus the physical size of one pixel at the
/// contact plane.
template <typename Scalar>
struct CameraIntrinsicsT {
  Scalar fx{1};
  Scalar fy{1};
  Scalar cx{0};
  Scalar cy{0};
  Scalar pixel_pitch{1};  // mm per pixel at the contact plane

  Mat3<Scalar> matrix() const {
    Mat3<Scalar> k;
    k << fx, Scalar(0), cx, Scalar(0), fy, cy, Scalar(0), Scalar(0), Scalar(1);
    return k;
  }

  Mat3<Scalar> inverse_matrix() const {
    Mat3<Scalar> k;
    k << Scalar(1) / fx, Scalar(0), -cx / fx, Scalar(0), Scalar(1) / fy, -cy / fy, Scalar(0),
        Scalar(0), Scalar(1);
    return k;
  }

  /// Camera-to-contact-plane distance implied by fx and the pixel pitch, in mm.
  Scalar standoff() const { return fx * pixel_pitch; }

  void validate(int width, int height) const {
    if (!(fx > 0) || !(fy > 0)) throw InvalidArgument("CameraIntrinsics: focal lengths must be positive");
    if (!(pixel_pitch > 0)) throw InvalidArgument("CameraIntrinsics: pixel pitch must be positive");
    if (cx < 0 || cy < 0 || cx > Scalar(width - 1) || cy > Scalar(height - 1))
      throw InvalidArgument("CameraIntrinsics: principal point outside image bounds");
  }

  template <typename Other>
  CameraIntrinsicsT<Other> cast() const {
    return {Other(fx), Other(fy), Other(cx), Other(cy), Other(pixel_pitch)};
  }
};

/// Camera pose.  `translation` is the camera centre, so a world point X lands at
/// camera coordinates rotation * (X - translation).
template <typename Scalar>
struct PoseT {
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  static PoseT identity() { return {}; }

  Vec3<Scalar> to_camera(const Vec3<Scalar>& world) const { return rotation * (world - translation); }
  Vec3<Scalar> to_world(const Vec3<Scalar>& cam) const { return rotation.transpose() * cam + translation; }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    const Mat3<Scalar> rrt = rotation * rotation.transpose();
    return (rrt - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - Scalar(1)) <= tol;
  }

  PoseT inverse() const {
    // world = R^T cam + T, i.e. the world frame seen from the camera frame.
    return {rotation.transpose(), -rotation * translation};
  }
};

/// Pose of `second` (given relative to the frame of `first`) expressed in the
/// frame `first` is relative to.
template <typename Scalar>
PoseT<Scalar> compose(const PoseT<Scalar>& first, const PoseT<Scalar>& second) {
  return {second.rotation * first.rotation,
          first.translation + first.rotation.transpose() * second.translation};
}

template <typename Scalar>
Mat3<Scalar> rotation_x(Scalar a) {
  return Eigen::AngleAxis<Scalar>(a, Vec3<Scalar>::UnitX()).toRotationMatrix();
}
template <typename Scalar>
Mat3<Scalar> rotation_y(Scalar a) {
  return Eigen::AngleAxis<Scalar>(a, Vec3<Scalar>::UnitY()).toRotationMatrix();
}
template <typename Scalar>
Mat3<Scalar> rotation_z(Scalar a) {
  return Eigen::AngleAxis<Scalar>(a, Vec3<Scalar>::UnitZ()).toRotationMatrix();
}

/// Euler angles of R = Rx(x) * Ry(y) * Rz(z), returned as (x, y, z).
template <typename Derived>
Vec3<typename Derived::Scalar> euler_xyz(const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  const Scalar sy = std::clamp(r(0, 2), Scalar(-1), Scalar(1));
  return {std::atan2(-r(1, 2), r(2, 2)), std::asin(sy), std::atan2(-r(0, 1), r(0, 0))};
}

template <typename Derived>
Mat3<typename Derived::Scalar> skew(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  Mat3<Scalar> m;
  m << Scalar(0), -v(2), v(1), v(2), Scalar(0), -v(0), -v(1), v(0), Scalar(0);
  return m;
}

/// Angle of the rotation R_a * R_b^T, in radians.
template <typename Scalar>
Scalar rotation_angle_between(const Mat3<Scalar>& a, const Mat3<Scalar>& b) {
  const Scalar c = ((a * b.transpose()).trace() - Scalar(1)) / Scalar(2);
  return std::acos(std::clamp(c, Scalar(-1), Scalar(1)));
}

/// Pinhole projection of a world point through a pose and intrinsics.
template <typename Scalar>
Vec2<Scalar> project_homogeneous(const Vec3<Scalar>& point, const PoseT<Scalar>& pose,
                                 const CameraIntrinsicsT<Scalar>& intrinsics) {
  const Vec3<Scalar> h = intrinsics.matrix() * pose.to_camera(point);
  if (std::abs(h.z()) < Scalar(1e-12)) throw DegenerateDepthError("project_homogeneous: depth is zero");
  return h.template head<2>() / h.z();
}

/// Inverse of project_homogeneous for a pixel whose camera depth is known.
template <typename Scalar>
Vec3<Scalar> back_project(const Vec2<Scalar>& pixel, Scalar depth, const PoseT<Scalar>& pose,
                          const CameraIntrinsicsT<Scalar>& intrinsics) {
  const Vec3<Scalar> ray = intrinsics.inverse_matrix() * pixel.homogeneous();
  return pose.to_world(ray * depth);
}

using CameraIntrinsics = CameraIntrinsicsT<double>;
using Pose = PoseT<double>;

}  // namespace nrm
