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

#include <Eigen/Core>

#include "nrmosaic/core.hpp"
#include "nrmosaic/imgproc.hpp"

namespace nrm {

/// Total load and probe tilt recovered from one force sample.
struct TiltState {
  double total_force = 0.0;  // N
  double theta_x = 0.0;      // rad
  double theta_y = 0.0;      // rad
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
};

/// Effective per-pixel contact load (N) over the deformed image grid.
struct LoadField {
  PlaneD load;

  int width() const { return int(load.cols()); }
  int height() const { return int(load.rows()); }
};

/// Source coordinates for every pixel of an inverse-mapped warp.
struct CoordinateMap {
  PlaneD x;
  PlaneD y;
  Plane8 valid;
};

double total_force(const ForceSample& fs);

/// (theta_x, theta_y) in radians from the sensor differences.
Eigen::Vector2d tilt_angles(const ForceSample& fs, const MaterialParams& mp);

/// u' = Rx(theta_x) Ry(theta_y) (0, 0, 1)^T.
Eigen::Vector3d tilt_normal(double theta_x, double theta_y);

TiltState tilt_state(const ForceSample& fs, const MaterialParams& mp);

/// Depth deviation (mm) of the tilted contact plane through `centre`, sampled on
/// the pixel grid; X and Y are measured from `centre` in mm.
PlaneD depth_deviation_field(const Eigen::Vector3d& normal, int width, int height, double pitch,
                             const Eigen::Vector2d& centre);
/// Same, measured from the image centre.
PlaneD depth_deviation_field(const Eigen::Vector3d& normal, int width, int height, double pitch);

/// F(x, y) = Fz + kappa * Z(x, y), clamped at zero.
LoadField load_field(double total_force, const PlaneD& depth_deviation, double kappa);

/// Load field for a sample, with the tilt plane centred on the principal point.
LoadField load_field_for(const ForceSample& fs, const MaterialParams& mp, const CameraIntrinsics& intrinsics,
                         int width, int height);

/// Lateral strain for an axial stress: -(v / E) * sigma_z.
double lateral_strain(double sigma_z, const MaterialParams& mp);

/// Per-pixel radial factor 1 - v F(x, y) / (E A).  Throws FoldOverError when any
/// factor is not positive.
PlaneD correction_factors(const LoadField& lf, const MaterialParams& mp);

/// Forward model: deformed pixel p' came from undeformed location
/// c + (p' - c) * factor(p').
CoordinateMap deformation_map(const LoadField& lf, const MaterialParams& mp, const Eigen::Vector2d& centre);

/// Inverse of deformation_map: for each rectified pixel, the deformed pixel that
/// moves onto it.  Solved per pixel by Newton iteration.
CoordinateMap rectification_map(const LoadField& lf, const MaterialParams& mp, const Eigen::Vector2d& centre);

/// Undoes the contact stretch of a deformed frame.  The warp centre is the
/// principal point; the mask follows the warp.
Image rectify_image(const Image& img, const LoadField& lf, const MaterialParams& mp,
                    const CameraIntrinsics& intrinsics, Interpolation mode = Interpolation::Bilinear);

/// Applies a coordinate map with the given interpolation.
Image apply_map(const Image& src, const CoordinateMap& map, Interpolation mode = Interpolation::Bilinear);

}  // namespace nrm
