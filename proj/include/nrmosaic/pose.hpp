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

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nrmosaic/core.hpp"
#include "nrmosaic/imgproc.hpp"

namespace nrm {

/// A matched point pair: `first` in the reference image, `second` in the new frame.
struct Correspondence {
  Eigen::Vector2d first;
  Eigen::Vector2d second;
};

/// Rank-2 fundamental matrix with unit Frobenius norm, second^T F first = 0.
struct FundamentalMatrix {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

struct RansacOptions {
  double threshold_px = 1.0;
  int max_iterations = 2000;
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

struct RansacResult {
  FundamentalMatrix model;
  std::vector<int> inliers;
  int iterations_used = 0;
};

/// Drops correspondences lying within tol_px of an earlier kept one in both
/// images, as happens when several simulated views match the same point.
std::vector<Correspondence> dedupe_correspondences(std::span<const Correspondence> corrs, double tol_px = 1.0);

/// Normalised (Hartley) linear eight-point solve with rank-2 truncation.
FundamentalMatrix eight_point(std::span<const Correspondence> corrs);

/// First-order geometric (Sampson) distance of a pair to F, in pixels.
double sampson_distance(const Eigen::Matrix3d& f, const Correspondence& c);

/// MSAC-scored RANSAC with local optimisation of each new best hypothesis; the
/// winner is refined on the Sampson error of its inliers.
RansacResult ransac_fundamental(std::span<const Correspondence> corrs, const RansacOptions& options);

/// One (R, t) factorisation of an essential matrix, with x2 = R x1 + t.
struct PoseCandidate {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d t;
  int in_front = 0;  // points with positive depth in both cameras
};

std::vector<PoseCandidate> pose_candidates(const FundamentalMatrix& f, const CameraIntrinsics& first,
                                           const CameraIntrinsics& second, std::span<const Correspondence> corrs);

/// Relative pose of the second camera from F via the essential matrix and the
/// cheirality test.  Translation is scaled so the de-rotated median pixel
/// displacement corresponds to pixel_pitch millimetres per pixel.
Pose recover_pose(const FundamentalMatrix& f, const CameraIntrinsics& intrinsics,
                  std::span<const Correspondence> corrs);
Pose recover_pose(const FundamentalMatrix& f, const CameraIntrinsics& first, const CameraIntrinsics& second,
                  std::span<const Correspondence> corrs);

/// R' = I and t_z = 0.
Pose correct_pose(const Pose& p);

/// Z angle of the X-Y-Z Euler factorisation of the pose rotation.
double yaw_of(const Pose& p);

/// 3x3 map from contact-plane coordinates (X, Y, 1) to camera coordinates for a
/// pose relative to a reference camera that sees the plane at depth `plane_depth`.
Eigen::Matrix3d plane_projection(const Pose& p, double plane_depth);

/// Homography taking pixels seen from `p` to pixels seen from `corrected`.
Eigen::Matrix3d reprojection_homography(const Pose& p, const Pose& corrected, const CameraIntrinsics& intrinsics);

/// Resamples a frame as seen from the corrected pose (contact plane at the
/// intrinsics' standoff).
Image reproject(const Image& img, const Pose& p, const Pose& corrected, const CameraIntrinsics& intrinsics,
                Interpolation mode = Interpolation::Bilinear);

// Homography estimation -----------------------------------------------------

struct HomographyResult {
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Identity();  // second ~ H first
  std::vector<int> inliers;
  int iterations_used = 0;
};

/// Normalised DLT over all pairs (>= 4).
Eigen::Matrix3d fit_homography(std::span<const Correspondence> corrs);

/// Gauss-Newton refinement of the forward transfer error.
Eigen::Matrix3d refine_homography(const Eigen::Matrix3d& h, std::span<const Correspondence> corrs,
                                  int iterations = 10);

double transfer_error(const Eigen::Matrix3d& h, const Correspondence& c);

/// First-order geometric error of a correspondence under h, with noise in both
/// images; comparable to sampson_distance for a fundamental matrix.
double homography_sampson_distance(const Eigen::Matrix3d& h, const Correspondence& c);

HomographyResult ransac_homography(std::span<const Correspondence> corrs, const RansacOptions& options);

/// Camera pose relative to the reference camera from a plane-induced homography
/// when the plane normal is the reference optical axis at distance `plane_depth`.
Pose pose_from_homography(const Eigen::Matrix3d& h, const CameraIntrinsics& reference,
                          const CameraIntrinsics& camera, double plane_depth);

/// Least-squares p' = s Rz p + t over all pairs, as a 3x3 matrix.
Eigen::Matrix3d fit_similarity(std::span<const Correspondence> corrs);

/// Pose for motion parallel to the contact plane: rotation about the optical
/// axis, translation in x and y, and depth change from the scale.
Pose pose_from_similarity(const Eigen::Matrix3d& s, const CameraIntrinsics& reference,
                          const CameraIntrinsics& camera, double plane_depth);

/// Pose estimate with the planar fallback applied.
struct RelativePose {
  Pose pose;
  std::vector<int> inliers;
  bool planar = false;
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();
};

/// Fundamental-matrix RANSAC; when a homography explains at least
/// `planar_fraction` of its inliers, or wins on GRIC, the pose comes from the
/// homography instead.  With in_plane_motion the planar pose is restricted to
/// yaw, translation and scale, refitted on the homography inliers.
RelativePose estimate_relative_pose(std::span<const Correspondence> corrs, const CameraIntrinsics& reference,
                                    const CameraIntrinsics& camera, double plane_depth,
                                    const RansacOptions& options, double planar_fraction = 0.95,
                                    bool in_plane_motion = false);

}  // namespace nrm
