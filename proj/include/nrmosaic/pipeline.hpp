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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nrmosaic/core.hpp"
#include "nrmosaic/features.hpp"
#include "nrmosaic/pose.hpp"

namespace nrm {

struct Placement {
  long frame_id = 0;
  double offset_x_mm = 0.0;  // mm position of the placed image's top-left pixel
  double offset_y_mm = 0.0;
};

/// Feather-blended reconstruction canvas in millimetre coordinates, one canvas
/// pixel per pixel_pitch.  The millimetre origin is frame 1's principal point.
class Mosaic {
 public:
  /// Canvas pixel centres sit at anchor_mm + k * pitch_mm.
  explicit Mosaic(double pitch_mm = 0.1, const Eigen::Vector2d& anchor_mm = Eigen::Vector2d::Zero());

  double pitch() const { return pitch_; }
  const Eigen::Vector2d& anchor() const { return anchor_; }
  bool empty() const { return placements_.empty(); }
  const std::vector<Placement>& placements() const { return placements_; }

  /// Blended canvas over the covered extent; uncovered pixels are masked.
  Image canvas() const;
  /// Millimetre position of canvas() pixel (0, 0).
  Eigen::Vector2d canvas_origin_mm() const;

  /// Window of at most width x height pixels centred on centre_mm, clipped to
  /// the covered extent.  Empty when nothing is covered there.
  Image crop(const Eigen::Vector2d& centre_mm, int width, int height, Eigen::Vector2d* top_left_mm) const;

  void add(const Image& img, const Eigen::Vector2d& offset_mm, long frame_id);

 private:
  void ensure(long x0, long y0, long x1, long y1);

  Eigen::Vector2d grid(const Eigen::Vector2d& mm) const;
  double pitch_;
  Eigen::Vector2d anchor_;
  PlaneF sum_;
  PlaneF weight_;
  long ox_ = 0, oy_ = 0;  // array index of the anchor
  long bx0_ = 0, by0_ = 0, bx1_ = -1, by1_ = -1;  // covered box, array indices
  std::vector<Placement> placements_;
};

/// Places img with its top-left pixel at offset_mm; overlaps are averaged with
/// weights equal to the distance to the image's mask edge.
Mosaic stitch(Mosaic mosaic, const Image& img, const Eigen::Vector2d& offset_mm, long frame_id = 0);

struct PathEntry {
  long frame_id = 0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  bool skipped = false;
};

struct PathEstimate {
  std::vector<PathEntry> entries;

  int skipped() const;
  double length_mm() const;
};

struct PathMetrics {
  double rmse_mm = 0.0;
  double error_ratio_percent = 0.0;
  std::vector<double> per_frame_errors;
  double total_error_mm = 0.0;
  double distance_mm = 0.0;  // ground-truth arc length
};

PathMetrics path_metrics(const PathEstimate& est, const PathEstimate& truth);

struct FrameReport {
  long frame_id = 0;
  int matches = 0;
  int inliers = 0;
  bool skipped = false;
  bool planar = false;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double yaw_deg = 0.0;
};

struct PipelineOptions {
  RansacOptions ransac;
  int min_inliers = 15;
  double neighborhood_scale = 3.0;
  double match_ratio = 0.8;
  bool use_asift = true;
  // scanner face rides on the contact plane: planar poses keep only yaw, shift and scale
  bool in_plane_motion = true;
  // >0 restricts rectified frames to this circle about the principal point
  double window_radius_px = 0.0;
  double window_margin_px = 2.0;
  double reference_force_warning = 0.5;  // N
  std::function<void(const FrameReport&)> on_frame;
};

struct ReconstructionResult {
  Mosaic mosaic;
  PathEstimate path;
  std::vector<FrameReport> frames;
  std::vector<std::string> warnings;
};

/// Force-rectifies one frame and applies the scanner window.
Image rectify_frame(const Image& frame, const ForceSample& forces, const MaterialParams& mp,
                    const CameraIntrinsics& intrinsics, const PipelineOptions& options);

/// Sequential reconstruction: every frame after the first is posed against the
/// mosaic around the previous position, corrected, re-projected and stitched.
ReconstructionResult reconstruct(std::span<const Image> frames, std::span<const ForceSample> forces,
                                 const MaterialParams& mp, const CameraIntrinsics& intrinsics,
                                 const AsiftConfig& cfg, const PipelineOptions& options = {});

struct MatchComparison {
  int features_a = 0;
  int sift_features_b = 0;
  int asift_features_b = 0;
  int sift_matches = 0;
  int asift_view_matches = 0;  // before removing repeats across views
  int asift_matches = 0;
  std::vector<Correspondence> sift_inliers;
  std::vector<Correspondence> asift_inliers;

  /// A-SIFT over SIFT inlier count; 0 when SIFT has none.
  double ratio() const {
    return sift_inliers.empty() ? 0.0 : double(asift_inliers.size()) / double(sift_inliers.size());
  }
};

/// Plain SIFT on both images against SIFT on `a` and modified A-SIFT on `b`,
/// each followed by RANSAC; inliers are the larger of the fundamental-matrix
/// and homography consensus sets.
MatchComparison compare_matching(const Image& a, const Image& b, const AsiftConfig& cfg,
                                 const RansacOptions& options = {});

}  // namespace nrm
