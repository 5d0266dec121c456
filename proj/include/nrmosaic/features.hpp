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

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "nrmosaic/image.hpp"

namespace nrm {

/// Simulated view a feature was detected in.
struct ViewProvenance {
  double tilt = 1.0;
  double rotation_deg = 0.0;
  int view = 0;  // index into the A-SIFT schedule, 0 for the untilted view
};

using Descriptor = std::array<float, 128>;

/// Keypoint in original-image coordinates with an L2-normalised descriptor.
struct Feature {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;        // pixels
  double orientation = 0.0;  // radians
  Descriptor descriptor{};
  ViewProvenance provenance;
};

/// Detector thresholds plus the two-level tilt schedule.
struct AsiftConfig {
  double stretch_ratio = 1.13;
  double delta_t = 1.0;
  double latitude_deg = 0.0;
  std::vector<double> tilt_levels{1.0};
  std::vector<double> rotations_deg;  // applied at tilt == delta_t
  double peak_threshold = 1.0;        // DoG units on a 0..255 luminance scale
  double edge_threshold = 10.0;
  int scales_per_octave = 3;
  double sigma0 = 1.6;

  /// Predicted cost relative to one plain SIFT pass: 1 + n_rotations * cos(latitude).
  double compute_factor() const;
};

/// t = 1 / cos(theta).
double tilt_from_angle(double theta);

/// Two-level schedule: t = 1, plus t = sqrt(R) at rotations 0, 20, ..., 160 degrees.
AsiftConfig asift_schedule(double stretch_ratio);

/// Difference-of-Gaussians keypoints with 128-D gradient-histogram descriptors.
/// Keypoints whose 4-sigma support touches an invalid (masked or out-of-image)
/// pixel are dropped.
std::vector<Feature> detect_sift(const Image& img, const AsiftConfig& cfg);

/// One rotated and tilted view of an image, plus the map back to the original.
struct AsiftView {
  Image image;
  double tilt = 1.0;
  double rotation_deg = 0.0;
  Eigen::Matrix<double, 2, 3> to_original = Eigen::Matrix<double, 2, 3>::Identity();

  Eigen::Vector2d map_to_original(const Eigen::Vector2d& p) const {
    return to_original.leftCols<2>() * p + to_original.col(2);
  }
};

/// Rotates by `rotation_deg` onto an expanded canvas, then compresses the y axis
/// by `tilt` after a directional anti-alias blur of 0.8 sqrt(t^2 - 1).
AsiftView simulate_view(const Image& img, double tilt, double rotation_deg);

struct AsiftStats {
  long base_area = 0;       // valid pixels of the input
  long processed_area = 0;  // valid pixels summed over every simulated view
  int views = 0;

  double area_factor() const { return base_area ? double(processed_area) / double(base_area) : 0.0; }
};

/// Union of SIFT features over every view of the schedule, mapped back into the
/// original frame, in schedule order.
std::vector<Feature> detect_asift(const Image& img, const AsiftConfig& cfg, AsiftStats* stats = nullptr);

struct Match {
  int query = 0;  // index into the first list
  int train = 0;  // index into the second list
  float distance = 0.0f;
};

/// Mutual nearest neighbours that pass the ratio test; one-to-one.
std::vector<Match> match_features(std::span<const Feature> a, std::span<const Feature> b, double ratio = 0.8);

/// Matches `a` against each simulated view of `b` separately and returns the
/// union.  Within a view the result is one-to-one; a point of `a` may pair with
/// its counterpart in several views.
std::vector<Match> match_features_by_view(std::span<const Feature> a, std::span<const Feature> b,
                                          double ratio = 0.8);

}  // namespace nrm
