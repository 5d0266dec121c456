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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "nrmosaic/core.hpp"
#include "nrmosaic/features.hpp"

namespace nrm {

struct HookeSample {
  ForceSample forces;
  double reference_theta_x = 0.0;  // rad
};

/// Least-squares kappa (N/mm) from F2 - F1 = 2 kappa Sx sin(theta_x), with one
/// refit after dropping residuals beyond 3 sigma.
double calibrate_hooke(std::span<const HookeSample> samples, double sensor_sep_x_mm);

struct YoungsPair {
  Image unloaded;
  Image loaded;
  ForceSample forces;
};

/// Per-pair fit of the isotropic stretch p' = k p + t between matched
/// features.
struct StretchFit {
  double scale = 1.0;
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
  int matches = 0;
  int inliers = 0;
};

StretchFit fit_stretch(std::span<const Feature> unloaded, std::span<const Feature> loaded, double threshold_px = 1.0,
                       std::uint64_t seed = 0);

struct YoungsResult {
  double youngs_modulus = 0.0;  // Pa
  std::vector<double> strains;   // per pair, 1/k - 1
  std::vector<double> stresses;  // per pair, F_Z / A
};

/// Young's modulus from the lateral stretch of normally loaded captures.  The
/// tilt check uses mp's kappa and sensor separations; only its Poisson ratio and
/// scanner area enter the fit.
YoungsResult calibrate_youngs(std::span<const YoungsPair> pairs, const MaterialParams& mp,
                              const AsiftConfig& cfg = AsiftConfig{});

}  // namespace nrm
