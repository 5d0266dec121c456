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

#include "nrmosaic/geometry.hpp"
#include "nrmosaic/image.hpp"

namespace nrm {

/// Elastic constants of the scanned surface plus scanner geometry.
struct MaterialParams {
  double youngs_modulus = 16100.0;  // Pa
  double poisson_ratio = 0.5;
  double hooke_constant = 18.0;  // N/mm
  double scanner_area = 0.0048;  // m^2
  double sensor_sep_x = 53.0;    // mm
  double sensor_sep_y = 53.0;    // mm

  void validate() const;

  /// Radial correction coefficient v / (E A), per newton.
  double radial_coefficient() const { return poisson_ratio / (youngs_modulus * scanner_area); }
};

/// One frame's four contact-sensor readings, in newtons.  F4->F3 spans the X
/// axis, F2->F1 spans the Y axis.
struct ForceSample {
  long frame_id = 0;
  double f1 = 0.0;
  double f2 = 0.0;
  double f3 = 0.0;
  double f4 = 0.0;

  void validate() const;
};

}  // namespace nrm
