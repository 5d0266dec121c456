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

#include "nrmosaic/core.hpp"

#include "nrmosaic/errors.hpp"

namespace nrm {

void MaterialParams::validate() const {
  if (!(youngs_modulus > 0)) throw InvalidArgument("MaterialParams: E must be positive");
  if (!(poisson_ratio > 0) || poisson_ratio > 0.5)
    throw InvalidArgument("MaterialParams: Poisson ratio must lie in (0, 0.5]");
  if (!(hooke_constant > 0)) throw InvalidArgument("MaterialParams: kappa must be positive");
  if (!(scanner_area > 0)) throw InvalidArgument("MaterialParams: scanner area must be positive");
  if (!(sensor_sep_x > 0) || !(sensor_sep_y > 0))
    throw InvalidArgument("MaterialParams: sensor separations must be positive");
}

void ForceSample::validate() const {
  if (f1 < 0 || f2 < 0 || f3 < 0 || f4 < 0)
    throw InvalidArgument("ForceSample: contact sensors cannot report negative force");
}

}  // namespace nrm
