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

#include "nrmosaic/errors.hpp"
#include "nrmosaic/pipeline.hpp"

namespace nrm {

PathMetrics path_metrics(const PathEstimate& est, const PathEstimate& truth) {
  if (est.entries.size() != truth.entries.size()) throw FrameMismatchError("path lengths differ");
  PathMetrics m;
  const std::size_t n = est.entries.size();
  double sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& e = est.entries[k];
    const auto& t = truth.entries[k];
    if (e.frame_id != t.frame_id) throw FrameMismatchError("frame ids differ at row " + std::to_string(k));
    const double dx = e.x_mm - t.x_mm, dy = e.y_mm - t.y_mm;
    sq += dx * dx + dy * dy;
    m.per_frame_errors.push_back(std::sqrt(dx * dx + dy * dy));
    m.total_error_mm += m.per_frame_errors.back();
  }
  m.rmse_mm = n ? std::sqrt(sq / double(n)) : 0.0;
  m.distance_mm = truth.length_mm();
  if (m.distance_mm > 0.0)
    m.error_ratio_percent = 100.0 * m.total_error_mm / m.distance_mm;
  else
    m.error_ratio_percent = m.total_error_mm == 0.0 ? 0.0 : INFINITY;
  return m;
}

}  // namespace nrm
