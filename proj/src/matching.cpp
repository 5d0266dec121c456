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

#include <algorithm>
#include <limits>
#include <map>

#include <Eigen/Dense>

#include "nrmosaic/features.hpp"

namespace nrm {

namespace {

using DescMatrix = Eigen::Matrix<float, Eigen::Dynamic, 128, Eigen::RowMajor>;

DescMatrix stack(std::span<const Feature> fs, std::span<const int> idx) {
  DescMatrix m(idx.size(), 128);
  for (std::size_t i = 0; i < idx.size(); ++i)
    m.row(Eigen::Index(i)) = Eigen::Map<const Eigen::Matrix<float, 1, 128>>(fs[idx[i]].descriptor.data());
  return m;
}

std::vector<Match> match_subsets(std::span<const Feature> a, std::span<const int> ia, std::span<const Feature> b,
                                 std::span<const int> ib, double ratio) {
  std::vector<Match> out;
  if (ia.empty() || ib.empty()) return out;
  const DescMatrix da = stack(a, ia);
  const DescMatrix db = stack(b, ib);
  const auto na = da.rows();
  const auto nb = db.rows();
  constexpr float inf = std::numeric_limits<float>::infinity();
  std::vector<int> best_b(na, -1);
  std::vector<float> best_d2(na, inf), second_d2(na, inf);
  std::vector<int> best_a(nb, -1);
  std::vector<float> best_a_d2(nb, inf);

  // Squared distances of unit vectors: 2 - 2 a.b, evaluated block-wise.
  constexpr Eigen::Index block = 512;
  const Eigen::VectorXf na2 = da.rowwise().squaredNorm();
  const Eigen::VectorXf nb2 = db.rowwise().squaredNorm();
  for (Eigen::Index r0 = 0; r0 < na; r0 += block) {
    const Eigen::Index rows = std::min(block, na - r0);
    Eigen::MatrixXf d2 = -2.0f * (da.middleRows(r0, rows) * db.transpose());
    d2.colwise() += na2.segment(r0, rows);
    d2.rowwise() += nb2.transpose();
    for (Eigen::Index j = 0; j < nb; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        const float v = std::max(0.0f, d2(i, j));
        const auto ai = r0 + i;
        if (v < best_d2[ai]) {
          second_d2[ai] = best_d2[ai];
          best_d2[ai] = v;
          best_b[ai] = int(j);
        } else if (v < second_d2[ai]) {
          second_d2[ai] = v;
        }
        if (v < best_a_d2[j]) {
          best_a_d2[j] = v;
          best_a[j] = int(ai);
        }
      }
    }
  }
  const float ratio2 = float(ratio * ratio);
  for (Eigen::Index i = 0; i < na; ++i) {
    const int j = best_b[i];
    if (j < 0 || best_a[j] != int(i)) continue;
    if (!(best_d2[i] < ratio2 * second_d2[i])) continue;
    out.push_back({ia[i], ib[j], (da.row(i) - db.row(j)).norm()});
  }
  return out;
}

std::vector<int> iota(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = int(i);
  return v;
}

}  // namespace

std::vector<Match> match_features(std::span<const Feature> a, std::span<const Feature> b, double ratio) {
  const auto ia = iota(a.size());
  const auto ib = iota(b.size());
  return match_subsets(a, ia, b, ib, ratio);
}

std::vector<Match> match_features_by_view(std::span<const Feature> a, std::span<const Feature> b, double ratio) {
  std::map<int, std::vector<int>> views;
  for (std::size_t i = 0; i < b.size(); ++i) views[b[i].provenance.view].push_back(int(i));
  const auto ia = iota(a.size());
  std::vector<Match> out;
  for (const auto& [view, ib] : views) {
    auto m = match_subsets(a, ia, b, ib, ratio);
    out.insert(out.end(), m.begin(), m.end());
  }
  return out;
}

}  // namespace nrm
