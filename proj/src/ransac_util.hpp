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

#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nrmosaic/pose.hpp"

namespace nrm::detail {

// Draws k distinct indices from [0, n) by partial Fisher-Yates.
inline std::vector<int> sample_indices(std::mt19937_64& rng, int n, int k) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

inline int ransac_iterations_needed(double inlier_fraction, int sample_size, double confidence, int cap) {
  const double p = std::pow(inlier_fraction, sample_size);
  if (p >= 1.0) return 1;
  if (p <= 0.0) return cap;
  // log1p keeps tiny sample success rates from rounding to log(1) == 0
  const double n = std::log(1.0 - confidence) / std::log1p(-p);
  return !(n < double(cap)) ? cap : std::max(1, int(std::ceil(n)));
}

// Similarity that moves the centroid to the origin and the mean distance to sqrt(2).
template <typename Getter>
Eigen::Matrix3d normalizing_transform(std::span<const Correspondence> corrs, Getter get) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& c : corrs) mean += get(c);
  mean /= double(corrs.size());
  double dist = 0;
  for (const auto& c : corrs) dist += (get(c) - mean).norm();
  dist /= double(corrs.size());
  const double s = dist > 0 ? std::sqrt(2.0) / dist : 1.0;
  Eigen::Matrix3d t;
  t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
  return t;
}

template <typename T>
std::vector<T> gather(std::span<const T> all, const std::vector<int>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace nrm::detail
