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

#include "nrmosaic/calibration.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "nrmosaic/errors.hpp"
#include "nrmosaic/force_rect.hpp"
#include "ransac_util.hpp"

namespace nrm {

namespace {

// Slope of y = a x through the origin, refitted once without >3 sigma residuals.
double robust_slope(const std::vector<double>& x, const std::vector<double>& y) {
  auto fit = [&](const std::vector<bool>& keep) {
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (keep[i]) {
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
      }
    return sxy / sxx;
  };
  std::vector<bool> keep(x.size(), true);
  const double a = fit(keep);
  if (x.size() < 3) return a;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) ss += (y[i] - a * x[i]) * (y[i] - a * x[i]);
  const double sd = std::sqrt(ss / double(x.size() - 1));
  double sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    keep[i] = std::abs(y[i] - a * x[i]) <= 3.0 * sd;
    if (keep[i]) sxx += x[i] * x[i];
  }
  return sxx > 0 ? fit(keep) : a;
}

// Least squares for p' = k p + t over the selected pairs.
Eigen::Vector3d solve_stretch(const std::vector<Eigen::Vector2d>& a, const std::vector<Eigen::Vector2d>& b,
                              const std::vector<int>& idx) {
  Eigen::MatrixXd m(2 * idx.size(), 3);
  Eigen::VectorXd r(2 * idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& p = a[idx[j]];
    const auto& q = b[idx[j]];
    m.row(2 * j) << p.x(), 1, 0;
    m.row(2 * j + 1) << p.y(), 0, 1;
    r(2 * j) = q.x();
    r(2 * j + 1) = q.y();
  }
  return m.colPivHouseholderQr().solve(r);
}

}  // namespace

double calibrate_hooke(std::span<const HookeSample> samples, double sensor_sep_x_mm) {
  if (!(sensor_sep_x_mm > 0)) throw InvalidArgument("sensor separation must be positive");
  std::vector<double> x, y;
  for (const auto& s : samples) {
    s.forces.validate();
    x.push_back(2.0 * std::sin(s.reference_theta_x) * sensor_sep_x_mm);
    y.push_back(s.forces.f2 - s.forces.f1);
  }
  double sxx = 0;
  for (double v : x) sxx += v * v;
  // 1e-4 rad of tilt over the sensor baseline is well below any usable reference
  if (x.empty() || sxx < std::pow(2e-4 * sensor_sep_x_mm, 2))
    throw InsufficientExcitationError("reference tilt angles are all close to zero");
  return robust_slope(x, y);
}

StretchFit fit_stretch(std::span<const Feature> unloaded, std::span<const Feature> loaded, double threshold_px,
                       std::uint64_t seed) {
  StretchFit out;
  const auto matches = match_features(unloaded, loaded);
  out.matches = int(matches.size());
  if (matches.size() < 3) throw NoMatchesError("too few feature matches between calibration images");
  std::vector<Eigen::Vector2d> a, b;
  for (const auto& m : matches) {
    a.emplace_back(unloaded[m.query].x, unloaded[m.query].y);
    b.emplace_back(loaded[m.train].x, loaded[m.train].y);
  }
  const int n = int(a.size());
  std::mt19937_64 rng(seed);
  std::vector<int> best;
  const double t2 = threshold_px * threshold_px;
  auto inliers_of = [&](const Eigen::Vector3d& m) {
    std::vector<int> in;
    for (int i = 0; i < n; ++i)
      if ((m(0) * a[i] + m.tail<2>() - b[i]).squaredNorm() <= t2) in.push_back(i);
    return in;
  };
  for (int it = 0; it < 500; ++it) {
    const auto s = detail::sample_indices(rng, n, 2);
    if ((a[s[0]] - a[s[1]]).norm() < 5.0) continue;
    auto in = inliers_of(solve_stretch(a, b, s));
    if (in.size() > best.size()) best = std::move(in);
  }
  if (best.size() < 3) throw NoMatchesError("no consistent stretch between calibration images");
  Eigen::Vector3d m = solve_stretch(a, b, best);
  for (int round = 0; round < 3; ++round) {
    auto in = inliers_of(m);
    if (in.size() < 3) break;
    m = solve_stretch(a, b, in);
    best = std::move(in);
  }
  out.scale = m(0);
  out.shift = m.tail<2>();
  out.inliers = int(best.size());
  return out;
}

YoungsResult calibrate_youngs(std::span<const YoungsPair> pairs, const MaterialParams& mp, const AsiftConfig& cfg) {
  if (pairs.empty()) throw InvalidArgument("calibrate_youngs needs at least one image pair");
  if (!(mp.poisson_ratio > 0 && mp.scanner_area > 0)) throw InvalidArgument("Poisson ratio and area must be positive");
  YoungsResult res;
  std::uint64_t seed = 1;
  for (const auto& p : pairs) {
    const Eigen::Vector2d th = tilt_angles(p.forces, mp);
    constexpr double max_tilt = 2.0 * std::numbers::pi / 180.0;
    if (std::abs(th.x()) > max_tilt || std::abs(th.y()) > max_tilt)
      throw TiltedCaptureError("calibration capture is tilted by more than 2 degrees");
    const auto fa = detect_sift(p.unloaded, cfg);
    const auto fb = detect_sift(p.loaded, cfg);
    const StretchFit fit = fit_stretch(fa, fb, 1.0, seed++);
    res.strains.push_back(1.0 / fit.scale - 1.0);
    res.stresses.push_back(total_force(p.forces) / mp.scanner_area);
  }
  double sxx = 0;
  for (double s : res.stresses) sxx += s * s;
  if (sxx <= 0.0) throw InsufficientExcitationError("calibration pairs carry no load; E is indeterminate");
  const double slope = robust_slope(res.stresses, res.strains);
  if (!(slope < 0.0)) throw InsufficientExcitationError("measured stretch does not grow with load");
  res.youngs_modulus = -mp.poisson_ratio / slope;
  return res;
}

}  // namespace nrm
