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
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "nrmosaic/errors.hpp"
#include "nrmosaic/pose.hpp"
#include "ransac_util.hpp"

namespace nrm {

namespace {

std::vector<int> homography_inliers(const Eigen::Matrix3d& h, std::span<const Correspondence> corrs, double thr) {
  std::vector<int> in;
  for (std::size_t i = 0; i < corrs.size(); ++i)
    if (transfer_error(h, corrs[i]) <= thr) in.push_back(int(i));
  return in;
}

bool well_conditioned(const Eigen::Matrix3d& h) {
  if (!h.allFinite()) return false;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h);
  const auto& s = svd.singularValues();
  return s(0) > 0 && s(2) > 1e-8 * s(0);
}

}  // namespace

Eigen::Matrix3d fit_homography(std::span<const Correspondence> corrs) {
  const auto n = Eigen::Index(corrs.size());
  if (n < 4) throw DegenerateConfigurationError("fit_homography: at least 4 correspondences required");
  const Eigen::Matrix3d t1 = detail::normalizing_transform(corrs, [](const Correspondence& c) { return c.first; });
  const Eigen::Matrix3d t2 = detail::normalizing_transform(corrs, [](const Correspondence& c) { return c.second; });
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = t1 * corrs[i].first.homogeneous();
    const Eigen::Vector3d q = t2 * corrs[i].second.homogeneous();
    a.row(2 * i) << 0, 0, 0, -p.x(), -p.y(), -p.z(), q.y() * p.x(), q.y() * p.y(), q.y() * p.z();
    a.row(2 * i + 1) << p.x(), p.y(), p.z(), 0, 0, 0, -q.x() * p.x(), -q.x() * p.y(), -q.x() * p.z();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd v = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  Eigen::Matrix3d h = t2.inverse() * hn * t1;
  if (std::abs(h(2, 2)) > 1e-12) h /= h(2, 2);
  else h /= h.norm();
  return h;
}

double homography_sampson_distance(const Eigen::Matrix3d& h, const Correspondence& c) {
  const Eigen::Vector3d x(c.first.x(), c.first.y(), 1.0);
  const double xp = c.second.x(), yp = c.second.y();
  const double w = h.row(2).dot(x);
  const Eigen::Vector2d e(yp * w - h.row(1).dot(x), h.row(0).dot(x) - xp * w);
  Eigen::Matrix<double, 2, 4> j;
  j << yp * h(2, 0) - h(1, 0), yp * h(2, 1) - h(1, 1), 0.0, w,
       h(0, 0) - xp * h(2, 0), h(0, 1) - xp * h(2, 1), -w, 0.0;
  const Eigen::Matrix2d jj = j * j.transpose();
  if (std::abs(jj.determinant()) < 1e-300) return std::numeric_limits<double>::infinity();
  return std::sqrt(std::max(0.0, e.dot(jj.inverse() * e)));
}

double transfer_error(const Eigen::Matrix3d& h, const Correspondence& c) {
  const Eigen::Vector3d m = h * c.first.homogeneous();
  if (std::abs(m.z()) < 1e-15) return std::numeric_limits<double>::infinity();
  return (m.head<2>() / m.z() - c.second).norm();
}

Eigen::Matrix3d refine_homography(const Eigen::Matrix3d& h0, std::span<const Correspondence> corrs, int iterations) {
  if (corrs.size() < 4 || std::abs(h0(2, 2)) < 1e-12) return h0;
  Eigen::Matrix3d h = h0 / h0(2, 2);
  auto cost = [&](const Eigen::Matrix3d& m) {
    double c = 0;
    for (const auto& p : corrs) {
      const double e = transfer_error(m, p);
      c += e * e;
    }
    return c;
  };
  double current = cost(h);
  double lambda = 1e-3;
  for (int it = 0; it < iterations; ++it) {
    Eigen::Matrix<double, 8, 8> jtj = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> jtr = Eigen::Matrix<double, 8, 1>::Zero();
    for (const auto& p : corrs) {
      const double x = p.first.x();
      const double y = p.first.y();
      const double u = h(0, 0) * x + h(0, 1) * y + h(0, 2);
      const double v = h(1, 0) * x + h(1, 1) * y + h(1, 2);
      const double w = h(2, 0) * x + h(2, 1) * y + 1.0;
      if (std::abs(w) < 1e-12) continue;
      const double iw = 1.0 / w;
      Eigen::Matrix<double, 2, 8> j = Eigen::Matrix<double, 2, 8>::Zero();
      j.row(0) << x * iw, y * iw, iw, 0, 0, 0, -u * x * iw * iw, -u * y * iw * iw;
      j.row(1) << 0, 0, 0, x * iw, y * iw, iw, -v * x * iw * iw, -v * y * iw * iw;
      const Eigen::Vector2d r(u * iw - p.second.x(), v * iw - p.second.y());
      jtj += j.transpose() * j;
      jtr += j.transpose() * r;
    }
    Eigen::Matrix<double, 8, 8> damped = jtj;
    damped.diagonal() *= 1.0 + lambda;
    const Eigen::Matrix<double, 8, 1> step = damped.ldlt().solve(-jtr);
    Eigen::Matrix3d cand = h;
    for (int k = 0; k < 8; ++k) cand(k / 3, k % 3) += step(k);
    const double c = cost(cand);
    if (c < current) {
      const bool small = step.norm() < 1e-12 * (1.0 + h.norm());
      h = cand;
      current = c;
      lambda *= 0.1;
      if (small) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e8) break;
    }
  }
  return h;
}

HomographyResult ransac_homography(std::span<const Correspondence> corrs, const RansacOptions& options) {
  const int n = int(corrs.size());
  if (n < 4) throw InsufficientInliersError("ransac_homography: fewer than 4 correspondences");
  std::mt19937_64 rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  HomographyResult best;
  int needed = options.max_iterations;
  int it = 0;
  for (; it < needed; ++it) {
    const auto sample = detail::gather(corrs, detail::sample_indices(rng, n, 4));
    Eigen::Matrix3d h;
    try {
      h = fit_homography(sample);
    } catch (const DegenerateConfigurationError&) {
      continue;
    }
    if (!well_conditioned(h)) continue;
    auto inliers = homography_inliers(h, corrs, options.threshold_px);
    if (inliers.size() > best.inliers.size()) {
      best.matrix = h;
      best.inliers = std::move(inliers);
      needed = std::min(needed, detail::ransac_iterations_needed(double(best.inliers.size()) / n, 4,
                                                                 options.confidence, options.max_iterations));
    }
  }
  best.iterations_used = it;
  if (best.inliers.size() < 4) throw InsufficientInliersError("ransac_homography: consensus below 4 inliers");
  for (int round = 0; round < 3; ++round) {
    const auto pts = detail::gather(corrs, best.inliers);
    const Eigen::Matrix3d h = refine_homography(fit_homography(pts), pts);
    if (!well_conditioned(h)) break;
    auto inliers = homography_inliers(h, corrs, options.threshold_px);
    if (inliers.size() < best.inliers.size()) break;
    const bool same = inliers == best.inliers;
    best.matrix = h;
    best.inliers = std::move(inliers);
    if (same) break;
  }
  return best;
}

Pose pose_from_homography(const Eigen::Matrix3d& h, const CameraIntrinsics& reference, const CameraIntrinsics& camera,
                          double plane_depth) {
  // G ~ R (I - T e3^T / d): the first two columns are rotation columns.
  Eigen::Matrix3d g = camera.inverse_matrix() * h * reference.matrix();
  const double lambda = 0.5 * (g.col(0).norm() + g.col(1).norm());
  if (!(lambda > 0)) throw SingularHomographyError("pose_from_homography: degenerate homography");
  g /= lambda;
  if (g(2, 2) < 0) g = -g;
  Eigen::Matrix3d m;
  m.col(0) = g.col(0);
  m.col(1) = g.col(1);
  m.col(2) = g.col(0).cross(g.col(1));
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) = -u.col(2);
    r = u * svd.matrixV().transpose();
  }
  Pose pose;
  pose.rotation = r;
  pose.translation = plane_depth * (Eigen::Vector3d::UnitZ() - r.transpose() * g.col(2));
  return pose;
}

Eigen::Matrix3d fit_similarity(std::span<const Correspondence> corrs) {
  if (corrs.size() < 2) throw DegenerateConfigurationError("fit_similarity: need at least two pairs");
  Eigen::MatrixXd a(2 * corrs.size(), 4);
  Eigen::VectorXd b(2 * corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto& p = corrs[i].first;
    const auto& q = corrs[i].second;
    a.row(2 * i) << p.x(), -p.y(), 1, 0;
    a.row(2 * i + 1) << p.y(), p.x(), 0, 1;
    b(2 * i) = q.x();
    b(2 * i + 1) = q.y();
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4) throw DegenerateConfigurationError("fit_similarity: coincident points");
  const Eigen::Vector4d x = qr.solve(b);
  Eigen::Matrix3d s;
  s << x(0), -x(1), x(2), x(1), x(0), x(3), 0, 0, 1;
  return s;
}

Pose pose_from_similarity(const Eigen::Matrix3d& s, const CameraIntrinsics& reference, const CameraIntrinsics& camera,
                          double plane_depth) {
  const Eigen::Matrix2d a = s.topLeftCorner<2, 2>();
  const double scale = std::sqrt(std::abs(a.determinant()));
  if (!(scale > 0)) throw SingularHomographyError("pose_from_similarity: degenerate similarity");
  // pixels: u' = A (u - c_ref) - A T f / d + c, with A = scale * Rz
  const Eigen::Vector2d c_ref(reference.cx, reference.cy);
  const Eigen::Vector2d c(camera.cx, camera.cy);
  const Eigen::Vector2d t = s.topRightCorner<2, 1>();
  const Eigen::Vector2d shift = a.inverse() * (c - a * c_ref - t);
  Pose pose;
  pose.rotation.setIdentity();
  pose.rotation.topLeftCorner<2, 2>() = a / scale;
  pose.translation << shift.x() * plane_depth / camera.fx, shift.y() * plane_depth / camera.fy,
      plane_depth * (1.0 - 1.0 / scale);
  return pose;
}

}  // namespace nrm
