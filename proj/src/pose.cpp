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

#include "nrmosaic/pose.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "nrmosaic/errors.hpp"
#include "ransac_util.hpp"

namespace nrm {

namespace {

Eigen::Vector3d hom(const Eigen::Vector2d& p) { return p.homogeneous(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + std::ptrdiff_t(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

std::vector<int> fundamental_inliers(const Eigen::Matrix3d& f, std::span<const Correspondence> corrs, double thr) {
  std::vector<int> in;
  for (std::size_t i = 0; i < corrs.size(); ++i)
    if (sampson_distance(f, corrs[i]) <= thr) in.push_back(int(i));
  return in;
}

// Levenberg-Marquardt on the summed squared Sampson distance over the
// rank-2 manifold F = T2' U diag(1, s, 0) V' T1 in normalised coordinates.
Eigen::Matrix3d refine_fundamental(const Eigen::Matrix3d& f0, std::span<const Correspondence> corrs) {
  const int n = int(corrs.size());
  if (n < 8) return f0;
  const Eigen::Matrix3d t1 = detail::normalizing_transform(corrs, [](const Correspondence& c) { return c.first; });
  const Eigen::Matrix3d t2 = detail::normalizing_transform(corrs, [](const Correspondence& c) { return c.second; });
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(t2.inverse().transpose() * f0 * t1.inverse(),
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  const Eigen::Vector3d sv = svd.singularValues();
  if (!(sv(0) > 0)) return f0;
  double ratio = sv(1) / sv(0);

  auto rot = [](const Eigen::Vector3d& w) -> Eigen::Matrix3d {
    const double a = w.norm();
    return a > 0 ? Eigen::AngleAxisd(a, w / a).toRotationMatrix() : Eigen::Matrix3d::Identity();
  };
  auto build = [&](const Eigen::Matrix<double, 7, 1>& x) -> Eigen::Matrix3d {
    const Eigen::Matrix3d uu = u * rot(x.segment<3>(0)), vv = v * rot(x.segment<3>(3));
    const Eigen::Matrix3d fn = uu * Eigen::Vector3d(1.0, ratio + x(6), 0.0).asDiagonal() * vv.transpose();
    const Eigen::Matrix3d f = t2.transpose() * fn * t1;
    return f / f.norm();
  };
  auto residuals = [&](const Eigen::Matrix3d& f) {
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::Vector3d x1 = hom(corrs[i].first), x2 = hom(corrs[i].second);
      const Eigen::Vector3d fx1 = f * x1, ftx2 = f.transpose() * x2;
      const double denom = fx1.head<2>().squaredNorm() + ftx2.head<2>().squaredNorm();
      r(i) = denom > 0 ? x2.dot(fx1) / std::sqrt(denom) : 0.0;
    }
    return r;
  };

  Eigen::Matrix<double, 7, 1> zero = Eigen::Matrix<double, 7, 1>::Zero();
  Eigen::VectorXd r = residuals(build(zero));
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int iter = 0; iter < 30; ++iter) {
    Eigen::MatrixXd jac(n, 7);
    for (int k = 0; k < 7; ++k) {
      constexpr double h = 1e-7;
      Eigen::Matrix<double, 7, 1> dp = zero, dm = zero;
      dp(k) = h;
      dm(k) = -h;
      jac.col(k) = (residuals(build(dp)) - residuals(build(dm))) / (2 * h);
    }
    const Eigen::Matrix<double, 7, 7> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 7, 1> jtr = jac.transpose() * r;
    bool improved = false;
    while (lambda < 1e8) {
      Eigen::Matrix<double, 7, 7> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Matrix<double, 7, 1> step = -a.ldlt().solve(jtr);
      const Eigen::VectorXd r2 = residuals(build(step));
      const double c2 = r2.squaredNorm();
      if (std::isfinite(c2) && c2 < cost) {
        // re-centre the parameterisation on the accepted point
        u = u * rot(step.segment<3>(0));
        v = v * rot(step.segment<3>(3));
        ratio += step(6);
        const bool small = cost - c2 < 1e-12 * cost;
        cost = c2;
        r = r2;
        lambda = std::max(lambda / 10, 1e-12);
        improved = !small;
        break;
      }
      lambda *= 10;
    }
    if (!improved) break;
  }
  return build(zero);
}

// Truncated quadratic cost: inliers pay their squared residual, the rest the threshold.
double msac_score(const Eigen::Matrix3d& f, std::span<const Correspondence> corrs, double thr) {
  double total = 0.0;
  for (const auto& c : corrs) total += std::min(std::pow(sampson_distance(f, c), 2), thr * thr);
  return total;
}

// Local optimisation of a RANSAC hypothesis: fits on random non-minimal
// subsets of its widened consensus, each followed by refits that shrink the
// threshold back to thr.  Keeps whichever model lowers the truncated cost.
void local_optimise(FundamentalMatrix& f, double& score, std::span<const Correspondence> corrs, double thr,
                    std::mt19937_64& rng) {
  constexpr int kInner = 10;
  constexpr double kWiden = 2.0;
  auto polish = [&](FundamentalMatrix g) {
    for (int step = 3; step >= 0; --step) {
      const auto support = fundamental_inliers(g.matrix, corrs, thr * (1.0 + (kWiden - 1.0) * step / 3.0));
      if (support.size() < 8) break;
      try {
        g = eight_point(detail::gather(corrs, support));
      } catch (const DegenerateConfigurationError&) {
        break;
      }
    }
    return g;
  };
  auto consider = [&](const FundamentalMatrix& g) {
    const double sg = msac_score(g.matrix, corrs, thr);
    if (sg < score) {
      score = sg;
      f = g;
      return true;
    }
    return false;
  };
  consider(polish(f));
  const auto wide = fundamental_inliers(f.matrix, corrs, kWiden * thr);
  const int subset = std::min(int(wide.size()) / 2, 28);
  if (subset < 8) return;
  for (int k = 0; k < kInner; ++k) {
    const auto pick = detail::sample_indices(rng, int(wide.size()), subset);
    std::vector<int> idx;
    for (int i : pick) idx.push_back(wide[i]);
    try {
      consider(polish(eight_point(detail::gather(corrs, idx))));
    } catch (const DegenerateConfigurationError&) {
    }
  }
}

}  // namespace

std::vector<Correspondence> dedupe_correspondences(std::span<const Correspondence> corrs, double tol_px) {
  // bucket kept points by their first-image cell; neighbours are within one cell
  const double cell = std::max(tol_px, 1e-6);
  std::unordered_map<long long, std::vector<int>> grid;
  auto key = [](long long gx, long long gy) { return (gx << 32) ^ (gy & 0xffffffffLL); };
  std::vector<Correspondence> kept;
  const double t2 = tol_px * tol_px;
  for (const auto& c : corrs) {
    const long long gx = (long long)std::floor(c.first.x() / cell), gy = (long long)std::floor(c.first.y() / cell);
    bool dup = false;
    for (long long dy = -1; dy <= 1 && !dup; ++dy)
      for (long long dx = -1; dx <= 1 && !dup; ++dx) {
        auto it = grid.find(key(gx + dx, gy + dy));
        if (it == grid.end()) continue;
        for (int k : it->second)
          if ((kept[k].first - c.first).squaredNorm() <= t2 && (kept[k].second - c.second).squaredNorm() <= t2) {
            dup = true;
            break;
          }
      }
    if (dup) continue;
    grid[key(gx, gy)].push_back(int(kept.size()));
    kept.push_back(c);
  }
  return kept;
}

FundamentalMatrix eight_point(std::span<const Correspondence> corrs) {
  const auto n = Eigen::Index(corrs.size());
  if (n < 8) throw DegenerateConfigurationError("eight_point: at least 8 correspondences required");
  const Eigen::Matrix3d t1 = detail::normalizing_transform(corrs, [](const Correspondence& c) { return c.first; });
  const Eigen::Matrix3d t2 = detail::normalizing_transform(corrs, [](const Correspondence& c) { return c.second; });
  Eigen::MatrixXd a(n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p1 = t1 * hom(corrs[i].first);
    const Eigen::Vector3d p2 = t2 * hom(corrs[i].second);
    a.row(i) << p2.x() * p1.x(), p2.x() * p1.y(), p2.x(), p2.y() * p1.x(), p2.y() * p1.y(), p2.y(), p1.x(), p1.y(), 1.0;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(7) <= 1e-8 * sv(0))
    throw DegenerateConfigurationError("eight_point: design matrix is rank deficient");
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d fn;
  fn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Eigen::JacobiSVD<Eigen::Matrix3d> fsvd(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = fsvd.singularValues();
  d(2) = 0.0;
  fn = fsvd.matrixU() * d.asDiagonal() * fsvd.matrixV().transpose();
  Eigen::Matrix3d f = t2.transpose() * fn * t1;
  // Re-truncate after denormalisation so det(F) stays at round-off level.
  fsvd.compute(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  d = fsvd.singularValues();
  d(2) = 0.0;
  f = fsvd.matrixU() * d.asDiagonal() * fsvd.matrixV().transpose();
  f /= f.norm();
  return {f};
}

double sampson_distance(const Eigen::Matrix3d& f, const Correspondence& c) {
  const Eigen::Vector3d x1 = hom(c.first);
  const Eigen::Vector3d x2 = hom(c.second);
  const Eigen::Vector3d fx1 = f * x1;
  const Eigen::Vector3d ftx2 = f.transpose() * x2;
  const double e = x2.dot(fx1);
  const double denom = fx1.head<2>().squaredNorm() + ftx2.head<2>().squaredNorm();
  if (denom <= 0) return e == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(e) / std::sqrt(denom);
}

RansacResult ransac_fundamental(std::span<const Correspondence> corrs, const RansacOptions& options) {
  const int n = int(corrs.size());
  if (n < 8) throw InsufficientInliersError("ransac_fundamental: fewer than 8 correspondences");
  std::mt19937_64 rng(options.seed);
  RansacResult best;
  double best_score = std::numeric_limits<double>::infinity();
  int needed = options.max_iterations;
  int it = 0;
  for (; it < needed; ++it) {
    const auto idx = detail::sample_indices(rng, n, 8);
    const auto sample = detail::gather(corrs, idx);
    FundamentalMatrix f;
    try {
      f = eight_point(sample);
    } catch (const DegenerateConfigurationError&) {
      continue;
    }
    double score = msac_score(f.matrix, corrs, options.threshold_px);
    if (score < best_score) {
      // minimal samples are noisy, so each new best is locally optimised
      // before the stopping rule trusts it
      local_optimise(f, score, corrs, options.threshold_px, rng);
      best_score = score;
      best.model = f;
      best.inliers = fundamental_inliers(f.matrix, corrs, options.threshold_px);
      needed = std::min(needed, detail::ransac_iterations_needed(double(best.inliers.size()) / n, 8,
                                                                 options.confidence, options.max_iterations));
    }
  }
  best.iterations_used = it;
  if (best.inliers.size() < 8) throw InsufficientInliersError("ransac_fundamental: consensus below 8 inliers");
  // linear refits on the consensus, then the geometric error; a step is kept
  // only while it lowers the truncated cost
  for (int round = 0; round < 6; ++round) {
    Eigen::Matrix3d next;
    if (round < 3) {
      try {
        next = eight_point(detail::gather(corrs, best.inliers)).matrix;
      } catch (const DegenerateConfigurationError&) {
        continue;
      }
    } else {
      next = refine_fundamental(best.model.matrix, detail::gather(corrs, best.inliers));
    }
    const double score = msac_score(next, corrs, options.threshold_px);
    if (!(score < best_score)) continue;
    best_score = score;
    best.model.matrix = next;
    best.inliers = fundamental_inliers(next, corrs, options.threshold_px);
    if (best.inliers.size() < 8) break;
  }
  return best;
}

std::vector<PoseCandidate> pose_candidates(const FundamentalMatrix& f, const CameraIntrinsics& first,
                                           const CameraIntrinsics& second, std::span<const Correspondence> corrs) {
  const Eigen::Matrix3d e = second.matrix().transpose() * f.matrix * first.matrix();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d r1 = u * w * v.transpose();
  const Eigen::Matrix3d r2 = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);
  std::vector<PoseCandidate> cands{{r1, t, 0}, {r1, -t, 0}, {r2, t, 0}, {r2, -t, 0}};

  const Eigen::Matrix3d k1i = first.inverse_matrix();
  const Eigen::Matrix3d k2i = second.inverse_matrix();
  for (auto& c : cands) {
    Eigen::Matrix<double, 3, 4> p2;
    p2 << c.rotation, c.t;
    for (const auto& corr : corrs) {
      const Eigen::Vector3d n1 = k1i * hom(corr.first);
      const Eigen::Vector3d n2 = k2i * hom(corr.second);
      Eigen::Matrix4d a;
      a.row(0) << -1, 0, n1.x(), 0;
      a.row(1) << 0, -1, n1.y(), 0;
      a.row(2) = n2.x() * p2.row(2) - p2.row(0);
      a.row(3) = n2.y() * p2.row(2) - p2.row(1);
      const Eigen::JacobiSVD<Eigen::Matrix4d> s(a, Eigen::ComputeFullV);
      const Eigen::Vector4d x = s.matrixV().col(3);
      if (std::abs(x(3)) < 1e-15) continue;
      const Eigen::Vector3d p = x.head<3>() / x(3);
      const double z2 = (c.rotation * p + c.t).z();
      if (p.z() > 0 && z2 > 0) ++c.in_front;
    }
  }
  return cands;
}

Pose recover_pose(const FundamentalMatrix& f, const CameraIntrinsics& intrinsics,
                  std::span<const Correspondence> corrs) {
  return recover_pose(f, intrinsics, intrinsics, corrs);
}

Pose recover_pose(const FundamentalMatrix& f, const CameraIntrinsics& first, const CameraIntrinsics& second,
                  std::span<const Correspondence> corrs) {
  std::vector<double> raw;
  raw.reserve(corrs.size());
  for (const auto& c : corrs) raw.push_back((c.second - c.first).norm());
  if (corrs.empty() || median(raw) < 1e-9) return Pose::identity();

  const auto cands = pose_candidates(f, first, second, corrs);
  const auto best = std::max_element(cands.begin(), cands.end(),
                                     [](const auto& a, const auto& b) { return a.in_front < b.in_front; });
  if (2 * best->in_front <= int(corrs.size()))
    throw CheiralityError("recover_pose: no candidate places most points in front of both cameras");

  Pose pose;
  pose.rotation = best->rotation;
  const Eigen::Vector3d centre = -best->rotation.transpose() * best->t;

  // Metric scale from the displacement left after removing the rotation.
  const Eigen::Matrix3d h_inf = second.matrix() * best->rotation * first.inverse_matrix();
  std::vector<double> disp;
  disp.reserve(corrs.size());
  for (const auto& c : corrs) {
    const Eigen::Vector3d m = h_inf * hom(c.first);
    disp.push_back((c.second - m.head<2>() / m.z()).norm());
  }
  const double lateral = centre.head<2>().norm();
  const double scale = median(disp) * second.pixel_pitch / (lateral > 0.1 ? lateral : 1.0);
  pose.translation = scale * centre;
  return pose;
}

Pose correct_pose(const Pose& p) {
  Pose out;
  out.rotation = Eigen::Matrix3d::Identity();
  out.translation = {p.translation.x(), p.translation.y(), 0.0};
  return out;
}

double yaw_of(const Pose& p) { return euler_xyz(p.rotation).z(); }

Eigen::Matrix3d plane_projection(const Pose& p, double plane_depth) {
  Eigen::Matrix3d m;
  m.col(0) = p.rotation.col(0);
  m.col(1) = p.rotation.col(1);
  m.col(2) = p.rotation * (Eigen::Vector3d(0, 0, plane_depth) - p.translation);
  return m;
}

Eigen::Matrix3d reprojection_homography(const Pose& p, const Pose& corrected, const CameraIntrinsics& intrinsics) {
  if (p.rotation == corrected.rotation && p.translation == corrected.translation) return Eigen::Matrix3d::Identity();
  const double d = intrinsics.standoff();
  const Eigen::Matrix3d mp = plane_projection(p, d);
  const Eigen::Matrix3d mc = plane_projection(corrected, d);
  const double scale = std::max(1.0, mp.cwiseAbs().maxCoeff());
  if (std::abs(mp.determinant()) < 1e-12 * scale * scale * scale)
    throw SingularHomographyError("reproject: plane projection of the pose is not invertible");
  return intrinsics.matrix() * mc * mp.inverse() * intrinsics.inverse_matrix();
}

Image reproject(const Image& img, const Pose& p, const Pose& corrected, const CameraIntrinsics& intrinsics,
                Interpolation mode) {
  const Eigen::Matrix3d h = reprojection_homography(p, corrected, intrinsics);
  if (h.isIdentity(0.0)) return warp_image(img, img.width(), img.height(), [](double x, double y) {
      return Eigen::Vector2d(x, y);
    }, mode);
  const Eigen::Matrix3d hinv = h.inverse();
  return warp_image(
      img, img.width(), img.height(),
      [&](double x, double y) -> Eigen::Vector2d {
        const Eigen::Vector3d s = hinv * Eigen::Vector3d(x, y, 1.0);
        if (s.z() <= 1e-12) return {-1e9, -1e9};
        return s.head<2>() / s.z();
      },
      mode);
}

RelativePose estimate_relative_pose(std::span<const Correspondence> corrs, const CameraIntrinsics& reference,
                                    const CameraIntrinsics& camera, double plane_depth,
                                    const RansacOptions& options, double planar_fraction, bool in_plane_motion) {
  RansacResult fr;
  bool have_f = true;
  try {
    fr = ransac_fundamental(corrs, options);
  } catch (const InsufficientInliersError&) {
    have_f = false;
  }
  std::vector<int> pool_index;
  if (have_f) {
    pool_index = fr.inliers;
  } else {
    pool_index.resize(corrs.size());
    std::iota(pool_index.begin(), pool_index.end(), 0);
  }
  const auto pool = detail::gather(corrs, pool_index);
  HomographyResult hr;
  bool have_h = true;
  try {
    hr = ransac_homography(pool, options);
  } catch (const InsufficientInliersError&) {
    have_h = false;
  }
  RelativePose out;
  int explained = 0;
  if (have_h)
    for (const auto& c : pool)
      if (homography_sampson_distance(hr.matrix, c) <= options.threshold_px) ++explained;
  bool planar = have_h && (!have_f || double(explained) >= planar_fraction * double(pool.size()));
  if (have_h && !planar) {
    // Torr's GRIC: a degenerate F soaks up mismatches along its epipolar lines,
    // which can hide a plane from the fraction test
    const double sigma2 = 0.25 * options.threshold_px * options.threshold_px;
    const double n = double(corrs.size());
    double gf = 0.0, gh = 0.0;
    for (const auto& c : corrs) {
      const double ef = sampson_distance(fr.model.matrix, c);
      const double eh = homography_sampson_distance(hr.matrix, c);
      gf += std::min(ef * ef / sigma2, 2.0 * (4 - 3));
      gh += std::min(eh * eh / sigma2, 2.0 * (4 - 2));
    }
    gf += std::log(4.0) * 3 * n + std::log(4.0 * n) * 7;
    gh += std::log(4.0) * 2 * n + std::log(4.0 * n) * 8;
    planar = gh < gf;
  }
  if (planar) {
    out.planar = true;
    out.homography = hr.matrix;
    if (!in_plane_motion) {
      out.pose = pose_from_homography(hr.matrix, reference, camera, plane_depth);
      for (int i : hr.inliers) out.inliers.push_back(pool_index[i]);
      return out;
    }
    std::vector<int> in = hr.inliers;
    Eigen::Matrix3d sim = Eigen::Matrix3d::Identity();
    for (int round = 0; round < 3; ++round) {
      if (in.size() < 2) throw InsufficientInliersError("estimate_relative_pose: similarity lost its support");
      sim = fit_similarity(detail::gather(std::span<const Correspondence>(pool), in));
      std::vector<int> next;
      for (int i = 0; i < int(pool.size()); ++i)
        if (transfer_error(sim, pool[i]) <= options.threshold_px) next.push_back(i);
      if (next == in) break;
      in = std::move(next);
    }
    out.homography = sim;
    out.pose = pose_from_similarity(sim, reference, camera, plane_depth);
    for (int i : in) out.inliers.push_back(pool_index[i]);
    return out;
  }
  if (!have_f) throw InsufficientInliersError("estimate_relative_pose: no consistent model");
  out.pose = recover_pose(fr.model, reference, camera, detail::gather(corrs, fr.inliers));
  out.inliers = fr.inliers;
  return out;
}

}  // namespace nrm
