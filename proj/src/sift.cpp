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
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "nrmosaic/errors.hpp"
#include "nrmosaic/features.hpp"
#include "nrmosaic/imgproc.hpp"

namespace nrm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInputBlur = 0.5;
constexpr int kBorder = 5;
constexpr int kMaxRefineSteps = 5;
constexpr int kOriBins = 36;
constexpr double kOriSigmaFactor = 1.5;
constexpr double kOriPeakRatio = 0.8;
constexpr int kDescWidth = 4;
constexpr int kDescBins = 8;
constexpr double kDescMagnification = 3.0;
constexpr float kDescClamp = 0.2f;
constexpr double kSupportSigmas = 4.0;

struct Octave {
  std::vector<PlaneF> gauss;  // S + 3 levels
  std::vector<PlaneF> dog;    // S + 2 levels
  std::vector<PlaneF> mag;    // lazily filled, per gauss level
  std::vector<PlaneF> ang;
};

void ensure_gradients(Octave& oct, int level) {
  if (oct.mag.empty()) {
    oct.mag.resize(oct.gauss.size());
    oct.ang.resize(oct.gauss.size());
  }
  if (oct.mag[level].size() != 0) return;
  const PlaneF& g = oct.gauss[level];
  const auto h = g.rows();
  const auto w = g.cols();
  PlaneF mag = PlaneF::Zero(h, w);
  PlaneF ang = PlaneF::Zero(h, w);
  for (Eigen::Index y = 1; y + 1 < h; ++y)
    for (Eigen::Index x = 1; x + 1 < w; ++x) {
      const float dx = g(y, x + 1) - g(y, x - 1);
      const float dy = g(y + 1, x) - g(y - 1, x);
      mag(y, x) = std::sqrt(dx * dx + dy * dy);
      ang(y, x) = std::atan2(dy, dx);
    }
  oct.mag[level] = std::move(mag);
  oct.ang[level] = std::move(ang);
}

std::vector<Octave> build_pyramid(const PlaneF& base_in, const AsiftConfig& cfg, int n_octaves) {
  const int s_count = cfg.scales_per_octave;
  const double k = std::pow(2.0, 1.0 / s_count);
  std::vector<Octave> pyr(n_octaves);
  PlaneF base = gaussian_blur(base_in, std::sqrt(cfg.sigma0 * cfg.sigma0 - kInputBlur * kInputBlur));
  for (int o = 0; o < n_octaves; ++o) {
    Octave& oct = pyr[o];
    oct.gauss.reserve(s_count + 3);
    oct.gauss.push_back(std::move(base));
    for (int s = 1; s < s_count + 3; ++s) {
      const double prev = cfg.sigma0 * std::pow(k, s - 1);
      const double total = prev * k;
      oct.gauss.push_back(gaussian_blur(oct.gauss.back(), std::sqrt(total * total - prev * prev)));
    }
    for (int s = 0; s + 1 < int(oct.gauss.size()); ++s) oct.dog.push_back(oct.gauss[s + 1] - oct.gauss[s]);
    if (o + 1 < n_octaves) base = downsample2(oct.gauss[s_count]);
  }
  return pyr;
}

bool is_extremum(const std::vector<PlaneF>& dog, int s, Eigen::Index y, Eigen::Index x) {
  const float v = dog[s](y, x);
  if (v > 0) {
    for (int ds = -1; ds <= 1; ++ds)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!ds && !dy && !dx) continue;
          if (dog[s + ds](y + dy, x + dx) >= v) return false;
        }
    return true;
  }
  for (int ds = -1; ds <= 1; ++ds)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!ds && !dy && !dx) continue;
        if (dog[s + ds](y + dy, x + dx) <= v) return false;
      }
  return true;
}

struct Refined {
  int x, y, s;
  Eigen::Vector3d offset;  // (dx, dy, ds)
  double value;
};

// Quadratic fit of the DoG around a discrete extremum; false when the point is
// rejected by contrast, edge response or drifting out of range.
bool refine(const std::vector<PlaneF>& dog, int x, int y, int s, const AsiftConfig& cfg, Refined& out) {
  const int s_count = cfg.scales_per_octave;
  const auto w = dog[0].cols();
  const auto h = dog[0].rows();
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad;
  Eigen::Matrix3d hess;
  bool ok = false;
  for (int step = 0; step < kMaxRefineSteps; ++step) {
    const PlaneF& c = dog[s];
    const PlaneF& p = dog[s - 1];
    const PlaneF& n = dog[s + 1];
    const double v = c(y, x);
    grad << 0.5 * (c(y, x + 1) - c(y, x - 1)), 0.5 * (c(y + 1, x) - c(y - 1, x)), 0.5 * (n(y, x) - p(y, x));
    const double dxx = c(y, x + 1) + c(y, x - 1) - 2 * v;
    const double dyy = c(y + 1, x) + c(y - 1, x) - 2 * v;
    const double dss = n(y, x) + p(y, x) - 2 * v;
    const double dxy = 0.25 * (c(y + 1, x + 1) - c(y + 1, x - 1) - c(y - 1, x + 1) + c(y - 1, x - 1));
    const double dxs = 0.25 * (n(y, x + 1) - n(y, x - 1) - p(y, x + 1) + p(y, x - 1));
    const double dys = 0.25 * (n(y + 1, x) - n(y - 1, x) - p(y + 1, x) + p(y - 1, x));
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(hess);
    if (!lu.isInvertible()) return false;
    offset = -lu.solve(grad);
    if (std::abs(offset.x()) < 0.6 && std::abs(offset.y()) < 0.6 && std::abs(offset.z()) < 0.6) {
      ok = true;
      break;
    }
    x += int(std::lround(std::clamp(offset.x(), -1.0, 1.0)));
    y += int(std::lround(std::clamp(offset.y(), -1.0, 1.0)));
    s += int(std::lround(std::clamp(offset.z(), -1.0, 1.0)));
    if (s < 1 || s > s_count || x < kBorder || y < kBorder || x >= w - kBorder || y >= h - kBorder) return false;
  }
  if (!ok || offset.cwiseAbs().maxCoeff() > 1.0) return false;
  const double value = dog[s](y, x) + 0.5 * grad.dot(offset);
  if (std::abs(value) < cfg.peak_threshold) return false;
  const double tr = hess(0, 0) + hess(1, 1);
  const double det = hess(0, 0) * hess(1, 1) - hess(0, 1) * hess(0, 1);
  const double r = cfg.edge_threshold;
  if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return false;
  out = {x, y, s, offset, value};
  return true;
}

std::vector<double> orientations(Octave& oct, int level, double x, double y, double sigma) {
  ensure_gradients(oct, level);
  const PlaneF& mag = oct.mag[level];
  const PlaneF& ang = oct.ang[level];
  const auto w = mag.cols();
  const auto h = mag.rows();
  const double wsig = kOriSigmaFactor * sigma;
  const int radius = int(std::lround(3.0 * wsig));
  const int xi = int(std::lround(x));
  const int yi = int(std::lround(y));
  std::array<double, kOriBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    const int yy = yi + dy;
    if (yy <= 0 || yy >= h - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int xx = xi + dx;
      if (xx <= 0 || xx >= w - 1) continue;
      const double r2 = double(dx * dx + dy * dy);
      if (r2 > double(radius * radius) + 0.5) continue;
      const double weight = std::exp(-r2 / (2.0 * wsig * wsig));
      double a = ang(yy, xx);
      if (a < 0) a += kTwoPi;
      int bin = int(std::floor(kOriBins * a / kTwoPi));
      bin = (bin % kOriBins + kOriBins) % kOriBins;
      hist[bin] += weight * mag(yy, xx);
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kOriBins> tmp{};
    for (int i = 0; i < kOriBins; ++i)
      tmp[i] = 0.25 * hist[(i + kOriBins - 1) % kOriBins] + 0.5 * hist[i] + 0.25 * hist[(i + 1) % kOriBins];
    hist = tmp;
  }
  const double peak = *std::max_element(hist.begin(), hist.end());
  std::vector<double> out;
  if (peak <= 0) return out;
  for (int i = 0; i < kOriBins; ++i) {
    const double l = hist[(i + kOriBins - 1) % kOriBins];
    const double c = hist[i];
    const double r = hist[(i + 1) % kOriBins];
    if (c > l && c > r && c >= kOriPeakRatio * peak) {
      const double denom = l - 2 * c + r;
      const double shift = denom != 0 ? 0.5 * (l - r) / denom : 0.0;
      double a = (i + 0.5 + shift) * kTwoPi / kOriBins;
      a = std::fmod(a + kTwoPi, kTwoPi);
      out.push_back(a);
    }
  }
  return out;
}

Descriptor describe(Octave& oct, int level, double x, double y, double sigma, double angle) {
  ensure_gradients(oct, level);
  const PlaneF& mag = oct.mag[level];
  const PlaneF& ang = oct.ang[level];
  const auto w = mag.cols();
  const auto h = mag.rows();
  const double hist_width = kDescMagnification * sigma;
  const int radius = int(std::lround(hist_width * std::numbers::sqrt2 * (kDescWidth + 1) * 0.5));
  const double cos_t = std::cos(angle) / hist_width;
  const double sin_t = std::sin(angle) / hist_width;
  const double exp_scale = -1.0 / (0.5 * kDescWidth * kDescWidth);
  const int xi = int(std::lround(x));
  const int yi = int(std::lround(y));
  const double fx = x - xi;
  const double fy = y - yi;
  std::array<double, (kDescWidth + 2) * (kDescWidth + 2) * (kDescBins + 2)> hist{};
  auto at = [](int r, int c, int o) { return (r * (kDescWidth + 2) + c) * (kDescBins + 2) + o; };
  for (int dy = -radius; dy <= radius; ++dy) {
    const int yy = yi + dy;
    if (yy <= 0 || yy >= h - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int xx = xi + dx;
      if (xx <= 0 || xx >= w - 1) continue;
      const double px = dx - fx;
      const double py = dy - fy;
      const double c_rot = px * cos_t + py * sin_t;
      const double r_rot = -px * sin_t + py * cos_t;
      const double rbin = r_rot + kDescWidth / 2.0 - 0.5;
      const double cbin = c_rot + kDescWidth / 2.0 - 0.5;
      if (rbin <= -1 || rbin >= kDescWidth || cbin <= -1 || cbin >= kDescWidth) continue;
      double theta = ang(yy, xx) - angle;
      theta = std::fmod(theta, kTwoPi);
      if (theta < 0) theta += kTwoPi;
      const double obin = theta * kDescBins / kTwoPi;
      const double weight = mag(yy, xx) * std::exp((c_rot * c_rot + r_rot * r_rot) * exp_scale);
      const int r0 = int(std::floor(rbin));
      const int c0 = int(std::floor(cbin));
      int o0 = int(std::floor(obin));
      const double dr = rbin - r0;
      const double dc = cbin - c0;
      const double dor = obin - o0;
      o0 %= kDescBins;
      for (int ir = 0; ir < 2; ++ir) {
        const double wr = weight * (ir ? dr : 1 - dr);
        for (int ic = 0; ic < 2; ++ic) {
          const double wc = wr * (ic ? dc : 1 - dc);
          for (int io = 0; io < 2; ++io) {
            const double wo = wc * (io ? dor : 1 - dor);
            hist[at(r0 + 1 + ir, c0 + 1 + ic, (o0 + io) % kDescBins)] += wo;
          }
        }
      }
    }
  }
  Eigen::Matrix<double, 128, 1> v;
  for (int r = 0; r < kDescWidth; ++r)
    for (int c = 0; c < kDescWidth; ++c)
      for (int o = 0; o < kDescBins; ++o) v((r * kDescWidth + c) * kDescBins + o) = hist[at(r + 1, c + 1, o)];
  Descriptor out{};
  const double n0 = v.norm();
  if (n0 <= 0) return out;
  v /= n0;
  v = v.cwiseMin(double(kDescClamp));
  v /= v.norm();
  for (int i = 0; i < 128; ++i) out[i] = float(v(i));
  return out;
}

}  // namespace

std::vector<Feature> detect_sift(const Image& img, const AsiftConfig& cfg) {
  if (img.width() < 32 || img.height() < 32 || img.valid_count() < 32 * 32)
    throw TooSmallImageError("detect_sift: image needs at least 32x32 valid pixels");
  const int min_dim = std::min(img.width(), img.height());
  const int n_octaves = std::max(1, int(std::floor(std::log2(double(min_dim)))) - 3);
  std::vector<Octave> pyr = build_pyramid(img.to_float(), cfg, n_octaves);
  const PlaneF support = distance_to_invalid(img.validity());
  const int s_count = cfg.scales_per_octave;
  const float prefilter = float(0.8 * cfg.peak_threshold);

  std::vector<Feature> features;
  for (int o = 0; o < n_octaves; ++o) {
    Octave& oct = pyr[o];
    const double octave_scale = std::ldexp(1.0, o);
    const auto w = oct.dog[0].cols();
    const auto h = oct.dog[0].rows();
    if (w <= 2 * kBorder || h <= 2 * kBorder) break;
    for (int s = 1; s <= s_count; ++s) {
      for (Eigen::Index y = kBorder; y < h - kBorder; ++y) {
        for (Eigen::Index x = kBorder; x < w - kBorder; ++x) {
          if (std::abs(oct.dog[s](y, x)) < prefilter) continue;
          if (!is_extremum(oct.dog, s, y, x)) continue;
          Refined kp;
          if (!refine(oct.dog, int(x), int(y), s, cfg, kp)) continue;
          const double ox = kp.x + kp.offset.x();
          const double oy = kp.y + kp.offset.y();
          const double sigma_oct = cfg.sigma0 * std::pow(2.0, (kp.s + kp.offset.z()) / s_count);
          const double img_x = ox * octave_scale;
          const double img_y = oy * octave_scale;
          const double img_sigma = sigma_oct * octave_scale;
          const long sx = std::lround(img_x);
          const long sy = std::lround(img_y);
          if (sx < 0 || sy < 0 || sx >= img.width() || sy >= img.height()) continue;
          if (support(sy, sx) <= kSupportSigmas * img_sigma) continue;
          for (double angle : orientations(oct, kp.s, ox, oy, sigma_oct)) {
            Feature f;
            f.x = img_x;
            f.y = img_y;
            f.scale = img_sigma;
            f.orientation = angle;
            f.descriptor = describe(oct, kp.s, ox, oy, sigma_oct, angle);
            if (f.descriptor[0] == 0.0f && std::all_of(f.descriptor.begin(), f.descriptor.end(),
                                                       [](float v) { return v == 0.0f; }))
              continue;
            features.push_back(f);
          }
        }
      }
    }
  }
  return features;
}

}  // namespace nrm
