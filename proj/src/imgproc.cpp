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

#include "nrmosaic/imgproc.hpp"

#include <limits>
#include <vector>

#include "nrmosaic/errors.hpp"

namespace nrm {

namespace detail {

bool sample_image(const Image& src, const PlaneF& values, double x, double y, Interpolation mode, float& out) {
  const int w = src.width();
  const int h = src.height();
  if (mode == Interpolation::Nearest) {
    const long xi = std::lround(x);
    const long yi = std::lround(y);
    if (xi < 0 || yi < 0 || xi >= w || yi >= h) return false;
    if (!src.valid(int(xi), int(yi))) return false;
    out = values(yi, xi);
    return true;
  }
  constexpr double eps = 1e-9;
  if (!(x >= -eps && y >= -eps && x <= double(w - 1) + eps && y <= double(h - 1) + eps)) return false;
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = int(x);
  const int y0 = int(y);
  const double ax = x - x0;
  const double ay = y - y0;
  const int x1 = ax > 0 ? x0 + 1 : x0;
  const int y1 = ay > 0 ? y0 + 1 : y0;
  if (src.has_mask()) {
    const Plane8& m = *src.mask();
    if (!m(y0, x0) || !m(y0, x1) || !m(y1, x0) || !m(y1, x1)) return false;
  }
  const double top = (1 - ax) * values(y0, x0) + ax * values(y0, x1);
  const double bot = (1 - ax) * values(y1, x0) + ax * values(y1, x1);
  out = static_cast<float>((1 - ay) * top + ay * bot);
  return true;
}

}  // namespace detail

std::vector<float> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) return {1.0f};
  const int radius = std::max(1, int(std::ceil(4.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * double(i * i) / (sigma * sigma));
    k[i + radius] = float(v);
    sum += v;
  }
  for (auto& v : k) v = float(v / sum);
  return k;
}

namespace {

PlaneF blur_x(const PlaneF& src, const std::vector<float>& k) {
  const int radius = int(k.size() / 2);
  const auto w = src.cols();
  const auto h = src.rows();
  PlaneF out(h, w);
  std::vector<float> pad(w + 2 * radius);
  std::vector<float> acc(w);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w + 2 * radius; ++x)
      pad[x] = src(y, std::clamp<Eigen::Index>(x - radius, 0, w - 1));
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t j = 0; j < k.size(); ++j) {
      const float kj = k[j];
      const float* p = pad.data() + j;
      for (Eigen::Index x = 0; x < w; ++x) acc[x] += kj * p[x];
    }
    for (Eigen::Index x = 0; x < w; ++x) out(y, x) = acc[x];
  }
  return out;
}

}  // namespace

PlaneF gaussian_blur_y(const PlaneF& src, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int radius = int(k.size() / 2);
  const auto h = src.rows();
  PlaneF out = PlaneF::Zero(h, src.cols());
  for (Eigen::Index y = 0; y < h; ++y) {
    for (int j = -radius; j <= radius; ++j) {
      const auto yy = std::clamp<Eigen::Index>(y + j, 0, h - 1);
      out.row(y) += k[j + radius] * src.row(yy);
    }
  }
  return out;
}

PlaneF gaussian_blur(const PlaneF& src, double sigma) {
  if (!(sigma > 0) || src.size() == 0) return src;
  return gaussian_blur_y(blur_x(src, gaussian_kernel(sigma)), sigma);
}

PlaneF downsample2(const PlaneF& src) {
  const auto h = (src.rows() + 1) / 2;
  const auto w = (src.cols() + 1) / 2;
  PlaneF out(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x) out(y, x) = src(2 * y, 2 * x);
  return out;
}

namespace {

// 1-D squared distance transform of sampled function f (Felzenszwalb & Huttenlocher).
constexpr double kFar = 1e20;

void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = int(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  auto intersect = [&](int q, int p) {
    return ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = double(q) - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

PlaneF distance_to_invalid(const Plane8& validity) {
  // Pad by one invalid pixel so the image border counts as an edge.
  const int h = int(validity.rows()) + 2;
  const int w = int(validity.cols()) + 2;
  PlaneD grid(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool inside = y > 0 && x > 0 && y < h - 1 && x < w - 1;
      grid(y, x) = (inside && validity(y - 1, x - 1) != 0) ? kFar : 0.0;
    }
  const int n = std::max(h, w);
  std::vector<double> f(n), d(n), z(n + 1);
  std::vector<int> v(n);
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = grid(y, x);
    edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid(y, x) = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.resize(w);
    d.resize(w);
    for (int x = 0; x < w; ++x) f[x] = grid(y, x);
    edt_1d(f, d, v, z);
    for (int x = 0; x < w; ++x) grid(y, x) = d[x];
  }
  return grid.block(1, 1, h - 2, w - 2).sqrt().cast<float>();
}

Plane8 erode_mask(const Plane8& validity, double radius) {
  return (distance_to_invalid(validity) > float(radius)).cast<std::uint8_t>();
}

Plane8 mask_and(const Plane8& a, const Plane8& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("mask_and: dimension mismatch");
  return ((a != 0) && (b != 0)).cast<std::uint8_t>();
}

Plane8 circular_mask(int width, int height, double cx, double cy, double radius) {
  Plane8 m(height, width);
  const double r2 = radius * radius;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      m(y, x) = (dx * dx + dy * dy <= r2) ? 1 : 0;
    }
  return m;
}

}  // namespace nrm
