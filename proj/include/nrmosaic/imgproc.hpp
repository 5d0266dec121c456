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

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "nrmosaic/image.hpp"

namespace nrm {

enum class Interpolation { Nearest, Bilinear };

/// Bilinear sample of a float plane at (x, y); nullopt outside the pixel-centre
/// hull [0, w-1] x [0, h-1].
template <typename PlaneT>
std::optional<float> sample_bilinear(const PlaneT& plane, double x, double y) {
  const auto w = plane.cols();
  const auto h = plane.rows();
  constexpr double eps = 1e-9;
  if (!(x >= -eps && y >= -eps && x <= double(w - 1) + eps && y <= double(h - 1) + eps)) return std::nullopt;
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const auto x0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(x), std::max<Eigen::Index>(w - 2, 0));
  const auto y0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(y), std::max<Eigen::Index>(h - 2, 0));
  const auto x1 = std::min<Eigen::Index>(x0 + 1, w - 1);
  const auto y1 = std::min<Eigen::Index>(y0 + 1, h - 1);
  const double ax = x - double(x0);
  const double ay = y - double(y0);
  const double top = (1 - ax) * double(plane(y0, x0)) + ax * double(plane(y0, x1));
  const double bot = (1 - ax) * double(plane(y1, x0)) + ax * double(plane(y1, x1));
  return static_cast<float>((1 - ay) * top + ay * bot);
}

namespace detail {
// Samples `src` at (x, y).  Returns false when the point is outside the source or
// touches an invalid source pixel with non-zero weight.
bool sample_image(const Image& src, const PlaneF& values, double x, double y, Interpolation mode, float& out);
}  // namespace detail

/// Inverse-mapped warp: each output pixel (x, y) reads the source at map(x, y).
/// Output pixels whose source location is outside the image or touches an
/// invalid source pixel are marked invalid in the output mask.
template <typename MapFn>
Image warp_image(const Image& src, int out_width, int out_height, MapFn&& map,
                 Interpolation mode = Interpolation::Bilinear) {
  const PlaneF values = src.to_float();
  Plane8 data = Plane8::Zero(out_height, out_width);
  Plane8 mask = Plane8::Zero(out_height, out_width);
  for (int y = 0; y < out_height; ++y) {
    for (int x = 0; x < out_width; ++x) {
      const Eigen::Vector2d s = map(double(x), double(y));
      float v = 0.0f;
      if (detail::sample_image(src, values, s.x(), s.y(), mode, v)) {
        data(y, x) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        mask(y, x) = 1;
      }
    }
  }
  return Image(std::move(data), std::move(mask));
}

/// Separable Gaussian blur with replicated borders.
PlaneF gaussian_blur(const PlaneF& src, double sigma);
/// Blur along the y axis only.
PlaneF gaussian_blur_y(const PlaneF& src, double sigma);
std::vector<float> gaussian_kernel(double sigma);

/// Takes every second pixel in both axes.
PlaneF downsample2(const PlaneF& src);

/// Euclidean distance (pixels) from each valid pixel to the nearest invalid
/// pixel, treating everything outside the image as invalid.  Invalid pixels get 0.
PlaneF distance_to_invalid(const Plane8& validity);

/// Mask erosion by a disc: keeps pixels at distance > radius from invalid.
Plane8 erode_mask(const Plane8& validity, double radius);

/// Pixels where both images are valid.
Plane8 mask_and(const Plane8& a, const Plane8& b);

/// Circular scanner-area mask centred on (cx, cy).
Plane8 circular_mask(int width, int height, double cx, double cy, double radius);

}  // namespace nrm
