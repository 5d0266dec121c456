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

#include <cstdint>
#include <optional>

#include <Eigen/Core>

namespace nrm {

// Row-major planes: rows are image rows (y), columns are x.
using Plane8 = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PlaneF = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using PlaneD = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit luminance image with an optional validity mask.
///
/// Origin is the top-left pixel centre, x grows rightward and y downward.
/// A mask value of zero marks the pixel invalid (outside the scanner area or
/// outside the source after a warp).
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0);
  explicit Image(Plane8 data);
  Image(Plane8 data, Plane8 mask);

  int width() const { return static_cast<int>(data_.cols()); }
  int height() const { return static_cast<int>(data_.rows()); }
  bool empty() const { return data_.size() == 0; }

  const Plane8& data() const { return data_; }
  Plane8& data() { return data_; }

  bool has_mask() const { return mask_.has_value(); }
  const std::optional<Plane8>& mask() const { return mask_; }
  void set_mask(Plane8 mask);
  void clear_mask() { mask_.reset(); }

  std::uint8_t operator()(int x, int y) const { return data_(y, x); }
  std::uint8_t& operator()(int x, int y) { return data_(y, x); }

  bool valid(int x, int y) const;
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width() && y < height(); }
  long valid_count() const;

  /// Validity as a 0/1 plane; all ones when no mask is present.
  Plane8 validity() const;

  PlaneF to_float() const { return data_.cast<float>(); }

  bool operator==(const Image& other) const;

 private:
  Plane8 data_;
  std::optional<Plane8> mask_;
};

/// Rounds and saturates a float plane into an 8-bit image.
Image image_from_float(const PlaneF& plane);
Image image_from_float(const PlaneF& plane, const Plane8& mask);

}  // namespace nrm
