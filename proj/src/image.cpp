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

#include "nrmosaic/image.hpp"

#include <utility>

#include "nrmosaic/errors.hpp"

namespace nrm {

Image::Image(int width, int height, std::uint8_t fill) {
  if (width < 0 || height < 0) throw InvalidArgument("Image: negative dimensions");
  data_ = Plane8::Constant(height, width, fill);
}

Image::Image(Plane8 data) : data_(std::move(data)) {}

Image::Image(Plane8 data, Plane8 mask) : data_(std::move(data)) { set_mask(std::move(mask)); }

void Image::set_mask(Plane8 mask) {
  if (mask.rows() != data_.rows() || mask.cols() != data_.cols())
    throw InvalidArgument("Image: mask dimensions differ from image dimensions");
  mask_ = std::move(mask);
}

bool Image::valid(int x, int y) const {
  if (!contains(x, y)) return false;
  return !mask_ || (*mask_)(y, x) != 0;
}

long Image::valid_count() const {
  if (!mask_) return static_cast<long>(data_.size());
  return static_cast<long>((*mask_ != 0).count());
}

Plane8 Image::validity() const {
  if (!mask_) return Plane8::Ones(data_.rows(), data_.cols());
  return (*mask_ != 0).cast<std::uint8_t>();
}

bool Image::operator==(const Image& other) const {
  if (width() != other.width() || height() != other.height()) return false;
  if ((data_ != other.data_).any()) return false;
  if (has_mask() != other.has_mask()) return false;
  return !has_mask() || ((*mask_ != 0) == (*other.mask_ != 0)).all();
}

Image image_from_float(const PlaneF& plane) {
  Plane8 out = (plane.round().max(0.0f).min(255.0f)).cast<std::uint8_t>();
  return Image(std::move(out));
}

Image image_from_float(const PlaneF& plane, const Plane8& mask) {
  Image img = image_from_float(plane);
  img.set_mask(mask);
  return img;
}

}  // namespace nrm
