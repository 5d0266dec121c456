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

#include "nrmosaic/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nrmosaic/errors.hpp"
#include "nrmosaic/force_rect.hpp"

namespace nrm {

namespace {
constexpr long kGrowMargin = 256;
}

Mosaic::Mosaic(double pitch_mm, const Eigen::Vector2d& anchor_mm) : pitch_(pitch_mm), anchor_(anchor_mm) {
  if (!(pitch_mm > 0)) throw InvalidArgument("mosaic pitch must be positive");
  if (!anchor_mm.allFinite()) throw InvalidArgument("mosaic anchor must be finite");
}

Eigen::Vector2d Mosaic::grid(const Eigen::Vector2d& mm) const {
  Eigen::Vector2d f = (mm - anchor_) / pitch_;
  // snap near-integral offsets so aligned placements copy exactly
  for (int k = 0; k < 2; ++k)
    if (std::abs(f[k] - std::round(f[k])) < 1e-6) f[k] = std::round(f[k]);
  return f;
}

void Mosaic::ensure(long x0, long y0, long x1, long y1) {
  const long w = sum_.cols(), h = sum_.rows();
  if (x0 >= 0 && y0 >= 0 && x1 < w && y1 < h) return;
  const long nx0 = std::min(0L, x0 - kGrowMargin), ny0 = std::min(0L, y0 - kGrowMargin);
  const long nx1 = std::max(w - 1, x1 + kGrowMargin), ny1 = std::max(h - 1, y1 + kGrowMargin);
  PlaneF s = PlaneF::Zero(ny1 - ny0 + 1, nx1 - nx0 + 1);
  PlaneF wt = PlaneF::Zero(ny1 - ny0 + 1, nx1 - nx0 + 1);
  if (w > 0 && h > 0) {
    s.block(-ny0, -nx0, h, w) = sum_;
    wt.block(-ny0, -nx0, h, w) = weight_;
  }
  sum_ = std::move(s);
  weight_ = std::move(wt);
  ox_ -= nx0;
  oy_ -= ny0;
  bx0_ -= nx0;
  bx1_ -= nx0;
  by0_ -= ny0;
  by1_ -= ny0;
}

void Mosaic::add(const Image& img, const Eigen::Vector2d& offset_mm, long frame_id) {
  if (img.empty()) throw InvalidArgument("cannot stitch an empty image");
  Eigen::Vector2d f = grid(offset_mm) + Eigen::Vector2d(double(ox_), double(oy_));
  const long x0 = long(std::ceil(f.x())), y0 = long(std::ceil(f.y()));
  const long x1 = long(std::floor(f.x() + img.width() - 1)), y1 = long(std::floor(f.y() + img.height() - 1));
  ensure(x0, y0, x1, y1);
  // ensure() may have shifted the origin
  f = grid(offset_mm) + Eigen::Vector2d(double(ox_), double(oy_));
  const long ax0 = long(std::ceil(f.x())), ay0 = long(std::ceil(f.y()));
  const long ax1 = long(std::floor(f.x() + img.width() - 1)), ay1 = long(std::floor(f.y() + img.height() - 1));

  const PlaneF values = img.to_float();
  const PlaneF feather = distance_to_invalid(img.validity());
  const bool integral = f.x() == std::round(f.x()) && f.y() == std::round(f.y());
  for (long v = ay0; v <= ay1; ++v)
    for (long u = ax0; u <= ax1; ++u) {
      const double sx = double(u) - f.x(), sy = double(v) - f.y();
      float val = 0.0f, wgt = 0.0f;
      if (integral) {
        const int ix = int(sx), iy = int(sy);
        if (!img.valid(ix, iy)) continue;
        val = values(iy, ix);
        wgt = feather(iy, ix);
      } else {
        if (!detail::sample_image(img, values, sx, sy, Interpolation::Bilinear, val)) continue;
        const auto w = sample_bilinear(feather, sx, sy);
        if (!w) continue;
        wgt = *w;
      }
      if (!(wgt > 0.0f)) continue;
      sum_(v, u) += wgt * val;
      weight_(v, u) += wgt;
      if (bx1_ < bx0_) {
        bx0_ = bx1_ = u;
        by0_ = by1_ = v;
      } else {
        bx0_ = std::min(bx0_, u);
        bx1_ = std::max(bx1_, u);
        by0_ = std::min(by0_, v);
        by1_ = std::max(by1_, v);
      }
    }
  placements_.push_back({frame_id, offset_mm.x(), offset_mm.y()});
}

Image Mosaic::canvas() const {
  if (bx1_ < bx0_) return Image();
  const long w = bx1_ - bx0_ + 1, h = by1_ - by0_ + 1;
  Plane8 data = Plane8::Zero(h, w), mask = Plane8::Zero(h, w);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const float wt = weight_(by0_ + y, bx0_ + x);
      if (wt > 0.0f) {
        data(y, x) = std::uint8_t(std::clamp(std::lround(sum_(by0_ + y, bx0_ + x) / wt), 0L, 255L));
        mask(y, x) = 1;
      }
    }
  return Image(std::move(data), std::move(mask));
}

Eigen::Vector2d Mosaic::canvas_origin_mm() const {
  return anchor_ + Eigen::Vector2d(double(bx0_ - ox_), double(by0_ - oy_)) * pitch_;
}

Image Mosaic::crop(const Eigen::Vector2d& centre_mm, int width, int height, Eigen::Vector2d* top_left_mm) const {
  if (bx1_ < bx0_ || width < 1 || height < 1) return Image();
  const Eigen::Vector2d c = (centre_mm - anchor_) / pitch_ + Eigen::Vector2d(double(ox_), double(oy_));
  long x0 = std::lround(c.x() - 0.5 * (width - 1)), y0 = std::lround(c.y() - 0.5 * (height - 1));
  long x1 = x0 + width - 1, y1 = y0 + height - 1;
  x0 = std::max(x0, bx0_);
  y0 = std::max(y0, by0_);
  x1 = std::min(x1, bx1_);
  y1 = std::min(y1, by1_);
  if (x1 < x0 || y1 < y0) return Image();
  const long w = x1 - x0 + 1, h = y1 - y0 + 1;
  Plane8 data = Plane8::Zero(h, w), mask = Plane8::Zero(h, w);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x) {
      const float wt = weight_(y0 + y, x0 + x);
      if (wt > 0.0f) {
        data(y, x) = std::uint8_t(std::clamp(std::lround(sum_(y0 + y, x0 + x) / wt), 0L, 255L));
        mask(y, x) = 1;
      }
    }
  if (top_left_mm) *top_left_mm = anchor_ + Eigen::Vector2d(double(x0 - ox_), double(y0 - oy_)) * pitch_;
  return Image(std::move(data), std::move(mask));
}

Mosaic stitch(Mosaic mosaic, const Image& img, const Eigen::Vector2d& offset_mm, long frame_id) {
  mosaic.add(img, offset_mm, frame_id);
  return mosaic;
}

int PathEstimate::skipped() const {
  return int(std::count_if(entries.begin(), entries.end(), [](const PathEntry& e) { return e.skipped; }));
}

double PathEstimate::length_mm() const {
  double len = 0.0;
  for (std::size_t k = 1; k < entries.size(); ++k)
    len += std::hypot(entries[k].x_mm - entries[k - 1].x_mm, entries[k].y_mm - entries[k - 1].y_mm);
  return len;
}

Image rectify_frame(const Image& frame, const ForceSample& forces, const MaterialParams& mp,
                    const CameraIntrinsics& intrinsics, const PipelineOptions& options) {
  const LoadField lf = load_field_for(forces, mp, intrinsics, frame.width(), frame.height());
  Image out = rectify_image(frame, lf, mp, intrinsics);
  if (options.window_radius_px > 0.0) {
    const Plane8 win = circular_mask(out.width(), out.height(), intrinsics.cx, intrinsics.cy,
                                     options.window_radius_px - options.window_margin_px);
    out.set_mask(mask_and(out.validity(), win));
  }
  return out;
}

ReconstructionResult reconstruct(std::span<const Image> frames, std::span<const ForceSample> forces,
                                 const MaterialParams& mp, const CameraIntrinsics& intrinsics,
                                 const AsiftConfig& cfg, const PipelineOptions& options) {
  if (frames.empty()) throw InvalidArgument("reconstruct needs at least one frame");
  if (frames.size() != forces.size()) throw FrameMismatchError("frames and force samples differ in count");
  mp.validate();
  const int w = frames[0].width(), h = frames[0].height();
  intrinsics.validate(w, h);
  for (const auto& f : frames)
    if (f.width() != w || f.height() != h) throw InvalidArgument("frames differ in size");

  const double pitch = intrinsics.pixel_pitch;
  const Eigen::Vector2d centre_mm = Eigen::Vector2d(intrinsics.cx, intrinsics.cy) * pitch;
  ReconstructionResult res{Mosaic(pitch, -centre_mm), {}, {}, {}};

  if (total_force(forces[0]) > options.reference_force_warning)
    res.warnings.push_back("frame " + std::to_string(forces[0].frame_id) + " carries " +
                           std::to_string(total_force(forces[0])) + " N; the reference frame should be unloaded");
  res.mosaic.add(rectify_frame(frames[0], forces[0], mp, intrinsics, options), -centre_mm, forces[0].frame_id);
  res.path.entries.push_back({forces[0].frame_id, 0.0, 0.0, false});
  FrameReport first{forces[0].frame_id};
  res.frames.push_back(first);
  if (options.on_frame) options.on_frame(first);

  Eigen::Vector2d prev = Eigen::Vector2d::Zero(), velocity = Eigen::Vector2d::Zero();
  const int crop_w = int(std::lround(options.neighborhood_scale * w));
  const int crop_h = int(std::lround(options.neighborhood_scale * h));
  for (std::size_t i = 1; i < frames.size(); ++i) {
    FrameReport rep{forces[i].frame_id};
    const Image rectified = rectify_frame(frames[i], forces[i], mp, intrinsics, options);
    bool placed = false;
    try {
      Eigen::Vector2d top_left;
      const Image ref = res.mosaic.crop(prev, crop_w, crop_h, &top_left);
      if (ref.empty()) throw InsufficientInliersError("no reconstruction near the previous position");
      const auto ref_feats = detect_sift(ref, cfg);
      const auto new_feats = options.use_asift ? detect_asift(rectified, cfg) : detect_sift(rectified, cfg);
      const auto matches = options.use_asift ? match_features_by_view(ref_feats, new_feats, options.match_ratio)
                                             : match_features(ref_feats, new_feats, options.match_ratio);
      rep.matches = int(matches.size());
      if (int(matches.size()) < options.min_inliers) throw InsufficientInliersError("too few matches");
      std::vector<Correspondence> corrs;
      corrs.reserve(matches.size());
      for (const auto& m : matches)
        corrs.push_back({{ref_feats[m.query].x, ref_feats[m.query].y}, {new_feats[m.train].x, new_feats[m.train].y}});
      if (options.use_asift) corrs = dedupe_correspondences(corrs);

      // the crop acts as a virtual camera looking straight down at prev
      CameraIntrinsics ref_k = intrinsics;
      ref_k.cx = (prev.x() - top_left.x()) / pitch;
      ref_k.cy = (prev.y() - top_left.y()) / pitch;
      RansacOptions ro = options.ransac;
      ro.seed = options.ransac.seed + 0x9e3779b97f4a7c15ULL * i;
      const RelativePose rp = estimate_relative_pose(corrs, ref_k, intrinsics, intrinsics.standoff(), ro, 0.95,
                                                     options.in_plane_motion);
      rep.inliers = int(rp.inliers.size());
      rep.planar = rp.planar;
      if (rep.inliers >= options.min_inliers) {
        const Eigen::Vector2d pos = prev + rp.pose.translation.head<2>();
        const Pose corrected = correct_pose(rp.pose);
        const Image placed_img = reproject(rectified, rp.pose, corrected, intrinsics);
        res.mosaic.add(placed_img, pos - centre_mm, forces[i].frame_id);
        velocity = pos - prev;
        prev = pos;
        rep.yaw_deg = yaw_of(rp.pose) * 180.0 / std::numbers::pi;
        placed = true;
      }
    } catch (const InsufficientInliersError&) {
    } catch (const DegenerateConfigurationError&) {
    } catch (const CheiralityError&) {
    } catch (const SingularHomographyError&) {
    } catch (const TooSmallImageError&) {
    }
    if (!placed) {
      prev += velocity;
      rep.skipped = true;
      res.warnings.push_back("frame " + std::to_string(forces[i].frame_id) + ": tracking lost (" +
                             std::to_string(rep.inliers) + " inliers), position extrapolated");
    }
    rep.x_mm = prev.x();
    rep.y_mm = prev.y();
    res.path.entries.push_back({forces[i].frame_id, prev.x(), prev.y(), rep.skipped});
    res.frames.push_back(rep);
    if (options.on_frame) options.on_frame(rep);
  }
  return res;
}

MatchComparison compare_matching(const Image& a, const Image& b, const AsiftConfig& cfg,
                                 const RansacOptions& options) {
  MatchComparison out;
  const auto fa = detect_sift(a, cfg);
  const auto fb = detect_sift(b, cfg);
  AsiftStats stats;
  const auto fb_asift = detect_asift(b, cfg, &stats);
  out.features_a = int(fa.size());
  out.sift_features_b = int(fb.size());
  out.asift_features_b = int(fb_asift.size());

  auto to_corrs = [](const std::vector<Feature>& x, const std::vector<Feature>& y, const std::vector<Match>& ms) {
    std::vector<Correspondence> c;
    for (const auto& m : ms) c.push_back({{x[m.query].x, x[m.query].y}, {y[m.train].x, y[m.train].y}});
    return c;
  };
  auto inliers = [&](const std::vector<Correspondence>& c) {
    // the contact surface is a plane, so the fundamental matrix is degenerate
    // when the motion is small; keep the larger of the two consensus sets
    std::vector<int> best;
    if (c.size() < 8) return std::vector<Correspondence>{};
    try {
      best = ransac_fundamental(c, options).inliers;
    } catch (const Error&) {
    }
    try {
      const auto h = ransac_homography(c, options).inliers;
      if (h.size() > best.size()) best = h;
    } catch (const Error&) {
    }
    std::vector<Correspondence> in;
    for (int i : best) in.push_back(c[i]);
    return in;
  };
  const auto sift_corrs = to_corrs(fa, fb, match_features(fa, fb));
  const auto view_corrs = to_corrs(fa, fb_asift, match_features_by_view(fa, fb_asift));
  const auto asift_corrs = dedupe_correspondences(view_corrs);
  out.sift_matches = int(sift_corrs.size());
  out.asift_view_matches = int(view_corrs.size());
  out.asift_matches = int(asift_corrs.size());
  out.sift_inliers = inliers(sift_corrs);
  out.asift_inliers = inliers(asift_corrs);
  return out;
}

}  // namespace nrm
