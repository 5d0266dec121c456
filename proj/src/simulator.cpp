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

#include "nrmosaic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "nrmosaic/errors.hpp"
#include "nrmosaic/force_rect.hpp"
#include "nrmosaic/io.hpp"

namespace nrm {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

PlaneF unit_noise(int w, int h, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  PlaneF p(h, w);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = n(rng);
  p = gaussian_blur(p, sigma);
  const float mean = p.mean();
  const float sd = std::sqrt((p - mean).square().mean());
  return (p - mean) / std::max(sd, 1e-6f);
}

struct Branch {
  double x, y, angle, radius, length;
  int depth;
};

// Stamps a soft disc into alpha and keeps the count of pixels above one half.
void stamp(PlaneF& alpha, double cx, double cy, double r, long& covered) {
  const int x0 = std::max(0, int(std::floor(cx - r - 1)));
  const int x1 = std::min(int(alpha.cols()) - 1, int(std::ceil(cx + r + 1)));
  const int y0 = std::max(0, int(std::floor(cy - r - 1)));
  const int y1 = std::min(int(alpha.rows()) - 1, int(std::ceil(cy + r + 1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      const float a = float(std::clamp(0.5 * (r - d) + 0.5, 0.0, 1.0));
      float& cur = alpha(y, x);
      if (a > cur) {
        if (cur <= 0.5f && a > 0.5f) ++covered;
        cur = a;
      }
    }
}

}  // namespace

void ScanScript::validate(const MaterialParams& mp) const {
  if (frame_count < 1) throw InvalidArgument("scan script needs at least one frame");
  if (int(trajectory.size()) != frame_count) throw InvalidArgument("trajectory length differs from frame_count");
  if (int(force_profile.size()) != frame_count) throw InvalidArgument("force profile length differs from frame_count");
  if (force_noise < 0.0) throw InvalidArgument("force noise must be non-negative");
  if (calibration_frames < 0 || calibration_frames > frame_count)
    throw InvalidArgument("calibration frame count out of range");
  for (const auto& c : force_profile) {
    if (!(c.total_force >= 0.0)) throw InvalidArgument("scripted load must be non-negative");
    const double lim_x = max_tilt_for_load(c.total_force, mp.hooke_constant, mp.sensor_sep_x);
    const double lim_y = max_tilt_for_load(c.total_force, mp.hooke_constant, mp.sensor_sep_y);
    if (std::abs(c.theta_x_deg) * kDeg > lim_x + 1e-12 || std::abs(c.theta_y_deg) * kDeg > lim_y + 1e-12)
      throw InvalidArgument("scripted tilt needs a negative sensor reading at this load");
  }
}

Phantom generate_phantom(double width_mm, double height_mm, double resolution, std::uint64_t seed) {
  if (!(width_mm > 0 && height_mm > 0 && resolution > 0)) throw InvalidArgument("phantom dimensions must be positive");
  const int w = std::max(1, int(std::lround(width_mm * resolution)));
  const int h = std::max(1, int(std::lround(height_mm * resolution)));
  std::mt19937_64 rng(seed);
  const double px = resolution;  // px per mm

  const PlaneF coarse = unit_noise(w, h, 1.5 * px, rng);
  const PlaneF fine = unit_noise(w, h, 0.25 * px, rng);

  PlaneF alpha = PlaneF::Zero(h, w);
  long covered = 0;
  const long target = long(0.12 * double(w) * double(h));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> wiggle(0.0, 0.12);
  std::vector<Branch> stack;
  while (covered < target) {
    stack.push_back({u01(rng) * w, u01(rng) * h, u01(rng) * 2 * std::numbers::pi, (0.25 + 0.3 * u01(rng)) * px,
                     (25.0 + 35.0 * u01(rng)) * px, 0});
    while (!stack.empty()) {
      Branch b = stack.back();
      stack.pop_back();
      const double step = std::max(1.0, 0.5 * b.radius);
      for (double walked = 0; walked < b.length; walked += step) {
        if (b.x < -b.radius || b.y < -b.radius || b.x > w + b.radius || b.y > h + b.radius) break;
        stamp(alpha, b.x, b.y, b.radius, covered);
        b.angle += wiggle(rng) * std::sqrt(step / px);
        b.x += step * std::cos(b.angle);
        b.y += step * std::sin(b.angle);
        if (b.depth < 3 && u01(rng) < 0.02 * step / px) {
          const double turn = (0.5 + 0.6 * u01(rng)) * (u01(rng) < 0.5 ? -1 : 1);
          stack.push_back({b.x, b.y, b.angle + turn, std::max(0.12 * px, 0.7 * b.radius),
                           (0.4 + 0.4 * u01(rng)) * (b.length - walked), b.depth + 1});
        }
      }
    }
  }

  PlaneF base = 175.0f + 9.0f * coarse + 5.0f * fine;
  PlaneF dark = 70.0f + 6.0f * coarse;
  PlaneF img = base * (1.0f - alpha) + dark * alpha;
  img = gaussian_blur(img, 0.08 * px);
  return {image_from_float(img), resolution};
}

double max_tilt_for_load(double total_force, double kappa, double separation) {
  return std::asin(std::clamp(total_force / (4.0 * kappa * separation), 0.0, 1.0));
}

ForceSample synthesize_forces(const ContactState& contact, const MaterialParams& mp, long frame_id) {
  const double base = 0.25 * contact.total_force;
  const double dx = mp.hooke_constant * mp.sensor_sep_x * std::sin(contact.theta_x_deg * kDeg);
  const double dy = mp.hooke_constant * mp.sensor_sep_y * std::sin(contact.theta_y_deg * kDeg);
  ForceSample fs{frame_id, base - dx, base + dx, base - dy, base + dy};
  // rounding may push an exactly balanced reading a hair below zero
  for (double* f : {&fs.f1, &fs.f2, &fs.f3, &fs.f4})
    if (*f < 0.0 && *f > -1e-9) *f = 0.0;
  fs.validate();
  return fs;
}

RenderedFrame render_frame(const Phantom& phantom, const Waypoint& pose, const ContactState& contact,
                           const MaterialParams& mp, const CameraIntrinsics& intrinsics,
                           const ScannerGeometry& geometry, long frame_id) {
  const int w = geometry.width;
  const int h = geometry.height;
  intrinsics.validate(w, h);
  const ForceSample fs = synthesize_forces(contact, mp, frame_id);
  const LoadField lf = load_field_for(fs, mp, intrinsics, w, h);
  const Eigen::Vector2d c(intrinsics.cx, intrinsics.cy);
  const CoordinateMap dm = deformation_map(lf, mp, c);

  const double yaw = pose.yaw_deg * kDeg;
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double scale = intrinsics.pixel_pitch * phantom.resolution;
  auto to_phantom = [&](double qx, double qy) -> Eigen::Vector2d {
    const double dx = (qx - c.x()) * scale, dy = (qy - c.y()) * scale;
    return {pose.x_mm * phantom.resolution + cy * dx - sy * dy, pose.y_mm * phantom.resolution + sy * dx + cy * dy};
  };
  const Plane8& src = phantom.image.data();
  for (auto [qx, qy] : {std::pair{0.0, 0.0}, {w - 1.0, 0.0}, {0.0, h - 1.0}, {w - 1.0, h - 1.0}}) {
    const Eigen::Vector2d p = to_phantom(qx, qy);
    if (p.x() < 0 || p.y() < 0 || p.x() > src.cols() - 1 || p.y() > src.rows() - 1)
      throw OutOfBoundsError("scanner footprint leaves the phantom");
  }

  const double r2 = geometry.mask_radius_px * geometry.mask_radius_px;
  Plane8 data = Plane8::Zero(h, w);
  Plane8 mask = Plane8::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double qx = dm.x(y, x), qy = dm.y(y, x);
      if ((qx - c.x()) * (qx - c.x()) + (qy - c.y()) * (qy - c.y()) > r2) continue;
      const Eigen::Vector2d p = to_phantom(qx, qy);
      const auto v = sample_bilinear(src, p.x(), p.y());
      if (!v) continue;
      data(y, x) = std::uint8_t(std::clamp(std::lround(*v), 0L, 255L));
      mask(y, x) = 1;
    }
  return {Image(std::move(data), std::move(mask)), fs};
}

ScanScript raster_script(int frames, std::uint64_t seed, double step_x_mm, double step_y_mm, int columns) {
  if (frames < 1 || columns < 1) throw InvalidArgument("raster script needs frames and columns");
  ScanScript s;
  s.frame_count = frames;
  s.rng_seed = seed;
  std::mt19937_64 rng(seed ^ 0x5ca11ab1e);
  std::uniform_real_distribution<double> jit(-0.5, 0.5);
  for (int k = 0; k < frames; ++k) {
    const int row = k / columns;
    int col = k % columns;
    if (row % 2 == 1) col = columns - 1 - col;
    Waypoint wp{col * step_x_mm + jit(rng), row * step_y_mm + jit(rng),
                3.0 * std::sin(2 * std::numbers::pi * k / 37.0) + 0.5 * jit(rng)};
    s.trajectory.push_back(wp);
  }
  s.force_profile.assign(frames, {});
  return s;
}

ScanScript loop_script(int frames, std::uint64_t seed, double radius_mm) {
  if (frames < 1) throw InvalidArgument("loop script needs frames");
  ScanScript s;
  s.frame_count = frames;
  s.rng_seed = seed;
  std::mt19937_64 rng(seed ^ 0x100b);
  std::uniform_real_distribution<double> jit(-0.3, 0.3);
  // a little over one full turn so the tail overlaps the start
  const double sweep = 2.0 * std::numbers::pi * 1.15;
  for (int k = 0; k < frames; ++k) {
    const double a = frames > 1 ? sweep * k / (frames - 1) : 0.0;
    s.trajectory.push_back({radius_mm * std::sin(a) + jit(rng), radius_mm * (1.0 - std::cos(a)) + jit(rng),
                            2.0 * std::sin(a) + jit(rng)});
  }
  s.force_profile.assign(frames, {});
  return s;
}

void fill_force_profile(ScanScript& script, const MaterialParams& mp, double min_force, double max_force,
                        double max_tilt_deg) {
  if (!(min_force >= 0 && max_force >= min_force)) throw InvalidArgument("bad force range");
  std::mt19937_64 rng(script.rng_seed ^ 0xf0ce);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double phase = std::numbers::pi * u(rng);
  script.force_profile.resize(script.trajectory.size());
  for (std::size_t k = script.calibration_frames; k < script.trajectory.size(); ++k) {
    const double wave = 0.5 + 0.4 * std::sin(2 * std::numbers::pi * k / 23.0 + phase) + 0.1 * u(rng);
    const double fz = min_force + (max_force - min_force) * std::clamp(wave, 0.0, 1.0);
    const double lim_x = std::min(max_tilt_deg, 0.95 * max_tilt_for_load(fz, mp.hooke_constant, mp.sensor_sep_x) / kDeg);
    const double lim_y = std::min(max_tilt_deg, 0.95 * max_tilt_for_load(fz, mp.hooke_constant, mp.sensor_sep_y) / kDeg);
    script.force_profile[k] = {fz, lim_x * u(rng), lim_y * u(rng)};
  }
}

void add_calibration_prefix(ScanScript& script, const MaterialParams& mp, int count) {
  if (count < 5) throw InvalidArgument("calibration prefix needs at least 5 frames");
  if (script.trajectory.empty()) throw InvalidArgument("calibration prefix needs a trajectory");
  const int tilted = std::max(3, (count - 1) / 2);
  const int normal = count - 1 - tilted;
  std::vector<Waypoint> traj(count, script.trajectory.front());
  std::vector<ContactState> forces;
  forces.push_back({0.0, 0.0, 0.0});
  for (int j = 0; j < normal; ++j) forces.push_back({4.0 + 10.0 * (j + 1) / std::max(1, normal), 0.0, 0.0});
  for (int j = 0; j < tilted; ++j) {
    const double theta = (1.2 + 0.6 * j / std::max(1, tilted - 1)) * (j % 2 ? -1 : 1);
    const double need = 4.0 * mp.hooke_constant * mp.sensor_sep_x * std::sin(std::abs(theta) * kDeg);
    forces.push_back({need / 0.9, theta, 0.0});
  }
  script.trajectory.insert(script.trajectory.begin(), traj.begin(), traj.end());
  script.force_profile.insert(script.force_profile.begin(), forces.begin(), forces.end());
  script.frame_count += count;
  script.calibration_frames += count;
}

std::vector<TruthEntry> ground_truth(const ScanScript& script) {
  std::vector<TruthEntry> out;
  if (script.trajectory.empty()) return out;
  const Waypoint& o = script.trajectory.front();
  const double a = o.yaw_deg * kDeg;
  const double c = std::cos(a), s = std::sin(a);
  for (std::size_t k = 0; k < script.trajectory.size(); ++k) {
    const double dx = script.trajectory[k].x_mm - o.x_mm;
    const double dy = script.trajectory[k].y_mm - o.y_mm;
    out.push_back({long(k + 1), c * dx + s * dy, -s * dx + c * dy, script.trajectory[k].yaw_deg - o.yaw_deg});
  }
  return out;
}

void generate_dataset(const ScanScript& script, const DatasetSpec& spec, const std::filesystem::path& out_dir) {
  spec.material.validate();
  script.validate(spec.material);
  const auto& g = spec.geometry;
  const CameraIntrinsics& K = spec.intrinsics;
  K.validate(g.width, g.height);

  // phantom sized to the trajectory plus the footprint's half diagonal
  const double half = 0.5 * std::hypot(g.width, g.height) * K.pixel_pitch + spec.phantom_margin_mm;
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (const auto& wp : script.trajectory) {
    minx = std::min(minx, wp.x_mm);
    maxx = std::max(maxx, wp.x_mm);
    miny = std::min(miny, wp.y_mm);
    maxy = std::max(maxy, wp.y_mm);
  }
  const Phantom phantom =
      generate_phantom(maxx - minx + 2 * half, maxy - miny + 2 * half, 1.0 / K.pixel_pitch, script.rng_seed);

  std::filesystem::create_directories(out_dir / "frames");
  std::mt19937_64 noise_rng(script.rng_seed ^ 0x0015e);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<ForceSample> logged;
  for (int k = 0; k < script.frame_count; ++k) {
    Waypoint wp = script.trajectory[k];
    wp.x_mm += half - minx;
    wp.y_mm += half - miny;
    const RenderedFrame rf = render_frame(phantom, wp, script.force_profile[k], spec.material, K, g, k + 1);
    write_png(out_dir / "frames" / frame_filename(k + 1), rf.image);
    ForceSample fs = rf.forces;
    if (script.force_noise > 0.0)
      for (double* f : {&fs.f1, &fs.f2, &fs.f3, &fs.f4}) *f = std::max(0.0, *f * (1.0 + script.force_noise * n01(noise_rng)));
    logged.push_back(fs);
  }
  write_forces_csv(out_dir / "forces.csv", logged);

  std::vector<PathRow> truth;
  for (const auto& t : ground_truth(script)) truth.push_back({t.frame_id, t.x_mm, t.y_mm, t.yaw_deg});
  write_path_csv(out_dir / "groundtruth.csv", truth, true);

  if (script.calibration_frames > 0) {
    std::vector<std::pair<long, double>> ref;
    for (int k = 0; k < script.calibration_frames; ++k)
      if (script.force_profile[k].theta_x_deg != 0.0) ref.emplace_back(k + 1, script.force_profile[k].theta_x_deg);
    write_reference_angles_csv(out_dir / "reference_angles.csv", ref);
  }

  DatasetConfig cfg;
  cfg.material = spec.material;
  cfg.intrinsics = K;
  cfg.geometry = g;
  cfg.asift.stretch_ratio = spec.stretch_ratio;
  cfg.calibration_frames = script.calibration_frames;
  write_config(out_dir / "config.txt", cfg);
}

}  // namespace nrm
