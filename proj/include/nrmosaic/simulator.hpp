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
#include <filesystem>
#include <vector>

#include "nrmosaic/core.hpp"

namespace nrm {

/// Scanner centre position on the phantom (mm, y downward) and camera yaw.
struct Waypoint {
  double x_mm = 0.0;
  double y_mm = 0.0;
  double yaw_deg = 0.0;
};

/// Scripted contact state for one frame.
struct ContactState {
  double total_force = 0.0;  // N
  double theta_x_deg = 0.0;
  double theta_y_deg = 0.0;
};

struct ScanScript {
  std::vector<Waypoint> trajectory;
  std::vector<ContactState> force_profile;
  int frame_count = 0;
  std::uint64_t rng_seed = 0;
  double force_noise = 0.0;  // relative std of Gaussian noise on each sensor reading; 0 disables
  // Leading stationary frames for calibration: thetas with reference angles.
  int calibration_frames = 0;

  void validate(const MaterialParams& mp) const;
};

/// Frame size and scanner window for rendering.
struct ScannerGeometry {
  int width = 640;
  int height = 480;
  double mask_radius_px = 240.0;
};

/// Phantom surface texture with its sampling density.
struct Phantom {
  Image image;
  double resolution = 10.0;  // px per mm
};

/// Dark branching vein network over a bright textured background.
Phantom generate_phantom(double width_mm, double height_mm, double resolution, std::uint64_t seed);

/// Symmetric four-sensor split that reproduces the total load and tilts exactly.
ForceSample synthesize_forces(const ContactState& contact, const MaterialParams& mp, long frame_id = 0);

struct RenderedFrame {
  Image image;
  ForceSample forces;
};

/// Crops the scanner footprint at `pose`, masks it to the circular window and
/// applies the forward contact stretch for `contact`.
RenderedFrame render_frame(const Phantom& phantom, const Waypoint& pose, const ContactState& contact,
                           const MaterialParams& mp, const CameraIntrinsics& intrinsics,
                           const ScannerGeometry& geometry, long frame_id = 0);

/// Largest |theta| (rad) the sensors can express for a load without any reading
/// going negative.
double max_tilt_for_load(double total_force, double kappa, double separation);

/// Boustrophedon raster scan with mild yaw and position jitter.
ScanScript raster_script(int frames, std::uint64_t seed, double step_x_mm = 20.0, double step_y_mm = 15.0,
                         int columns = 10);
/// A closed loop that revisits its starting region.
ScanScript loop_script(int frames, std::uint64_t seed, double radius_mm = 40.0);

/// Fills force_profile with loads in [min_force, max_force] and the largest
/// expressible tilts capped at max_tilt_deg.
void fill_force_profile(ScanScript& script, const MaterialParams& mp, double min_force, double max_force,
                        double max_tilt_deg);

/// Prepends `count` stationary calibration frames at the first waypoint: one
/// unloaded frame, then normal loads, then x-tilted frames.
void add_calibration_prefix(ScanScript& script, const MaterialParams& mp, int count);

/// Ground-truth path relative to frame 1, expressed in frame 1's image axes.
struct TruthEntry {
  long frame_id = 0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double yaw_deg = 0.0;
};
std::vector<TruthEntry> ground_truth(const ScanScript& script);

struct DatasetSpec {
  MaterialParams material;
  CameraIntrinsics intrinsics{500.0, 500.0, 319.5, 239.5, 0.1};
  ScannerGeometry geometry;
  double stretch_ratio = 1.13;
  double phantom_margin_mm = 15.0;
};

/// Renders the script and writes frames/, forces.csv, groundtruth.csv and
/// config.txt (plus reference_angles.csv for calibration frames).
void generate_dataset(const ScanScript& script, const DatasetSpec& spec, const std::filesystem::path& out_dir);

}  // namespace nrm
