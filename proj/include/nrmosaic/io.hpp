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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nrmosaic/core.hpp"
#include "nrmosaic/features.hpp"
#include "nrmosaic/image.hpp"
#include "nrmosaic/simulator.hpp"

namespace nrm {

/// Six significant digits, '.' decimal point, independent of locale.
std::string format_number(double v);
double parse_number(const std::string& s);

/// Writes through a temporary sibling and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string frame_filename(long frame_id);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

struct PathRow {
  long frame_id = 0;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double yaw_deg = 0.0;
  bool skipped = false;
};

std::string forces_csv(const std::vector<ForceSample>& rows);
std::vector<ForceSample> parse_forces_csv(const std::string& text);
void write_forces_csv(const std::filesystem::path& path, const std::vector<ForceSample>& rows);
std::vector<ForceSample> read_forces_csv(const std::filesystem::path& path);

/// Ground-truth layout (frame_id,x_mm,y_mm,yaw_deg) or, with with_yaw false,
/// the estimate layout (frame_id,x_mm,y_mm,skipped).
std::string path_csv(const std::vector<PathRow>& rows, bool with_yaw);
std::vector<PathRow> parse_path_csv(const std::string& text);
void write_path_csv(const std::filesystem::path& path, const std::vector<PathRow>& rows, bool with_yaw);
std::vector<PathRow> read_path_csv(const std::filesystem::path& path);

void write_reference_angles_csv(const std::filesystem::path& path, const std::vector<std::pair<long, double>>& rows);
std::vector<std::pair<long, double>> read_reference_angles_csv(const std::filesystem::path& path);

struct DatasetConfig {
  MaterialParams material;
  CameraIntrinsics intrinsics{500.0, 500.0, 319.5, 239.5, 0.1};
  ScannerGeometry geometry;
  AsiftConfig asift;
  int calibration_frames = 0;
};

std::map<std::string, std::string> parse_key_values(const std::string& text);
DatasetConfig parse_config(const std::string& text);
std::string config_text(const DatasetConfig& cfg);
DatasetConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const DatasetConfig& cfg);

struct Dataset {
  DatasetConfig config;
  std::vector<Image> frames;
  std::vector<ForceSample> forces;
  std::optional<std::vector<PathRow>> truth;
};

/// Loads frames/, forces.csv, config.txt and groundtruth.csv when present.
/// Frame pixels equal to 0 are masked as outside the scanner window.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace nrm
