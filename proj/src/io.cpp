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

#include "nrmosaic/io.hpp"

#include <png.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nrmosaic/errors.hpp"

namespace nrm {

namespace fs = std::filesystem;

std::string format_number(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

double parse_number(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) throw FormatError("empty numeric field");
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw FormatError("malformed number '" + s + "'");
  return v;
}

void atomic_write(const fs::path& path, const std::string& bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place: " + path.string());
  }
}

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Returns data rows after checking the header has exactly `expected` columns.
std::vector<std::vector<std::string>> csv_rows(const std::string& text, const std::vector<std::string>& expected,
                                               std::size_t min_cols = 0) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing CSV header");
  auto head = split(trim(line), ',');
  if (min_cols == 0) min_cols = expected.size();
  if (head.size() < min_cols || head.size() > expected.size()) throw FormatError("unexpected CSV header: " + line);
  for (std::size_t i = 0; i < head.size(); ++i)
    if (trim(head[i]) != expected[i]) throw FormatError("unexpected CSV column '" + head[i] + "'");
  std::vector<std::vector<std::string>> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(line, ',');
    if (cols.size() != head.size())
      throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(head.size()) + " fields");
    rows.push_back(std::move(cols));
  }
  return rows;
}

long parse_id(const std::string& s) {
  const double v = parse_number(s);
  if (v != std::floor(v) || v < 0) throw FormatError("bad frame id '" + s + "'");
  return long(v);
}

}  // namespace

std::string frame_filename(long frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06ld.png", frame_id);
  return buf;
}

Image read_png(const fs::path& path) {
  png_image im{};
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&im, path.string().c_str()))
    throw IoError("cannot read image " + path.string() + ": " + im.message);
  im.format = PNG_FORMAT_GRAY;
  Plane8 data(im.height, im.width);
  if (!png_image_finish_read(&im, nullptr, data.data(), int(im.width), nullptr)) {
    const std::string msg = im.message;
    png_image_free(&im);
    throw IoError("cannot decode image " + path.string() + ": " + msg);
  }
  return Image(std::move(data));
}

void write_png(const fs::path& path, const Image& img) {
  if (img.empty()) throw InvalidArgument("write_png: empty image");
  Plane8 data = img.data();
  if (img.has_mask()) data = (*img.mask() != 0).select(data, Plane8::Zero(data.rows(), data.cols()));
  png_image im{};
  im.version = PNG_IMAGE_VERSION;
  im.width = png_uint_32(img.width());
  im.height = png_uint_32(img.height());
  im.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&im, nullptr, &size, 0, data.data(), img.width(), nullptr))
    throw IoError(std::string("png encode failed: ") + im.message);
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&im, bytes.data(), &size, 0, data.data(), img.width(), nullptr))
    throw IoError(std::string("png encode failed: ") + im.message);
  bytes.resize(size);
  atomic_write(path, bytes);
}

std::string forces_csv(const std::vector<ForceSample>& rows) {
  std::string out = "frame_id,f1_n,f2_n,f3_n,f4_n\n";
  for (const auto& r : rows)
    out += std::to_string(r.frame_id) + "," + format_number(r.f1) + "," + format_number(r.f2) + "," +
           format_number(r.f3) + "," + format_number(r.f4) + "\n";
  return out;
}

std::vector<ForceSample> parse_forces_csv(const std::string& text) {
  std::vector<ForceSample> out;
  for (const auto& c : csv_rows(text, {"frame_id", "f1_n", "f2_n", "f3_n", "f4_n"})) {
    ForceSample f{parse_id(c[0]), parse_number(c[1]), parse_number(c[2]), parse_number(c[3]), parse_number(c[4])};
    f.validate();
    out.push_back(f);
  }
  return out;
}

void write_forces_csv(const fs::path& path, const std::vector<ForceSample>& rows) {
  atomic_write(path, forces_csv(rows));
}

std::vector<ForceSample> read_forces_csv(const fs::path& path) { return parse_forces_csv(slurp(path)); }

std::string path_csv(const std::vector<PathRow>& rows, bool with_yaw) {
  std::string out = with_yaw ? "frame_id,x_mm,y_mm,yaw_deg\n" : "frame_id,x_mm,y_mm,skipped\n";
  for (const auto& r : rows) {
    out += std::to_string(r.frame_id) + "," + format_number(r.x_mm) + "," + format_number(r.y_mm) + ",";
    out += with_yaw ? format_number(r.yaw_deg) : std::string(r.skipped ? "1" : "0");
    out += "\n";
  }
  return out;
}

std::vector<PathRow> parse_path_csv(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  const bool est = trim(header) == "frame_id,x_mm,y_mm,skipped";
  const std::vector<std::string> cols =
      est ? std::vector<std::string>{"frame_id", "x_mm", "y_mm", "skipped"}
          : std::vector<std::string>{"frame_id", "x_mm", "y_mm", "yaw_deg"};
  std::vector<PathRow> out;
  for (const auto& c : csv_rows(text, cols, 3)) {
    PathRow r{parse_id(c[0]), parse_number(c[1]), parse_number(c[2])};
    if (c.size() > 3) {
      if (est)
        r.skipped = parse_number(c[3]) != 0.0;
      else
        r.yaw_deg = parse_number(c[3]);
    }
    out.push_back(r);
  }
  return out;
}

void write_path_csv(const fs::path& path, const std::vector<PathRow>& rows, bool with_yaw) {
  atomic_write(path, path_csv(rows, with_yaw));
}

std::vector<PathRow> read_path_csv(const fs::path& path) { return parse_path_csv(slurp(path)); }

void write_reference_angles_csv(const fs::path& path, const std::vector<std::pair<long, double>>& rows) {
  std::string out = "frame_id,theta_x_deg\n";
  for (const auto& [id, th] : rows) out += std::to_string(id) + "," + format_number(th) + "\n";
  atomic_write(path, out);
}

std::vector<std::pair<long, double>> read_reference_angles_csv(const fs::path& path) {
  std::vector<std::pair<long, double>> out;
  for (const auto& c : csv_rows(slurp(path), {"frame_id", "theta_x_deg"}))
    out.emplace_back(parse_id(c[0]), parse_number(c[1]));
  return out;
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

DatasetConfig parse_config(const std::string& text) {
  DatasetConfig cfg;
  const auto kv = parse_key_values(text);
  auto num = [&](const char* key, double& dst) {
    auto it = kv.find(key);
    if (it != kv.end()) dst = parse_number(it->second);
  };
  auto& m = cfg.material;
  num("material.youngs_modulus_pa", m.youngs_modulus);
  num("material.poisson_ratio", m.poisson_ratio);
  num("material.hooke_constant_n_per_mm", m.hooke_constant);
  num("material.scanner_area_m2", m.scanner_area);
  num("material.sensor_sep_x_mm", m.sensor_sep_x);
  num("material.sensor_sep_y_mm", m.sensor_sep_y);
  auto& k = cfg.intrinsics;
  num("camera.fx", k.fx);
  num("camera.fy", k.fy);
  num("camera.cx", k.cx);
  num("camera.cy", k.cy);
  num("camera.pixel_pitch_mm", k.pixel_pitch);
  double w = cfg.geometry.width, h = cfg.geometry.height, calib = 0;
  num("scanner.width_px", w);
  num("scanner.height_px", h);
  num("scanner.mask_radius_px", cfg.geometry.mask_radius_px);
  num("calibration.frames", calib);
  cfg.geometry.width = int(w);
  cfg.geometry.height = int(h);
  cfg.calibration_frames = int(calib);
  double ratio = cfg.asift.stretch_ratio;
  num("asift.stretch_ratio", ratio);
  AsiftConfig a = asift_schedule(ratio);
  a.peak_threshold = cfg.asift.peak_threshold;
  a.edge_threshold = cfg.asift.edge_threshold;
  num("asift.peak_threshold", a.peak_threshold);
  num("asift.edge_threshold", a.edge_threshold);
  cfg.asift = a;
  m.validate();
  return cfg;
}

std::string config_text(const DatasetConfig& cfg) {
  std::ostringstream o;
  const auto& m = cfg.material;
  const auto& k = cfg.intrinsics;
  auto line = [&](const char* key, double v) { o << key << " = " << format_number(v) << "\n"; };
  line("material.youngs_modulus_pa", m.youngs_modulus);
  line("material.poisson_ratio", m.poisson_ratio);
  line("material.hooke_constant_n_per_mm", m.hooke_constant);
  line("material.scanner_area_m2", m.scanner_area);
  line("material.sensor_sep_x_mm", m.sensor_sep_x);
  line("material.sensor_sep_y_mm", m.sensor_sep_y);
  line("camera.fx", k.fx);
  line("camera.fy", k.fy);
  line("camera.cx", k.cx);
  line("camera.cy", k.cy);
  line("camera.pixel_pitch_mm", k.pixel_pitch);
  line("scanner.width_px", cfg.geometry.width);
  line("scanner.height_px", cfg.geometry.height);
  line("scanner.mask_radius_px", cfg.geometry.mask_radius_px);
  line("asift.stretch_ratio", cfg.asift.stretch_ratio);
  line("asift.peak_threshold", cfg.asift.peak_threshold);
  line("asift.edge_threshold", cfg.asift.edge_threshold);
  line("calibration.frames", cfg.calibration_frames);
  return o.str();
}

DatasetConfig read_config(const fs::path& path) { return parse_config(slurp(path)); }

void write_config(const fs::path& path, const DatasetConfig& cfg) { atomic_write(path, config_text(cfg)); }

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  if (!fs::exists(dir / "config.txt")) throw IoError("missing config.txt in " + dir.string());
  if (!fs::exists(dir / "forces.csv")) throw IoError("missing forces.csv in " + dir.string());
  ds.config = read_config(dir / "config.txt");
  ds.forces = read_forces_csv(dir / "forces.csv");
  for (const auto& f : ds.forces) {
    const fs::path p = dir / "frames" / frame_filename(f.frame_id);
    if (!fs::exists(p)) throw IoError("missing frame " + p.string());
    Image img = read_png(p);
    if (img.width() != ds.config.geometry.width || img.height() != ds.config.geometry.height)
      throw FormatError("frame " + p.string() + " does not match the configured size");
    // zero-valued pixels lie outside the scanner window
    img.set_mask((img.data() > 0).cast<std::uint8_t>());
    ds.frames.push_back(std::move(img));
  }
  if (fs::exists(dir / "groundtruth.csv")) ds.truth = read_path_csv(dir / "groundtruth.csv");
  return ds;
}

}  // namespace nrm
