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
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "nrmosaic/calibration.hpp"
#include "nrmosaic/errors.hpp"
#include "nrmosaic/force_rect.hpp"
#include "nrmosaic/io.hpp"
#include "nrmosaic/pipeline.hpp"
#include "nrmosaic/simulator.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace nrm;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double round6(double v) { return parse_number(format_number(v)); }

json num_or_null(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return round6(*v);
}

// Truth rows for the estimate's frames, re-based on the first estimated frame.
PathEstimate align_truth(const std::vector<PathRow>& est, const std::vector<PathRow>& truth) {
  PathEstimate out;
  if (est.empty()) return out;
  auto find = [&](long id) -> const PathRow& {
    for (const auto& t : truth)
      if (t.frame_id == id) return t;
    throw FrameMismatchError("ground truth has no row for frame " + std::to_string(id));
  };
  const PathRow& o = find(est.front().frame_id);
  const double a = o.yaw_deg * kDeg;
  const double c = std::cos(a), s = std::sin(a);
  const bool rebase = o.x_mm != 0.0 || o.y_mm != 0.0 || o.yaw_deg != 0.0;
  for (const auto& e : est) {
    const PathRow& t = find(e.frame_id);
    if (!rebase) {
      out.entries.push_back({t.frame_id, t.x_mm, t.y_mm, false});
    } else {
      const double dx = t.x_mm - o.x_mm, dy = t.y_mm - o.y_mm;
      out.entries.push_back({t.frame_id, c * dx + s * dy, -s * dx + c * dy, false});
    }
  }
  return out;
}

PathEstimate to_estimate(const std::vector<PathRow>& rows) {
  PathEstimate p;
  for (const auto& r : rows) p.entries.push_back({r.frame_id, r.x_mm, r.y_mm, r.skipped});
  return p;
}

struct Calibrated {
  MaterialParams material;
  std::optional<double> kappa;
  std::optional<double> youngs;
  int hooke_samples = 0;
  int youngs_pairs = 0;
};

Calibrated calibrate_prefix(const Dataset& ds, const fs::path& dir, int count) {
  if (count < 2 || count > int(ds.frames.size())) throw InvalidArgument("calibration frame count out of range");
  Calibrated out;
  out.material = ds.config.material;
  std::set<long> tilted;
  const fs::path ref_path = dir / "reference_angles.csv";
  if (fs::exists(ref_path)) {
    std::vector<HookeSample> samples;
    for (const auto& [id, theta] : read_reference_angles_csv(ref_path))
      for (int k = 0; k < count; ++k)
        if (ds.forces[k].frame_id == id) {
          samples.push_back({ds.forces[k], theta * kDeg});
          tilted.insert(id);
        }
    if (!samples.empty()) {
      out.kappa = calibrate_hooke(samples, out.material.sensor_sep_x);
      out.material.hooke_constant = *out.kappa;
      out.hooke_samples = int(samples.size());
    }
  }
  int ref = -1;
  for (int k = 0; k < count; ++k)
    if (!tilted.count(ds.forces[k].frame_id) && (ref < 0 || total_force(ds.forces[k]) < total_force(ds.forces[ref])))
      ref = k;
  std::vector<YoungsPair> pairs;
  for (int k = 0; k < count; ++k) {
    if (k == ref || tilted.count(ds.forces[k].frame_id)) continue;
    if (total_force(ds.forces[k]) - total_force(ds.forces[ref]) < 0.5) continue;
    pairs.push_back({ds.frames[ref], ds.frames[k], ds.forces[k]});
  }
  if (!pairs.empty()) {
    const YoungsResult yr = calibrate_youngs(pairs, out.material, ds.config.asift);
    out.youngs = yr.youngs_modulus;
    out.material.youngs_modulus = yr.youngs_modulus;
    out.youngs_pairs = int(pairs.size());
  }
  return out;
}

int run_simulate(const std::string& out, int frames, std::uint64_t seed, const std::string& path_kind,
                 const std::string& path_file, const std::string& profile, double noise, int calib,
                 double pitch) {
  DatasetSpec spec;
  spec.intrinsics.pixel_pitch = pitch;
  ScanScript script;
  if (path_kind == "raster") {
    script = raster_script(frames, seed);
  } else if (path_kind == "loop") {
    script = loop_script(frames, seed);
  } else if (path_kind == "file") {
    if (path_file.empty()) throw InvalidArgument("--path file needs --path-file");
    const auto rows = read_path_csv(path_file);
    script.rng_seed = seed;
    for (const auto& r : rows) script.trajectory.push_back({r.x_mm, r.y_mm, r.yaw_deg});
    if (frames > 0 && int(script.trajectory.size()) > frames) script.trajectory.resize(frames);
    script.frame_count = int(script.trajectory.size());
    script.force_profile.assign(script.trajectory.size(), {});
  } else {
    throw InvalidArgument("unknown path kind '" + path_kind + "'");
  }
  double fmin = 2.0, fmax = 15.0, tilt = 10.0;
  {
    std::vector<double> v;
    std::string cur;
    for (char ch : profile + ":") {
      if (ch == ':') {
        if (!cur.empty()) v.push_back(parse_number(cur));
        cur.clear();
      } else {
        cur.push_back(ch);
      }
    }
    if (v.size() < 2 || v.size() > 3) throw InvalidArgument("--force-profile expects MIN:MAX[:MAX_TILT_DEG]");
    fmin = v[0];
    fmax = v[1];
    if (v.size() == 3) tilt = v[2];
  }
  fill_force_profile(script, spec.material, fmin, fmax, tilt);
  if (calib > 0) add_calibration_prefix(script, spec.material, calib);
  script.force_noise = noise;
  generate_dataset(script, spec, out);
  std::cout << "wrote " << script.frame_count << " frames to " << out << "\n";
  return 0;
}

int run_reconstruct(const std::string& dir, const std::string& out, std::uint64_t seed, bool auto_calibrate,
                    int calib_frames, bool no_asift, bool verbose) {
  const Dataset ds = load_dataset(dir);
  if (ds.frames.empty()) throw InvalidArgument("dataset has no frames");
  MaterialParams mp = ds.config.material;
  int start = 0;
  int prefix = calib_frames > 0 ? calib_frames : ds.config.calibration_frames;
  if (auto_calibrate) {
    if (prefix <= 0) prefix = 5;
    const Calibrated c = calibrate_prefix(ds, dir, prefix);
    mp = c.material;
    std::cerr << "calibrated: kappa " << format_number(mp.hooke_constant) << " N/mm, E "
              << format_number(mp.youngs_modulus) << " Pa\n";
    start = prefix;
  } else if (prefix > 0) {
    start = prefix;  // stationary calibration captures are not part of the scan
  }
  if (start >= int(ds.frames.size())) throw InvalidArgument("no scan frames after the calibration prefix");

  PipelineOptions opt;
  opt.ransac.seed = seed;
  opt.use_asift = !no_asift;
  if (verbose)
    opt.on_frame = [](const FrameReport& r) {
      std::cerr << "frame " << r.frame_id << ": " << r.inliers << " inliers" << (r.skipped ? " (skipped)" : "")
                << " at " << format_number(r.x_mm) << ", " << format_number(r.y_mm) << "\n";
    };
  const std::span<const Image> frames(ds.frames.data() + start, ds.frames.size() - start);
  const std::span<const ForceSample> forces(ds.forces.data() + start, ds.forces.size() - start);
  const ReconstructionResult res = reconstruct(frames, forces, mp, ds.config.intrinsics, ds.config.asift, opt);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";

  fs::create_directories(out);
  std::vector<PathRow> rows;
  for (const auto& e : res.path.entries) rows.push_back({e.frame_id, e.x_mm, e.y_mm, 0.0, e.skipped});
  const std::string text = path_csv(rows, false);
  atomic_write(fs::path(out) / "path.csv", text);
  write_png(fs::path(out) / "mosaic.png", res.mosaic.canvas());

  // metrics come from the serialized path so evaluate reproduces them exactly
  const auto written = parse_path_csv(text);
  const PathEstimate est = to_estimate(written);
  json m;
  m["frames"] = int(res.path.entries.size());
  m["skipped"] = res.path.skipped();
  m["path_length_mm"] = round6(est.length_mm());
  std::vector<int> counts;
  for (const auto& f : res.frames) counts.push_back(f.inliers);
  m["inlier_counts"] = counts;
  m["rmse_mm"] = nullptr;
  m["error_ratio_percent"] = nullptr;
  if (ds.truth) {
    const PathMetrics pm = path_metrics(est, align_truth(written, *ds.truth));
    m["rmse_mm"] = num_or_null(pm.rmse_mm);
    m["error_ratio_percent"] = num_or_null(pm.error_ratio_percent);
  }
  atomic_write(fs::path(out) / "metrics.json", m.dump(2) + "\n");
  std::cout << m.dump(2) << "\n";
  return 0;
}

void draw_line(Plane8& img, Eigen::Vector2d a, Eigen::Vector2d b) {
  const int n = int(std::ceil((b - a).norm())) + 1;
  for (int i = 0; i <= n; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (double(i) / n);
    const int x = int(std::lround(p.x())), y = int(std::lround(p.y()));
    if (x >= 0 && y >= 0 && x < img.cols() && y < img.rows()) img(y, x) = 255;
  }
}

int run_match(const std::string& a_path, const std::string& b_path, const std::string& viz, std::uint64_t seed,
              double ratio_r) {
  const Image a = read_png(a_path);
  const Image b = read_png(b_path);
  RansacOptions ro;
  ro.seed = seed;
  const MatchComparison mc = compare_matching(a, b, asift_schedule(ratio_r), ro);
  json j;
  j["features_a"] = mc.features_a;
  j["sift_features_b"] = mc.sift_features_b;
  j["asift_features_b"] = mc.asift_features_b;
  j["sift_matches"] = mc.sift_matches;
  j["asift_matches"] = mc.asift_matches;
  j["asift_view_matches"] = mc.asift_view_matches;
  j["sift_inliers"] = mc.sift_inliers.size();
  j["asift_inliers"] = mc.asift_inliers.size();
  j["ratio"] = mc.sift_inliers.empty() ? json(nullptr) : json(round6(mc.ratio()));
  if (!viz.empty()) {
    const int w = a.width() + b.width(), h = std::max(a.height(), b.height());
    Plane8 canvas = Plane8::Zero(h, w);
    canvas.block(0, 0, a.height(), a.width()) = a.data();
    canvas.block(0, a.width(), b.height(), b.width()) = b.data();
    canvas = canvas / 2;
    for (const auto& c : mc.asift_inliers) draw_line(canvas, c.first, c.second + Eigen::Vector2d(a.width(), 0));
    write_png(viz, Image(std::move(canvas)));
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_calibrate(const std::string& dir, int frames, const std::string& out) {
  const Dataset ds = load_dataset(dir);
  const int count = frames > 0 ? frames : (ds.config.calibration_frames > 0 ? ds.config.calibration_frames : 5);
  const Calibrated c = calibrate_prefix(ds, dir, count);
  DatasetConfig cfg = ds.config;
  cfg.material = c.material;
  std::string text;
  for (const auto& [k, v] : parse_key_values(config_text(cfg)))
    if (k.rfind("material.", 0) == 0) text += k + " = " + v + "\n";
  if (!out.empty()) atomic_write(out, text);
  std::cout << text;
  std::cerr << "hooke samples " << c.hooke_samples << ", stiffness pairs " << c.youngs_pairs << "\n";
  return 0;
}

int run_evaluate(const std::string& est_path, const std::string& truth_path) {
  const auto est = read_path_csv(est_path);
  const auto truth = read_path_csv(truth_path);
  const PathMetrics pm = path_metrics(to_estimate(est), align_truth(est, truth));
  json j;
  j["frames"] = est.size();
  j["rmse_mm"] = num_or_null(pm.rmse_mm);
  j["error_ratio_percent"] = num_or_null(pm.error_ratio_percent);
  j["path_length_mm"] = round6(to_estimate(est).length_mm());
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Force-rectified tactile image mosaicking"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scan dataset");
  std::string sim_out, sim_path = "raster", sim_path_file, sim_profile = "2:15:10";
  int sim_frames = 100, sim_calib = 0;
  std::uint64_t sim_seed = 0;
  double sim_noise = 0.0, sim_pitch = 0.1;
  sim->add_option("--out", sim_out, "Output dataset directory")->required();
  sim->add_option("--frames", sim_frames, "Number of scan frames")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--path", sim_path, "Trajectory: raster, loop or file")->check(CLI::IsMember({"raster", "loop", "file"}));
  sim->add_option("--path-file", sim_path_file, "CSV of waypoints (frame_id,x_mm,y_mm,yaw_deg) for --path file");
  sim->add_option("--force-profile", sim_profile, "Load range and tilt cap as MIN:MAX[:MAX_TILT_DEG]");
  sim->add_option("--force-noise", sim_noise, "Relative sensor noise (std)")->check(CLI::NonNegativeNumber);
  sim->add_option("--calibration-prefix", sim_calib, "Prepend K stationary calibration frames");
  sim->add_option("--pixel-pitch", sim_pitch, "Millimetres per pixel")->check(CLI::PositiveNumber);

  auto* rec = app.add_subcommand("reconstruct", "Rebuild the surface mosaic and scan path");
  std::string rec_dir, rec_out;
  std::uint64_t rec_seed = 0;
  bool rec_auto = false, rec_plain = false, rec_verbose = false;
  int rec_calib = 0;
  rec->add_option("--dataset", rec_dir, "Dataset directory")->required();
  rec->add_option("--out", rec_out, "Output directory")->required();
  rec->add_option("--seed", rec_seed, "RANSAC seed");
  rec->add_flag("--auto-calibrate", rec_auto, "Estimate material constants from the leading frames");
  rec->add_option("--calibration-frames", rec_calib, "Number of leading calibration frames");
  rec->add_flag("--plain-sift", rec_plain, "Use plain SIFT on new frames instead of modified A-SIFT");
  rec->add_flag("-v,--verbose", rec_verbose, "Per-frame progress on stderr");

  auto* mat = app.add_subcommand("match", "Compare SIFT and modified A-SIFT matching on two images");
  std::string m_a, m_b, m_viz;
  std::uint64_t m_seed = 0;
  double m_ratio = 1.13;
  mat->add_option("first", m_a, "Reference image")->required();
  mat->add_option("second", m_b, "Second image (A-SIFT side)")->required();
  mat->add_option("--viz", m_viz, "Write a side-by-side inlier visualization");
  mat->add_option("--seed", m_seed, "RANSAC seed");
  mat->add_option("--stretch-ratio", m_ratio, "A-SIFT stretch ratio R")->check(CLI::PositiveNumber);

  auto* cal = app.add_subcommand("calibrate", "Estimate material constants from calibration frames");
  std::string c_dir, c_out;
  int c_frames = 0;
  cal->add_option("--dataset", c_dir, "Dataset directory")->required();
  cal->add_option("--frames", c_frames, "Number of leading calibration frames");
  cal->add_option("--out", c_out, "Write the material record here");

  auto* ev = app.add_subcommand("evaluate", "Compare an estimated path against ground truth");
  std::string e_est, e_truth;
  ev->add_option("estimate", e_est, "Estimated path CSV")->required();
  ev->add_option("truth", e_truth, "Ground-truth path CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return run_simulate(sim_out, sim_frames, sim_seed, sim_path, sim_path_file, sim_profile, sim_noise, sim_calib, sim_pitch);
    if (*rec) return run_reconstruct(rec_dir, rec_out, rec_seed, rec_auto, rec_calib, rec_plain, rec_verbose);
    if (*mat) return run_match(m_a, m_b, m_viz, m_seed, m_ratio);
    if (*cal) return run_calibrate(c_dir, c_frames, c_out);
    if (*ev) return run_evaluate(e_est, e_truth);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
