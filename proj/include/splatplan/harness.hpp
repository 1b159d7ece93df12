#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "splatplan/core.hpp"
#include "splatplan/mapper.hpp"
#include "splatplan/metrics.hpp"
#include "splatplan/planner.hpp"
#include "splatplan/sensor_sim.hpp"

namespace splatplan {

/// Full experiment configuration. Parsed from an INI-style text file with
/// [section] headers and key = value lines; unknown keys are an error.
struct RunConfig {
  // [scene]
  std::string scene_path;
  double start_x = std::numeric_limits<double>::quiet_NaN();  // default: room center
  double start_y = std::numeric_limits<double>::quiet_NaN();
  double start_yaw = 0.0;

  // [run]
  std::uint64_t seed = 1;
  Variant variant = Variant::V5Adaptive;
  int max_cycles = 200;
  double wall_clock_budget_s = 0.0;  // 0 = unlimited
  bool dump_images = false;

  // [sensor]
  int sensor_width = 1200, sensor_height_px = 680;
  double hfov_deg = 90.0, vfov_deg = 90.0;
  double range = 5.0;
  double noise = 0.02;

  // [robot]
  double max_speed = 1.0;
  double capture_spacing = 0.8;  // meters between in-transit captures

  // [map]
  double voxel_resolution = 0.1;
  FusionConfig fusion;

  // [gain]
  int gain_width = 160, gain_height = 90;

  // [planner]
  PlannerConfig planner;

  // [metrics]
  std::size_t surface_samples = 300000;
  double tau_cm = 5.0;

  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  /// Canonical key=value dump used for the config hash; independent of the
  /// formatting of the source file.
  std::string canonical_text() const;

  CameraModel sensor_camera() const;
  CameraModel gain_camera() const;
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct RunResult {
  MetricsReport report;
  int exit_code = 0;  // 0 done, 2 budget/blocked, 1 error
};

/// Closed-loop experiment: capture -> integrate -> plan -> move, until the
/// planner reports done or a budget runs out. Writes trajectory.csv,
/// cycles.csv, map.bin, metrics.json (and images/ when enabled) under
/// `out_dir`, which is created if missing.
RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir);

/// Collect metrics.json + cycles.csv from prior run directories into one
/// CSV table (accuracy, completion, completion ratio, mean planning time,
/// path length). Missing runs produce a row marked absent.
std::string compare_variants(const std::vector<std::string>& run_dirs);

}  // namespace splatplan
