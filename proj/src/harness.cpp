#include "splatplan/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "splatplan/image_io.hpp"

namespace splatplan {

namespace fs = std::filesystem;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::V1Tare: return "V1";
    case Variant::V2Coverage: return "V2";
    case Variant::V3Quality: return "V3";
    case Variant::V4Both: return "V4";
    case Variant::V5Adaptive: return "V5";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "V1" || s == "v1" || s == "V1-tare") return Variant::V1Tare;
  if (s == "V2" || s == "v2" || s == "V2-coverage") return Variant::V2Coverage;
  if (s == "V3" || s == "v3" || s == "V3-quality") return Variant::V3Quality;
  if (s == "V4" || s == "v4" || s == "V4-both") return Variant::V4Both;
  if (s == "V5" || s == "v5" || s == "V5-adaptive") return Variant::V5Adaptive;
  throw std::runtime_error("unknown variant: " + s);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_f(const std::string& v) { return std::stod(v); }
int to_i(const std::string& v) { return std::stoi(v); }
bool to_b(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::runtime_error("expected boolean, got: " + v);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    if (key == "scene.path") cfg.scene_path = val;
    else if (key == "scene.start_x") cfg.start_x = to_f(val);
    else if (key == "scene.start_y") cfg.start_y = to_f(val);
    else if (key == "scene.start_yaw") cfg.start_yaw = to_f(val);
    else if (key == "run.seed") cfg.seed = std::stoull(val);
    else if (key == "run.variant") cfg.variant = parse_variant(val);
    else if (key == "run.max_cycles") cfg.max_cycles = to_i(val);
    else if (key == "run.wall_clock_budget_s") cfg.wall_clock_budget_s = to_f(val);
    else if (key == "run.dump_images") cfg.dump_images = to_b(val);
    else if (key == "sensor.width") cfg.sensor_width = to_i(val);
    else if (key == "sensor.height") cfg.sensor_height_px = to_i(val);
    else if (key == "sensor.hfov_deg") cfg.hfov_deg = to_f(val);
    else if (key == "sensor.vfov_deg") cfg.vfov_deg = to_f(val);
    else if (key == "sensor.range") cfg.range = to_f(val);
    else if (key == "sensor.noise") cfg.noise = to_f(val);
    else if (key == "robot.max_speed") cfg.max_speed = to_f(val);
    else if (key == "robot.capture_spacing") cfg.capture_spacing = to_f(val);
    else if (key == "map.voxel_resolution") cfg.voxel_resolution = to_f(val);
    else if (key == "map.spawn_stride") cfg.fusion.spawn_stride = to_i(val);
    else if (key == "map.refine_iters") cfg.fusion.refine_iters = to_i(val);
    else if (key == "map.step_size") cfg.fusion.step_size = to_f(val);
    else if (key == "map.spawn_alpha_threshold") cfg.fusion.spawn_alpha_threshold = to_f(val);
    else if (key == "map.spawn_depth_error") cfg.fusion.spawn_depth_error = to_f(val);
    else if (key == "map.density_respawn") cfg.fusion.density_respawn = to_b(val);
    else if (key == "map.density_factor") cfg.fusion.density_factor = to_f(val);
    else if (key == "map.refine_color_only")
      cfg.fusion.refine_params = to_b(val) ? JacobianParams::ColorOpacity
                                           : JacobianParams::All8;
    else if (key == "gain.width") cfg.gain_width = to_i(val);
    else if (key == "gain.height") cfg.gain_height = to_i(val);
    else if (key == "planner.horizon") cfg.planner.horizon_xy = to_f(val);
    else if (key == "planner.min_view_spacing") cfg.planner.min_view_spacing = to_f(val);
    else if (key == "planner.max_candidates") cfg.planner.max_candidates = to_i(val);
    else if (key == "planner.yaw_bins") cfg.planner.yaw_bins = to_i(val);
    else if (key == "planner.lambda") cfg.planner.lambda = to_f(val);
    else if (key == "planner.g_thres_rel") cfg.planner.g_thres_rel = to_f(val);
    else if (key == "planner.normalize_gains") cfg.planner.normalize_gains = to_b(val);
    else if (key == "planner.connect_radius") cfg.planner.connect_radius = to_f(val);
    else if (key == "planner.inflation_radius") cfg.planner.inflation_radius = to_f(val);
    else if (key == "planner.roadmap_samples") cfg.planner.roadmap_samples = to_i(val);
    else if (key == "planner.suppression_radius") cfg.planner.suppression_radius = to_f(val);
    else if (key == "planner.gain_color_only")
      cfg.planner.gain_params = to_b(val) ? JacobianParams::ColorOpacity
                                          : JacobianParams::All8;
    else if (key == "metrics.surface_samples") cfg.surface_samples = std::stoull(val);
    else if (key == "metrics.tau_cm") cfg.tau_cm = to_f(val);
    else
      throw std::runtime_error("config line " + std::to_string(lineno) +
                               ": unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  RunConfig cfg = parse(ss.str());
  // Resolve the scene path relative to the config file.
  if (!cfg.scene_path.empty() && cfg.scene_path.front() != '/') {
    cfg.scene_path =
        (fs::path(path).parent_path() / cfg.scene_path).string();
  }
  return cfg;
}

std::string RunConfig::canonical_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "scene=" << fs::path(scene_path).filename().string()
     << ";start=" << start_x << "," << start_y << "," << start_yaw
     << ";seed=" << seed << ";variant=" << variant_name(variant)
     << ";max_cycles=" << max_cycles
     << ";sensor=" << sensor_width << "x" << sensor_height_px << ","
     << hfov_deg << "," << vfov_deg << "," << range << "," << noise
     << ";robot=" << max_speed << "," << capture_spacing
     << ";voxel=" << voxel_resolution
     << ";fusion=" << fusion.spawn_stride << "," << fusion.refine_iters << ","
     << fusion.step_size << "," << fusion.spawn_alpha_threshold << ","
     << fusion.spawn_depth_error << "," << fusion.density_respawn << ","
     << fusion.density_factor << ","
     << (fusion.refine_params == JacobianParams::ColorOpacity)
     << ";gain=" << gain_width << "x" << gain_height
     << ";planner=" << planner.horizon_xy << "," << planner.min_view_spacing
     << "," << planner.max_candidates << "," << planner.yaw_bins << ","
     << planner.lambda << "," << planner.g_thres_rel << ","
     << planner.normalize_gains << "," << planner.connect_radius << ","
     << planner.inflation_radius << "," << planner.roadmap_samples << ","
     << planner.suppression_radius << ","
     << (planner.gain_params == JacobianParams::ColorOpacity)
     << ";metrics=" << surface_samples << "," << tau_cm;
  return os.str();
}

CameraModel RunConfig::sensor_camera() const {
  CameraModel cam;
  cam.width = sensor_width;
  cam.height = sensor_height_px;
  cam.cx = 0.5 * sensor_width;
  cam.cy = 0.5 * sensor_height_px;
  cam.fx = 0.5 * sensor_width / std::tan(0.5 * hfov_deg * M_PI / 180.0);
  cam.fy = 0.5 * sensor_height_px / std::tan(0.5 * vfov_deg * M_PI / 180.0);
  cam.near_plane = 0.05;
  cam.far_plane = range;
  return cam;
}

CameraModel RunConfig::gain_camera() const {
  CameraModel cam;
  cam.width = gain_width;
  cam.height = gain_height;
  cam.cx = 0.5 * gain_width;
  cam.cy = 0.5 * gain_height;
  cam.fx = 0.5 * gain_width / std::tan(0.5 * hfov_deg * M_PI / 180.0);
  cam.fy = 0.5 * gain_height / std::tan(0.5 * vfov_deg * M_PI / 180.0);
  cam.near_plane = 0.05;
  cam.far_plane = range;
  return cam;
}

namespace {

struct TrajectoryLog {
  std::ofstream os;
  int captures = 0;
  void open(const std::string& path) {
    os.open(path, std::ios::trunc);
    os << "capture,cycle,x,y,z,yaw\n";
  }
  void log(int cycle, const Pose& p) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d,%d,%.9f,%.9f,%.9f,%.9f\n", captures,
                  cycle, p.position.x(), p.position.y(), p.position.z(),
                  p.yaw);
    os << buf << std::flush;
    ++captures;
  }
};

}  // namespace

RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir) {
  RunResult result;
  MetricsReport& report = result.report;

  if (cfg.scene_path.empty())
    throw std::runtime_error("config: [scene] path is required");
  const Scene scene = Scene::load(cfg.scene_path);
  const CameraModel sensor_cam = cfg.sensor_camera();
  const CameraModel gain_cam = cfg.gain_camera();

  VoxelGrid grid = VoxelGrid::covering(scene.room.bounds, cfg.voxel_resolution);
  const double room_height = scene.room.bounds.hi.z() - scene.room.bounds.lo.z();
  SubspacePartition partition(grid, Vec3(2.0, 2.0, room_height));

  Pose pose;
  pose.position =
      Vec3(std::isnan(cfg.start_x) ? scene.room.bounds.center().x() : cfg.start_x,
           std::isnan(cfg.start_y) ? scene.room.bounds.center().y() : cfg.start_y,
           scene.sensor_height);
  pose.yaw = wrap_angle(cfg.start_yaw);
  if (!scene.inside_room(pose.position) || scene.inside_solid(pose.position))
    throw std::runtime_error("start pose is not in free space");

  GaussianMap map;
  Mapper mapper(cfg.fusion, RenderConfig{});
  Planner planner(cfg.planner, cfg.variant, gain_cam, scene.sensor_height,
                  cfg.seed ^ 0x9E3779B97F4A7C15ull);

  fs::create_directories(out_dir);
  if (cfg.dump_images) fs::create_directories(out_dir + "/images");
  TrajectoryLog traj_log;
  traj_log.open(out_dir + "/trajectory.csv");
  std::ofstream cycles_csv(out_dir + "/cycles.csv", std::ios::trunc);
  cycles_csv << "cycle,t_ve_s,t_lp_s,t_gp_s,t_p_s,selected_views,"
                "reconstructing,max_gain,gaussians,done,candidates\n";

  std::vector<Vec3> trajectory{pose.position};
  double path_len = 0.0;
  int capture_counter = 0;

  const auto do_capture = [&](int cycle) {
    const std::uint64_t cap_seed =
        cfg.seed + 0x9E3779B97F4A7C15ull * std::uint64_t(capture_counter + 1);
    const RGBDFrame frame =
        capture(scene, pose, sensor_cam, cfg.noise, cap_seed);
    mapper.integrate_frame(map, grid, frame, sensor_cam);
    planner.note_capture(pose.position, pose.yaw);
    traj_log.log(cycle, pose);
    ++capture_counter;
    if (cfg.dump_images && cycle >= 0) {
      char name[64];
      std::snprintf(name, sizeof name, "/images/cycle_%04d", cycle);
      write_ppm(out_dir + name + "_color.ppm", frame.width, frame.height,
                frame.color);
      write_depth_pgm(out_dir + name + "_depth.pgm", frame.width, frame.height,
                      frame.depth);
    }
  };

  // Move along a polyline to `stop_index`, capturing every capture_spacing
  // meters with the travel heading; arrive facing `final_yaw`.
  const auto move_along = [&](const std::vector<Vec3>& path, int stop_index,
                              double final_yaw, int cycle) {
    double since_capture = 0.0;
    for (int i = 1; i <= stop_index; ++i) {
      const Vec3 a = path[std::size_t(i) - 1], b = path[std::size_t(i)];
      const Vec3 d = b - a;
      const double seg = d.norm();
      if (seg < 1e-12) continue;
      const double heading = std::atan2(d.y(), d.x());
      double t = 0.0;
      while (since_capture + (seg - t) >= cfg.capture_spacing) {
        t += cfg.capture_spacing - since_capture;
        since_capture = 0.0;
        pose.position = a + (t / seg) * d;
        pose.yaw = heading;
        trajectory.push_back(pose.position);
        do_capture(cycle);
      }
      since_capture += seg - t;
      path_len += seg;
      pose.position = b;
      pose.yaw = heading;
      if ((trajectory.back() - b).norm() > 1e-12) trajectory.push_back(b);
    }
    pose.yaw = wrap_angle(final_yaw);
  };

  const auto t_start = std::chrono::steady_clock::now();
  int cycle = 0;
  bool done = false, blocked = false;
  for (; cycle < cfg.max_cycles; ++cycle) {
    do_capture(cycle);
    PlanCycleResult res =
        planner.plan_cycle(map, grid, partition, pose, trajectory);

    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "%d,%.6f,%.6f,%.6f,%.6f,%zu,%d,%.9g,%zu,%d,%d\n", cycle,
                  res.t_ve, res.t_lp, res.t_gp, res.t_ve + res.t_lp + res.t_gp,
                  res.selected_views.size(), res.reconstructing_subspaces,
                  res.max_gain, map.size(), res.done ? 1 : 0,
                  res.candidate_count);
    cycles_csv << buf << std::flush;

    if (res.done) {
      done = true;
      break;
    }
    if (res.incomplete || res.merged_path.size() <= 1) {
      blocked = true;
      break;
    }
    if (!res.selected_views.empty() && res.next_view_index > 0) {
      move_along(res.merged_path, res.next_view_index,
                 res.selected_views.front().yaw, cycle);
    } else {
      // No local views survived: make bounded progress toward the global
      // tour so the horizon shifts.
      double remaining = 3.0;
      int stop = 1;
      for (; stop < int(res.merged_path.size()); ++stop) {
        remaining -= (res.merged_path[std::size_t(stop)] -
                      res.merged_path[std::size_t(stop) - 1])
                         .norm();
        if (remaining <= 0.0) break;
      }
      stop = std::min(stop, int(res.merged_path.size()) - 1);
      const Vec3 d = res.merged_path[std::size_t(stop)] -
                     res.merged_path[std::size_t(stop) - 1];
      move_along(res.merged_path, stop,
                 d.norm() > 1e-12 ? std::atan2(d.y(), d.x()) : pose.yaw, cycle);
    }

    if (cfg.wall_clock_budget_s > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
                .count() > cfg.wall_clock_budget_s) {
      ++cycle;
      break;
    }
  }

  report.scene = fs::path(cfg.scene_path).filename().string();
  report.variant = variant_name(cfg.variant);
  report.seed = cfg.seed;
  report.config_hash = hash_hex(cfg.canonical_text());
  report.done = done;
  report.incomplete = blocked;
  report.cycles = done || blocked ? cycle + 1 : cycle;
  report.captures = capture_counter;
  report.gaussian_count = map.size();
  report.path_length_m = trajectory.size() > 1 ? path_length(trajectory) : 0.0;
  report.simulated_time_s = report.path_length_m / cfg.max_speed;
  report.tau_cm = cfg.tau_cm;
  if (map.size() > 0) {
    report.accuracy_cm = accuracy_cm(map, scene);
    std::vector<Vec3> samples;
    samples.reserve(cfg.surface_samples);
    for (const SurfaceSample& s :
         sample_surface_points(scene, cfg.surface_samples, cfg.seed))
      samples.push_back(s.point);
    report.completion_cm = completion_cm(samples, map);
    report.completion_ratio = completion_ratio(samples, map, cfg.tau_cm);
  }

  save_map_checkpoint(map, out_dir + "/map.bin");
  std::ofstream(out_dir + "/metrics.json", std::ios::trunc) << report.to_json();

  result.exit_code = done ? 0 : 2;
  return result;
}

std::string compare_variants(const std::vector<std::string>& run_dirs) {
  std::ostringstream os;
  os << "run,scene,variant,accuracy_cm,completion_cm,completion_ratio,"
        "mean_tp_s,path_length_m\n";
  for (const std::string& dir : run_dirs) {
    std::ifstream mj(dir + "/metrics.json");
    if (!mj) {
      os << dir << ",absent,,,,,,\n";
      continue;
    }
    nlohmann::json j;
    mj >> j;

    double mean_tp = 0.0;
    int rows = 0;
    std::ifstream cc(dir + "/cycles.csv");
    std::string line;
    std::getline(cc, line);  // header
    while (std::getline(cc, line)) {
      std::istringstream ls(line);
      std::string field;
      for (int k = 0; k < 5 && std::getline(ls, field, ','); ++k) {
        if (k == 4) {
          mean_tp += std::stod(field);
          ++rows;
        }
      }
    }
    if (rows > 0) mean_tp /= rows;

    const auto num = [&](const char* key) -> std::string {
      if (!j.contains(key) || j[key].is_null()) return "nan";
      std::ostringstream v;
      v.precision(9);
      v << j[key].get<double>();
      return v.str();
    };
    os << dir << ',' << j.value("scene", std::string("?")) << ','
       << j.value("variant", std::string("?")) << ',' << num("accuracy_cm")
       << ',' << num("completion_cm") << ',' << num("completion_ratio") << ','
       << mean_tp << ',' << num("path_length_m") << "\n";
  }
  return os.str();
}

}  // namespace splatplan
