#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "splatplan/core.hpp"
#include "splatplan/gaussian.hpp"
#include "splatplan/sensor_sim.hpp"
#include "splatplan/splat_render.hpp"
#include "splatplan/voxel_world.hpp"

namespace splatplan {

struct FusionConfig {
  double spawn_alpha_threshold = 0.5;
  double spawn_depth_error = 0.05;   // meters
  int spawn_stride = 4;              // pixels
  int refine_iters = 10;
  double step_size = 5e-3;
  // Also spawn where the existing splats are much coarser than what the
  // current viewing distance supports; keeps close-up passes densifying
  // surfaces that were first seen from far away.
  bool density_respawn = true;
  double density_factor = 1.25;
  JacobianParams refine_params = JacobianParams::All8;
  double spawn_opacity = 0.9;
};

struct FusionSummary {
  std::size_t spawned = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
  CarveSummary carve;
};

/// Footprint of one strided pixel at the given depth; the radius new
/// Gaussians are spawned with.
double spawn_radius(double depth, const CameraModel& cam, int stride);

/// Online map fusion. Owns a spatial index over Gaussian centers so the
/// density respawn test stays cheap as the map grows.
class Mapper {
 public:
  Mapper(FusionConfig cfg, RenderConfig render_cfg)
      : cfg_(cfg), render_cfg_(render_cfg) {}

  const FusionConfig& config() const { return cfg_; }

  /// Spawn Gaussians where the frame is uncovered or inconsistent, run a few
  /// gradient-descent steps on the color+depth residual over the touched
  /// Gaussians, then carve the voxel grid from the frame's depth.
  FusionSummary integrate_frame(GaussianMap& map, VoxelGrid& grid,
                                const RGBDFrame& frame, const CameraModel& cam);

 private:
  double nearest_center_dist(const GaussianMap& map, const Vec3& p,
                             double cap) const;
  void index_center(const Vec3& p, std::size_t gi);

  FusionConfig cfg_;
  RenderConfig render_cfg_;
  // Hash grid over Gaussian centers, cell size = index_cell_.
  static constexpr double index_cell_ = 0.2;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> center_index_;
};

/// Map checkpoint: little-endian u32 count, then 8 f32 per Gaussian
/// (center xyz, color rgb, radius, opacity).
void save_map_checkpoint(const GaussianMap& map, const std::string& path);
GaussianMap load_map_checkpoint(const std::string& path);

}  // namespace splatplan
