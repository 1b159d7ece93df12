#include "splatplan/gain_eval.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace splatplan {

CoverageResult coverage_gain(const GaussianMap& map, const VoxelGrid& grid,
                             const Pose& pose, const CameraModel& cam,
                             const RenderConfig& cfg) {
  return coverage_gain(bind_splats(map, pose, cam, cfg), grid, pose, cam, cfg);
}

CoverageResult coverage_gain(const FrameBundle& bundle, const VoxelGrid& grid,
                             const Pose& pose, const CameraModel& cam,
                             const RenderConfig& cfg) {
  const CameraBasis basis = CameraBasis::from_pose(pose);
  const double vol = grid.voxel_volume();

  CoverageResult out;
  out.pixel_gain.assign(std::size_t(cam.width) * cam.height, 0.0);

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const std::size_t p = std::size_t(y) * cam.width + x;
      const Vec3 dir_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
      const double norm = dir_cam.norm();
      const double inv_norm = 1.0 / norm;
      const Vec3 dir = (basis.right * dir_cam.x() + basis.down * dir_cam.y() +
                        basis.forward) *
                       inv_norm;
      const auto steps =
          grid.traverse_ray(pose.position, dir, cam.far_plane * norm);
      if (steps.empty()) continue;

      const auto& contribs = bundle.pixels[p];
      std::size_t j = 0;
      double trans = 1.0;
      double v_pix = 0.0;
      for (const RayStep& step : steps) {
        const double entry_z = step.entry_depth * inv_norm;
        while (j < contribs.size() &&
               bundle.splats[contribs[j].splat].depth < entry_z) {
          trans *= (1.0 - contribs[j].alpha);
          ++j;
        }
        if (trans < cfg.transmittance_floor) break;
        if (step.state == VoxelState::Occupied) break;
        if (step.state == VoxelState::Unobserved) v_pix += vol * trans;
      }
      out.pixel_gain[p] = v_pix;
      out.total += v_pix;
    }
  }
  return out;
}

double voxel_coverage_gain(const VoxelGrid& grid, const Pose& pose,
                           const CameraModel& cam) {
  const CameraBasis basis = CameraBasis::from_pose(pose);
  const double vol = grid.voxel_volume();
  double total = 0.0;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 dir_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
      const double norm = dir_cam.norm();
      const Vec3 dir = (basis.right * dir_cam.x() + basis.down * dir_cam.y() +
                        basis.forward) /
                       norm;
      for (const RayStep& step :
           grid.traverse_ray(pose.position, dir, cam.far_plane * norm)) {
        if (step.state == VoxelState::Occupied) break;
        if (step.state == VoxelState::Unobserved) total += vol;
      }
    }
  }
  return total;
}

double quality_gain(const GaussianMap& map, const Pose& pose,
                    const CameraModel& cam, double lambda,
                    const RenderConfig& cfg, JacobianParams params) {
  return quality_gain(bind_splats(map, pose, cam, cfg), map, pose, cam, lambda,
                      cfg, params);
}

double quality_gain(const FrameBundle& bundle, const GaussianMap& map,
                    const Pose& pose, const CameraModel& cam, double lambda,
                    const RenderConfig& cfg, JacobianParams params) {
  assert(lambda > 0.0);
  const FisherDiag diag =
      render_jacobian_sq(bundle, map, pose, cam, cfg, params);
  const int visible = diag.visible_count();
  if (visible == 0) return 0.0;

  double trace = 0.0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (!diag.visible[i]) continue;
    const double* row = diag.values.data() + i * kParamsPerGaussian;
    for (int k = 0; k < kParamsPerGaussian; ++k) trace += row[k];
  }
  return trace + lambda * double(active_param_count(params)) * visible;
}

double combined_gain(double coverage, double quality, double lambda_o) {
  if (lambda_o < 0.0 || lambda_o > 1.0)
    throw std::invalid_argument("lambda_o must be in [0, 1]");
  return coverage + lambda_o * quality;
}

std::vector<BinGain> panoramic_gain(const GaussianMap& map,
                                    const VoxelGrid& grid,
                                    const Vec3& position,
                                    const CameraModel& cam, double lambda,
                                    double lambda_o, int bins,
                                    const RenderConfig& cfg,
                                    JacobianParams params) {
  std::vector<BinGain> out(bins);
  for (int k = 0; k < bins; ++k) {
    Pose pose{position, bin_center_yaw(k, bins), 0.0};
    BinGain& b = out[k];
    const FrameBundle bundle = bind_splats(map, pose, cam, cfg);
    b.coverage = coverage_gain(bundle, grid, pose, cam, cfg).total;
    b.quality = quality_gain(bundle, map, pose, cam, lambda, cfg, params);
    b.combined = combined_gain(b.coverage, b.quality, lambda_o);
  }
  return out;
}

YawChoice best_yaw(const std::vector<double>& bins, double fov) {
  const int n = int(bins.size());
  assert(n > 0 && fov > 0.0 && fov <= 2.0 * M_PI + 1e-12);
  const double bin_width = 2.0 * M_PI / n;
  const int w = std::min(n, std::max(1, int(std::ceil(fov / bin_width - 1e-9))));

  YawChoice best;
  double best_sum = -1.0;
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int i = 0; i < w; ++i) sum += bins[(s + i) % n];
    if (sum > best_sum) {
      best_sum = sum;
      best.yaw = wrap_angle(bin_width * (s + 0.5 * (w - 1)));
      best.window_gain = sum;
    }
  }
  return best;
}

}  // namespace splatplan
