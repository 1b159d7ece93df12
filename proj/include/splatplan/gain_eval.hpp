#pragma once

#include <vector>

#include "splatplan/core.hpp"
#include "splatplan/gaussian.hpp"
#include "splatplan/splat_render.hpp"
#include "splatplan/voxel_world.hpp"

namespace splatplan {

/// Per-candidate-viewpoint gain summary.
struct GainRecord {
  Pose viewpoint;
  double coverage = 0.0;   // G(C)
  double quality = 0.0;    // G(Q)
  double lambda_o = 0.0;   // observed fraction of the local region
  double combined = 0.0;   // G = G(C) + lambda_o * G(Q)
  std::vector<double> bin_gains;
  double chosen_yaw = 0.0;
};

struct CoverageResult {
  double total = 0.0;              // sum of V_pix
  std::vector<double> pixel_gain;  // H*W map of V_pix
};

/// Pixel-level coverage gain: unobserved voxel volume along each pixel ray,
/// weighted by the transmittance of the splats in front of it. Rays stop at
/// the first Occupied voxel or when transmittance drops below the floor.
CoverageResult coverage_gain(const GaussianMap& map, const VoxelGrid& grid,
                             const Pose& pose, const CameraModel& cam,
                             const RenderConfig& cfg = {});

/// Same, reusing an already-bound frame bundle for `pose`.
CoverageResult coverage_gain(const FrameBundle& bundle, const VoxelGrid& grid,
                             const Pose& pose, const CameraModel& cam,
                             const RenderConfig& cfg = {});

/// TARE-style baseline gain: unobserved voxel volume visible by pure voxel
/// ray casting, ignoring the Gaussian map entirely.
double voxel_coverage_gain(const VoxelGrid& grid, const Pose& pose,
                           const CameraModel& cam);

/// Trace of the regularized diagonal Fisher approximation restricted to the
/// parameters of Gaussians visible from `pose`. Zero when nothing is visible.
double quality_gain(const GaussianMap& map, const Pose& pose,
                    const CameraModel& cam, double lambda,
                    const RenderConfig& cfg = {},
                    JacobianParams params = JacobianParams::All8);

/// Same, reusing an already-bound frame bundle for `pose`.
double quality_gain(const FrameBundle& bundle, const GaussianMap& map,
                    const Pose& pose, const CameraModel& cam, double lambda,
                    const RenderConfig& cfg = {},
                    JacobianParams params = JacobianParams::All8);

/// G = G(C) + lambda_o * G(Q). Throws when lambda_o is outside [0, 1].
double combined_gain(double coverage, double quality, double lambda_o);

struct BinGain {
  double coverage = 0.0;
  double quality = 0.0;
  double combined = 0.0;
};

/// Evaluate B views at yaws 2*pi*k/B around `position`, returning the raw
/// coverage and quality gain of each bin plus their combination.
std::vector<BinGain> panoramic_gain(const GaussianMap& map,
                                    const VoxelGrid& grid,
                                    const Vec3& position,
                                    const CameraModel& cam, double lambda,
                                    double lambda_o, int bins = 12,
                                    const RenderConfig& cfg = {},
                                    JacobianParams params = JacobianParams::All8);

/// Center yaw of bin k out of B.
inline double bin_center_yaw(int k, int bins) {
  return wrap_angle(2.0 * M_PI * k / bins);
}

/// Sliding-window yaw selection over circular bin gains. The window is
/// ceil(fov / bin_width) bins wide; ties keep the first window in scan
/// order (starting at bin 0).
struct YawChoice {
  double yaw = 0.0;
  double window_gain = 0.0;
};
YawChoice best_yaw(const std::vector<double>& bins, double fov);

}  // namespace splatplan
