#pragma once

#include <optional>
#include <span>
#include <vector>

#include "splatplan/core.hpp"
#include "splatplan/gaussian.hpp"

namespace splatplan {

/// A Gaussian projected into screen space. Behind-camera and out-of-frame
/// splats are culled before a Splat2D is ever created, so depth > near.
struct Splat2D {
  double px = 0.0, py = 0.0;     // pixel center
  double screen_radius = 0.0;    // pixels
  double depth = 0.0;            // z-depth of the center, meters
  int source_index = -1;         // index into the GaussianMap
};

struct RenderConfig {
  Vec3 background = Vec3(0.5, 0.5, 0.5);
  double transmittance_floor = 1e-4;  // per-pixel early-out
  double alpha_floor = 0.5;           // below this, depth reports the sentinel
  double cutoff_sigmas = 3.0;         // footprint influence radius in sigmas
};

/// Which parameters participate in Jacobian accumulation.
enum class JacobianParams { All8, ColorOpacity };

inline int active_param_count(JacobianParams p) {
  return p == JacobianParams::All8 ? 8 : 4;
}

struct RenderedFrame {
  int width = 0, height = 0;
  std::vector<Vec3> color;     // H*W, row-major
  std::vector<double> depth;   // H*W
  std::vector<double> alpha;   // H*W

  std::size_t index(int x, int y) const {
    return std::size_t(y) * width + x;
  }
};

/// One splat's contribution to one pixel, stored front-to-back.
struct PixelContrib {
  int splat;    // index into FrameBundle::splats
  double alpha; // footprint alpha at this pixel
  double gexp;  // exp term only (alpha / opacity), kept for d/d(opacity)
};

/// Retained compositing structure: depth-sorted culled splats plus the
/// per-pixel front-to-back contribution lists. Everything downstream
/// (compositing, Jacobians, coverage interleaving) reads from this.
struct FrameBundle {
  int width = 0, height = 0;
  std::vector<Splat2D> splats;          // depth-sorted
  std::vector<Vec3> splat_colors;       // aligned with splats
  std::vector<char> visible;            // per map Gaussian, 1 if not culled
  std::vector<std::vector<PixelContrib>> pixels;

  int visible_count() const {
    int n = 0;
    for (char v : visible) n += v;
    return n;
  }
};

/// Eq.-style opacity of a 3D point under a single Gaussian.
double opacity_at(const Gaussian& g, const Vec3& point);

/// Pinhole projection of one Gaussian; nullopt when culled.
std::optional<Splat2D> project(const Gaussian& g, const Pose& pose,
                               const CameraModel& cam);

/// Project, depth-sort (ties by insertion index) and bin all splats.
FrameBundle bind_splats(const GaussianMap& map, const Pose& pose,
                        const CameraModel& cam, const RenderConfig& cfg = {});

/// Front-to-back alpha compositing of color/depth/alpha from a bundle.
RenderedFrame composite(const FrameBundle& bundle, const CameraModel& cam,
                        const RenderConfig& cfg = {});

RenderedFrame render(const GaussianMap& map, const Pose& pose,
                     const CameraModel& cam, const RenderConfig& cfg = {});

/// Diagonal Fisher accumulator, aligned with the map's 8-scalars-per-Gaussian
/// parameter layout. Entries are sums of squares, so nonnegative before the
/// regularizer is applied.
struct FisherDiag {
  std::vector<double> values;  // 8 * map size
  std::vector<char> visible;   // per Gaussian
  double lambda = 0.0;

  int visible_count() const {
    int n = 0;
    for (char v : visible) n += v;
    return n;
  }
};

/// diag(J^T J) of the rendered color image w.r.t. all Gaussian parameters,
/// unregularized. Fully culled Gaussians accumulate exactly zero.
FisherDiag render_jacobian_sq(const GaussianMap& map, const Pose& pose,
                              const CameraModel& cam,
                              const RenderConfig& cfg = {},
                              JacobianParams params = JacobianParams::All8);

/// Same, reusing an already-bound frame bundle for `pose`.
FisherDiag render_jacobian_sq(const FrameBundle& bundle, const GaussianMap& map,
                              const Pose& pose, const CameraModel& cam,
                              const RenderConfig& cfg = {},
                              JacobianParams params = JacobianParams::All8);

/// Backprop of a scalar loss through the render: given dL/dColor per pixel
/// and dL/dDepth per pixel (zero where depth is invalid), accumulates
/// dL/dw into `grad` (size 8 * map size). Used by the mapper's refinement.
void accumulate_render_gradient(const FrameBundle& bundle,
                                const GaussianMap& map, const Pose& pose,
                                const CameraModel& cam,
                                const RenderConfig& cfg,
                                std::span<const Vec3> dL_dcolor,
                                std::span<const double> dL_ddepth,
                                std::span<double> grad,
                                JacobianParams params = JacobianParams::All8);

}  // namespace splatplan
