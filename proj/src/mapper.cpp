#include "splatplan/mapper.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace splatplan {

double spawn_radius(double depth, const CameraModel& cam, int stride) {
  assert(depth > 0.0 && stride >= 1);
  return depth * stride / cam.fx;
}

namespace {

std::uint64_t cell_key(const Vec3& p, double cell) {
  const std::int64_t x = std::int64_t(std::floor(p.x() / cell)) + (1 << 20);
  const std::int64_t y = std::int64_t(std::floor(p.y() / cell)) + (1 << 20);
  const std::int64_t z = std::int64_t(std::floor(p.z() / cell)) + (1 << 20);
  return (std::uint64_t(x) << 42) | (std::uint64_t(y) << 21) | std::uint64_t(z);
}

}  // namespace

void Mapper::index_center(const Vec3& p, std::size_t gi) {
  center_index_[cell_key(p, index_cell_)].push_back(std::uint32_t(gi));
}

double Mapper::nearest_center_dist(const GaussianMap& map, const Vec3& p,
                                   double cap) const {
  double best = std::numeric_limits<double>::infinity();
  const int r = int(std::ceil(cap / index_cell_));
  const Eigen::Vector3i base(int(std::floor(p.x() / index_cell_)),
                             int(std::floor(p.y() / index_cell_)),
                             int(std::floor(p.z() / index_cell_)));
  for (int dz = -r; dz <= r; ++dz)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx) {
        const Vec3 probe((base.x() + dx + 0.5) * index_cell_,
                         (base.y() + dy + 0.5) * index_cell_,
                         (base.z() + dz + 0.5) * index_cell_);
        const auto it = center_index_.find(cell_key(probe, index_cell_));
        if (it == center_index_.end()) continue;
        for (std::uint32_t gi : it->second)
          best = std::min(best, (map[gi].center - p).norm());
      }
  return best;
}

FusionSummary Mapper::integrate_frame(GaussianMap& map, VoxelGrid& grid,
                                      const RGBDFrame& frame,
                                      const CameraModel& cam) {
  FusionSummary sum;
  const Pose& pose = frame.pose;
  const CameraBasis basis = CameraBasis::from_pose(pose);
  const RenderedFrame rendered = render(map, pose, cam, render_cfg_);

  // Spawn pass over strided pixels.
  for (int y = 0; y < cam.height; y += cfg_.spawn_stride) {
    for (int x = 0; x < cam.width; x += cfg_.spawn_stride) {
      const std::size_t p = std::size_t(y) * cam.width + x;
      const double z = frame.depth[p];
      if (!std::isfinite(z) || z <= 0.0 || z > cam.far_plane) continue;

      const Vec3 point = pose.position +
                         z * (basis.right * ((x + 0.5 - cam.cx) / cam.fx) +
                              basis.down * ((y + 0.5 - cam.cy) / cam.fy) +
                              basis.forward);
      const double radius = spawn_radius(z, cam, cfg_.spawn_stride);

      bool uncovered = rendered.alpha[p] < cfg_.spawn_alpha_threshold;
      bool inconsistent =
          std::abs(rendered.depth[p] - z) > cfg_.spawn_depth_error;
      if (uncovered || inconsistent) {
        // Separation guard: threshold-triggered spawns are suppressed when a
        // center already sits inside the new splat's own footprint. Without
        // it, oblique surfaces (whose blended depth never matches the
        // sensor) accumulate splats without bound.
        const double guard =
            (inconsistent && !uncovered ? 1.0 : 0.5) * radius;
        if (nearest_center_dist(map, point, guard) <= guard) {
          uncovered = false;
          inconsistent = false;
        }
      }
      bool coarse = false;
      if (!uncovered && !inconsistent && cfg_.density_respawn) {
        const double cap = cfg_.density_factor * radius;
        coarse = nearest_center_dist(map, point, cap) > cap;
      }
      if (!(uncovered || inconsistent || coarse)) continue;

      Gaussian g;
      g.center = point;
      g.color = frame.color[p];
      g.radius = radius;
      g.opacity = cfg_.spawn_opacity;
      map.add(g);
      index_center(point, map.size() - 1);
      ++sum.spawned;
    }
  }

  // Refinement: plain gradient descent on the summed squared color+depth
  // residual over the Gaussians visible in this frame.
  const std::size_t npix = std::size_t(cam.width) * cam.height;
  std::vector<Vec3> d_color(npix);
  std::vector<double> d_depth(npix);
  std::vector<double> grad(map.size() * kParamsPerGaussian);

  auto frame_loss = [&](const RenderedFrame& r, bool fill_grads) {
    double loss = 0.0;
    for (std::size_t p = 0; p < npix; ++p) {
      if (fill_grads) {
        d_color[p] = Vec3::Zero();
        d_depth[p] = 0.0;
      }
      const double z_obs = frame.depth[p];
      if (!std::isfinite(z_obs) || z_obs > cam.far_plane) continue;
      const Vec3 dc = r.color[p] - frame.color[p];
      loss += dc.squaredNorm();
      if (fill_grads) d_color[p] = 2.0 * dc;
      if (r.depth[p] <= cam.far_plane) {
        const double dd = r.depth[p] - z_obs;
        loss += dd * dd;
        if (fill_grads) d_depth[p] = 2.0 * dd;
      }
    }
    return loss;
  };

  for (int it = 0; it <= cfg_.refine_iters; ++it) {
    const FrameBundle bundle = bind_splats(map, pose, cam, render_cfg_);
    const RenderedFrame r = composite(bundle, cam, render_cfg_);
    const bool last = it == cfg_.refine_iters;
    const double loss = frame_loss(r, !last);
    if (it == 0) sum.loss_before = loss;
    sum.loss_after = loss;
    if (last || cfg_.refine_iters == 0) break;

    std::fill(grad.begin(), grad.end(), 0.0);
    accumulate_render_gradient(bundle, map, pose, cam, render_cfg_, d_color,
                               d_depth, grad, cfg_.refine_params);
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (!bundle.visible[i]) continue;
      const double* g = grad.data() + i * kParamsPerGaussian;
      Gaussian& gs = map.mutate(i);
      const Vec3 old_center = gs.center;
      if (cfg_.refine_params == JacobianParams::All8) {
        gs.center -= cfg_.step_size * Vec3(g[0], g[1], g[2]);
        gs.radius -= cfg_.step_size * g[6];
      }
      gs.color -= cfg_.step_size * Vec3(g[3], g[4], g[5]);
      gs.opacity -= cfg_.step_size * g[7];
      gs.clamp();
      if (cell_key(gs.center, index_cell_) != cell_key(old_center, index_cell_))
        index_center(gs.center, i);
    }
  }

  sum.carve = carve_from_depth(grid, pose, cam, frame.depth);
  return sum;
}

void save_map_checkpoint(const GaussianMap& map, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  const std::uint32_t count = std::uint32_t(map.size());
  f.write(reinterpret_cast<const char*>(&count), 4);
  for (const Gaussian& g : map.gaussians()) {
    const float rec[8] = {float(g.center.x()), float(g.center.y()),
                          float(g.center.z()), float(g.color.x()),
                          float(g.color.y()),  float(g.color.z()),
                          float(g.radius),     float(g.opacity)};
    f.write(reinterpret_cast<const char*>(rec), sizeof(rec));
  }
}

GaussianMap load_map_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::uint32_t count = 0;
  f.read(reinterpret_cast<char*>(&count), 4);
  GaussianMap map;
  for (std::uint32_t i = 0; i < count; ++i) {
    float rec[8];
    f.read(reinterpret_cast<char*>(rec), sizeof(rec));
    if (!f) throw std::runtime_error("truncated map checkpoint");
    Gaussian g;
    g.center = Vec3(rec[0], rec[1], rec[2]);
    g.color = Vec3(rec[3], rec[4], rec[5]);
    g.radius = rec[6];
    g.opacity = rec[7];
    map.add(g);
  }
  return map;
}

}  // namespace splatplan
