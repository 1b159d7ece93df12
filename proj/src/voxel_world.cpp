#include "splatplan/voxel_world.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace splatplan {

VoxelGrid::VoxelGrid(const Vec3& origin, double resolution,
                     const Eigen::Vector3i& dims)
    : origin_(origin), resolution_(resolution), dims_(dims) {
  assert(resolution > 0.0 && (dims.array() > 0).all());
  states_.assign(std::size_t(dims.x()) * dims.y() * dims.z(),
                 VoxelState::Unobserved);
}

VoxelGrid VoxelGrid::covering(const AABB& bounds, double resolution) {
  const Vec3 ext = bounds.extent();
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a)
    dims[a] = std::max(1, int(std::ceil(ext[a] / resolution - 1e-9)));
  return VoxelGrid(bounds.lo, resolution, dims);
}

bool VoxelGrid::contains(const Vec3& p) const {
  const Vec3 rel = p - origin_;
  for (int a = 0; a < 3; ++a)
    if (rel[a] < 0.0 || rel[a] > dims_[a] * resolution_) return false;
  return true;
}

std::optional<std::size_t> VoxelGrid::index_of(const Vec3& p) const {
  if (!contains(p)) return std::nullopt;
  Eigen::Vector3i c;
  for (int a = 0; a < 3; ++a) {
    c[a] = int(std::floor((p[a] - origin_[a]) / resolution_));
    c[a] = std::clamp(c[a], 0, dims_[a] - 1);
  }
  return flat(c.x(), c.y(), c.z());
}

Eigen::Vector3i VoxelGrid::coords(std::size_t i) const {
  const int x = int(i % dims_.x());
  const int y = int((i / dims_.x()) % dims_.y());
  const int z = int(i / (std::size_t(dims_.x()) * dims_.y()));
  return {x, y, z};
}

Vec3 VoxelGrid::voxel_center(std::size_t i) const {
  const Eigen::Vector3i c = coords(i);
  return origin_ + resolution_ * (c.cast<double>() + Vec3::Constant(0.5));
}

VoxelState VoxelGrid::state_at(const Vec3& p) const {
  const auto i = index_of(p);
  return i ? states_[*i] : VoxelState::Unobserved;
}

std::size_t VoxelGrid::count(VoxelState s) const {
  return std::size_t(std::count(states_.begin(), states_.end(), s));
}

std::vector<RayStep> VoxelGrid::traverse_ray(const Vec3& origin,
                                             const Vec3& direction,
                                             double max_range) const {
  std::vector<RayStep> steps;
  if (max_range <= 0.0 || !contains(origin)) return steps;

  Eigen::Vector3i idx;
  Eigen::Vector3i step;
  Vec3 t_max, t_delta;
  const double inf = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    idx[a] = std::clamp(int(std::floor((origin[a] - origin_[a]) / resolution_)),
                        0, dims_[a] - 1);
    if (direction[a] > 0.0) {
      step[a] = 1;
      const double next = origin_[a] + (idx[a] + 1) * resolution_;
      t_max[a] = (next - origin[a]) / direction[a];
      t_delta[a] = resolution_ / direction[a];
    } else if (direction[a] < 0.0) {
      step[a] = -1;
      const double next = origin_[a] + idx[a] * resolution_;
      t_max[a] = (next - origin[a]) / direction[a];
      t_delta[a] = -resolution_ / direction[a];
    } else {
      step[a] = 0;
      t_max[a] = inf;
      t_delta[a] = inf;
    }
  }

  double entry = 0.0;
  while (entry < max_range) {
    const std::size_t f = flat(idx.x(), idx.y(), idx.z());
    steps.push_back({f, states_[f], entry});
    int axis = 0;
    if (t_max.y() < t_max[axis]) axis = 1;
    if (t_max.z() < t_max[axis]) axis = 2;
    entry = t_max[axis];
    idx[axis] += step[axis];
    if (idx[axis] < 0 || idx[axis] >= dims_[axis]) break;
    t_max[axis] += t_delta[axis];
  }
  return steps;
}

void VoxelGrid::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  const std::uint32_t magic = 0x31444756;  // "VGD1"
  f.write(reinterpret_cast<const char*>(&magic), 4);
  for (int a = 0; a < 3; ++a) {
    const std::uint32_t d = std::uint32_t(dims_[a]);
    f.write(reinterpret_cast<const char*>(&d), 4);
  }
  for (int a = 0; a < 3; ++a) {
    const float o = float(origin_[a]);
    f.write(reinterpret_cast<const char*>(&o), 4);
  }
  const float res = float(resolution_);
  f.write(reinterpret_cast<const char*>(&res), 4);
  f.write(reinterpret_cast<const char*>(states_.data()),
          std::streamsize(states_.size()));
}

VoxelGrid VoxelGrid::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::uint32_t magic = 0;
  f.read(reinterpret_cast<char*>(&magic), 4);
  if (magic != 0x31444756) throw std::runtime_error("bad grid file magic");
  Eigen::Vector3i dims;
  for (int a = 0; a < 3; ++a) {
    std::uint32_t d = 0;
    f.read(reinterpret_cast<char*>(&d), 4);
    dims[a] = int(d);
  }
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    float o = 0;
    f.read(reinterpret_cast<char*>(&o), 4);
    origin[a] = o;
  }
  float res = 0;
  f.read(reinterpret_cast<char*>(&res), 4);
  VoxelGrid g(origin, res, dims);
  f.read(reinterpret_cast<char*>(g.states_.data()),
         std::streamsize(g.states_.size()));
  if (!f) throw std::runtime_error("truncated grid file");
  return g;
}

CarveSummary carve_from_depth(VoxelGrid& grid, const Pose& pose,
                              const CameraModel& cam,
                              const std::vector<double>& depth) {
  CarveSummary sum;
  if (!grid.contains(pose.position)) {
    sum.pose_outside_grid = true;
    return sum;
  }
  assert(depth.size() == std::size_t(cam.width) * cam.height);
  const CameraBasis basis = CameraBasis::from_pose(pose);

  auto promote_free = [&](std::size_t v) {
    if (grid.state(v) == VoxelState::Unobserved) {
      grid.set_state(v, VoxelState::Free);
      ++sum.set_free;
    }
  };
  auto promote_occupied = [&](std::size_t v) {
    if (grid.state(v) != VoxelState::Occupied) {
      grid.set_state(v, VoxelState::Occupied);
      ++sum.set_occupied;
    }
  };

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double z = depth[std::size_t(y) * cam.width + x];
      if (!std::isfinite(z) || z <= 0.0) continue;
      const bool is_hit = z <= cam.far_plane;
      const Vec3 dir_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
      const double norm = dir_cam.norm();
      const Vec3 dir_world = (basis.right * dir_cam.x() +
                              basis.down * dir_cam.y() + basis.forward) /
                             norm;
      // z-depth -> distance along the ray
      const double t_hit = is_hit ? z * norm : cam.far_plane * norm;

      const auto steps = grid.traverse_ray(pose.position, dir_world,
                                           t_hit + grid.resolution());
      bool marked_hit = false;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const double exit = i + 1 < steps.size()
                                ? steps[i + 1].entry_depth
                                : std::numeric_limits<double>::infinity();
        if (exit <= t_hit) {
          promote_free(steps[i].voxel);
        } else if (is_hit) {
          promote_occupied(steps[i].voxel);
          marked_hit = true;
          break;
        } else {
          break;  // sentinel ray: free only up to the sensor range
        }
      }
      // Hit beyond the last voxel of the grid (e.g. noise pushed it past a
      // boundary wall): attribute it to the last traversed voxel.
      if (is_hit && !marked_hit && !steps.empty()) {
        promote_occupied(steps.back().voxel);
      }
    }
  }
  return sum;
}

SubspacePartition::SubspacePartition(const VoxelGrid& grid,
                                     const Vec3& cuboid_size) {
  for (int a = 0; a < 3; ++a) {
    int per = std::max(1, int(std::round(cuboid_size[a] / grid.resolution())));
    per = std::min(per, grid.dims()[a]);
    voxels_per_tile_[a] = per;
    tiles_[a] = (grid.dims()[a] + per - 1) / per;
  }
  states_.assign(std::size_t(tiles_.x()) * tiles_.y() * tiles_.z(),
                 SubspaceState::Unreconstructed);
}

AABB SubspacePartition::cuboid_bounds(const VoxelGrid& grid,
                                      std::size_t i) const {
  const int tx = int(i % tiles_.x());
  const int ty = int((i / tiles_.x()) % tiles_.y());
  const int tz = int(i / (std::size_t(tiles_.x()) * tiles_.y()));
  AABB b;
  const double res = grid.resolution();
  b.lo = grid.origin() + res * Vec3(tx * voxels_per_tile_.x(),
                                    ty * voxels_per_tile_.y(),
                                    tz * voxels_per_tile_.z());
  Vec3 hi_vox(std::min((tx + 1) * voxels_per_tile_.x(), grid.dims().x()),
              std::min((ty + 1) * voxels_per_tile_.y(), grid.dims().y()),
              std::min((tz + 1) * voxels_per_tile_.z(), grid.dims().z()));
  b.hi = grid.origin() + res * hi_vox;
  return b;
}

Vec3 SubspacePartition::cuboid_center(const VoxelGrid& grid,
                                      std::size_t i) const {
  return cuboid_bounds(grid, i).center();
}

const std::vector<SubspaceState>& SubspacePartition::classify(
    const VoxelGrid& grid) {
  for (std::size_t ci = 0; ci < states_.size(); ++ci) {
    const int tx = int(ci % tiles_.x());
    const int ty = int((ci / tiles_.x()) % tiles_.y());
    const int tz = int(ci / (std::size_t(tiles_.x()) * tiles_.y()));
    std::size_t unobserved = 0, observed = 0;
    const int x0 = tx * voxels_per_tile_.x();
    const int y0 = ty * voxels_per_tile_.y();
    const int z0 = tz * voxels_per_tile_.z();
    const int x1 = std::min(x0 + voxels_per_tile_.x(), grid.dims().x());
    const int y1 = std::min(y0 + voxels_per_tile_.y(), grid.dims().y());
    const int z1 = std::min(z0 + voxels_per_tile_.z(), grid.dims().z());
    for (int z = z0; z < z1; ++z)
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          if (grid.state(grid.flat(x, y, z)) == VoxelState::Unobserved)
            ++unobserved;
          else
            ++observed;
        }
    if (unobserved == 0)
      states_[ci] = SubspaceState::Reconstructed;
    else if (observed == 0)
      states_[ci] = SubspaceState::Unreconstructed;
    else
      states_[ci] = SubspaceState::Reconstructing;
  }
  return states_;
}

std::optional<double> observed_fraction(const VoxelGrid& grid,
                                        const AABB& region) {
  AABB grid_box{grid.origin(),
                grid.origin() + grid.resolution() *
                                    grid.dims().cast<double>().eval()};
  const AABB inter = grid_box.intersect(region);
  if (inter.empty()) return std::nullopt;

  Eigen::Vector3i lo, hi;
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::clamp(
        int(std::floor((inter.lo[a] - grid.origin()[a]) / grid.resolution())),
        0, grid.dims()[a] - 1);
    hi[a] = std::clamp(
        int(std::ceil((inter.hi[a] - grid.origin()[a]) / grid.resolution())) - 1,
        0, grid.dims()[a] - 1);
  }
  std::size_t total = 0, observed = 0;
  for (int z = lo.z(); z <= hi.z(); ++z)
    for (int y = lo.y(); y <= hi.y(); ++y)
      for (int x = lo.x(); x <= hi.x(); ++x) {
        ++total;
        if (grid.state(grid.flat(x, y, z)) != VoxelState::Unobserved)
          ++observed;
      }
  if (total == 0) return std::nullopt;
  return double(observed) / double(total);
}

}  // namespace splatplan
