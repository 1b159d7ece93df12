#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splatplan/core.hpp"

namespace splatplan {

enum class VoxelState : std::uint8_t { Unobserved = 0, Free = 1, Occupied = 2 };

struct CarveSummary {
  std::size_t set_free = 0;
  std::size_t set_occupied = 0;
  bool pose_outside_grid = false;
  std::size_t changes() const { return set_free + set_occupied; }
};

struct RayStep {
  std::size_t voxel;   // flat index
  VoxelState state;
  double entry_depth;  // distance along the ray at which the voxel is entered
};

/// Tri-state dense occupancy lattice over an axis-aligned region.
/// Everything starts Unobserved; observation only ever moves a voxel
/// forward (Unobserved -> Free/Occupied, Free -> Occupied), never back.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const Eigen::Vector3i& dims);
  /// Grid that covers `bounds` (dims rounded up to whole voxels).
  static VoxelGrid covering(const AABB& bounds, double resolution);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Eigen::Vector3i& dims() const { return dims_; }
  double voxel_volume() const { return resolution_ * resolution_ * resolution_; }
  std::size_t voxel_count() const { return states_.size(); }

  bool contains(const Vec3& p) const;
  std::optional<std::size_t> index_of(const Vec3& p) const;
  std::size_t flat(int ix, int iy, int iz) const {
    return (std::size_t(iz) * dims_.y() + iy) * dims_.x() + ix;
  }
  Eigen::Vector3i coords(std::size_t flat_index) const;
  Vec3 voxel_center(std::size_t flat_index) const;

  VoxelState state(std::size_t i) const { return states_[i]; }
  VoxelState state_at(const Vec3& p) const;
  void set_state(std::size_t i, VoxelState s) { states_[i] = s; }
  std::size_t count(VoxelState s) const;

  /// Amanatides-Woo traversal. `direction` must be normalized. Voxels are
  /// listed in strictly increasing entry depth; empty when the origin lies
  /// outside the grid or max_range is zero.
  std::vector<RayStep> traverse_ray(const Vec3& origin, const Vec3& direction,
                                    double max_range) const;

  /// Binary dump: 32-byte header (magic, dims, origin, resolution as f32)
  /// followed by one byte per voxel.
  void save(const std::string& path) const;
  static VoxelGrid load(const std::string& path);

 private:
  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 0.1;
  Eigen::Vector3i dims_ = Eigen::Vector3i::Zero();
  std::vector<VoxelState> states_;
};

/// Carve free space and surface hits into the grid from one depth frame.
/// Depth values are z-depths; values > cam.far (the sentinel) free the whole
/// ray up to the sensor range. Occupied voxels are never demoted.
CarveSummary carve_from_depth(VoxelGrid& grid, const Pose& pose,
                              const CameraModel& cam,
                              const std::vector<double>& depth);

enum class SubspaceState : std::uint8_t {
  Unreconstructed = 0,  // no observed voxels
  Reconstructing = 1,   // mixed
  Reconstructed = 2,    // no unobserved voxels
};

/// Cuboid tiling of the grid for global planning. Cuboid size snaps to a
/// whole number of voxels per axis.
class SubspacePartition {
 public:
  SubspacePartition() = default;
  SubspacePartition(const VoxelGrid& grid, const Vec3& cuboid_size);

  const Eigen::Vector3i& tiles() const { return tiles_; }
  std::size_t cuboid_count() const { return states_.size(); }
  SubspaceState cached_state(std::size_t i) const { return states_[i]; }
  AABB cuboid_bounds(const VoxelGrid& grid, std::size_t i) const;
  Vec3 cuboid_center(const VoxelGrid& grid, std::size_t i) const;

  /// Reclassify every cuboid from the raw voxels and refresh the cache.
  const std::vector<SubspaceState>& classify(const VoxelGrid& grid);

 private:
  Eigen::Vector3i tiles_ = Eigen::Vector3i::Zero();
  Eigen::Vector3i voxels_per_tile_ = Eigen::Vector3i::Zero();
  std::vector<SubspaceState> states_;
};

/// Fraction of observed (Free or Occupied) voxels inside `region`.
/// nullopt when the region does not intersect the grid.
std::optional<double> observed_fraction(const VoxelGrid& grid,
                                        const AABB& region);

}  // namespace splatplan
