#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "splatplan/voxel_world.hpp"

using namespace splatplan;

TEST_CASE("traverse_ray: axis-aligned stepping with exact entry depths") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(20, 20, 20));
  const auto steps =
      grid.traverse_ray(Vec3(0.0, 0.05, 0.05), Vec3(1, 0, 0), 0.5);
  REQUIRE(steps.size() == 5);
  for (int i = 0; i < 5; ++i)
    CHECK(steps[i].entry_depth == doctest::Approx(0.1 * i).epsilon(1e-12));
}

TEST_CASE("traverse_ray: zero range and outside origin give empty lists") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(10, 10, 10));
  CHECK(grid.traverse_ray(Vec3(0.05, 0.05, 0.05), Vec3(1, 0, 0), 0.0).empty());
  CHECK(grid.traverse_ray(Vec3(-1, 0.05, 0.05), Vec3(1, 0, 0), 1.0).empty());
}

TEST_CASE("traverse_ray: diagonal ray matches a dense sampling oracle") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(30, 30, 30));
  const Vec3 origin(0.03, 0.07, 0.15);
  const Vec3 dir = Vec3(1, 1, 0).normalized();
  const double range = 2.0;
  const auto steps = grid.traverse_ray(origin, dir, range);

  // Dense 1 mm point sampling: collect voxel indices in first-seen order.
  std::vector<std::size_t> sampled;
  for (double t = 0.0; t < range; t += 1e-4) {
    const Vec3 p = origin + t * dir;
    const auto idx = grid.index_of(p);
    if (!idx) break;
    if (sampled.empty() || sampled.back() != *idx) {
      // Only record transitions to a brand-new voxel.
      bool seen = false;
      for (std::size_t s : sampled)
        if (s == *idx) seen = true;
      if (!seen) sampled.push_back(*idx);
    }
  }
  REQUIRE(steps.size() == sampled.size());
  for (std::size_t i = 0; i < steps.size(); ++i)
    CHECK(steps[i].voxel == sampled[i]);

  // Entry depths strictly increase, voxels face-adjacent.
  for (std::size_t i = 1; i < steps.size(); ++i) {
    CHECK(steps[i].entry_depth > steps[i - 1].entry_depth);
    const auto a = grid.coords(steps[i - 1].voxel);
    const auto b = grid.coords(steps[i].voxel);
    CHECK((a - b).cwiseAbs().sum() == 1);
  }
}

TEST_CASE("carve_from_depth: hand ray-march oracle, 19 Free + 1 Occupied") {
  // Single center ray along +x from inside voxel 0; a 1.9 m z-depth puts the
  // hit at x = 1.95, inside voxel 19 ([1.9, 2.0)). Voxels 0..18 have their
  // exits at 0.05 + 0.1k <= 1.9, so exactly 19 become Free.
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(30, 10, 10));
  CameraModel cam;
  cam.width = cam.height = 1;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.5;
  cam.far_plane = 5.0;
  Pose pose;
  pose.position = Vec3(0.05, 0.45, 0.45);
  std::vector<double> depth{1.90};
  const CarveSummary s = carve_from_depth(grid, pose, cam, depth);
  CHECK_FALSE(s.pose_outside_grid);
  CHECK(s.set_free == 19);
  CHECK(s.set_occupied == 1);
  int free_count = 0, occ_count = 0;
  for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
    if (grid.state(i) == VoxelState::Free) ++free_count;
    if (grid.state(i) == VoxelState::Occupied) ++occ_count;
  }
  CHECK(free_count == 19);
  CHECK(occ_count == 1);

  SUBCASE("second identical carve is a no-op") {
    const CarveSummary s2 = carve_from_depth(grid, pose, cam, depth);
    CHECK(s2.set_free == 0);
    CHECK(s2.set_occupied == 0);
  }
}

TEST_CASE("carve_from_depth: sentinel rays free everything, occupy nothing") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(30, 10, 10));
  CameraModel cam;
  cam.width = cam.height = 1;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.5;
  cam.far_plane = 2.0;
  Pose pose;
  pose.position = Vec3(0.05, 0.45, 0.45);
  std::vector<double> depth{cam.depth_sentinel()};
  const CarveSummary s = carve_from_depth(grid, pose, cam, depth);
  CHECK(s.set_occupied == 0);
  CHECK(s.set_free == 20);  // exits 0.05 + 0.1k <= 2.0 -> k = 0..19
}

TEST_CASE("carve_from_depth: pose outside grid is a flagged no-op") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(10, 10, 10));
  CameraModel cam;
  cam.width = cam.height = 1;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.5;
  Pose pose;
  pose.position = Vec3(-5, 0, 0);
  std::vector<double> depth{1.0};
  const CarveSummary s = carve_from_depth(grid, pose, cam, depth);
  CHECK(s.pose_outside_grid);
  CHECK(s.set_free == 0);
  CHECK(s.set_occupied == 0);
}

TEST_CASE("Occupied voxels are never demoted") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(30, 10, 10));
  CameraModel cam;
  cam.width = cam.height = 1;
  cam.fx = cam.fy = 1.0;
  cam.cx = cam.cy = 0.5;
  cam.far_plane = 5.0;
  Pose pose;
  pose.position = Vec3(0.05, 0.45, 0.45);
  std::vector<double> hit{1.0};
  carve_from_depth(grid, pose, cam, hit);
  const auto occ = grid.index_of(Vec3(1.05, 0.45, 0.45));
  REQUIRE(occ.has_value());
  CHECK(grid.state(*occ) == VoxelState::Occupied);
  // A later sentinel ray passes straight through; the voxel must stay
  // Occupied.
  std::vector<double> miss{cam.depth_sentinel()};
  carve_from_depth(grid, pose, cam, miss);
  CHECK(grid.state(*occ) == VoxelState::Occupied);
}

TEST_CASE("subspace classification trichotomy") {
  VoxelGrid grid(Vec3::Zero(), 0.1, Eigen::Vector3i(4, 2, 2));
  SubspacePartition part(grid, Vec3(0.2, 0.2, 0.2));
  REQUIRE(part.cuboid_count() == 2);

  // All unobserved.
  auto states = part.classify(grid);
  CHECK(states[0] == SubspaceState::Unreconstructed);
  CHECK(states[1] == SubspaceState::Unreconstructed);

  // Make every voxel of cuboid 0 Free -> Reconstructed; one observed voxel
  // in cuboid 1 -> Reconstructing.
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) grid.set_state(grid.flat(x, y, z), VoxelState::Free);
  grid.set_state(grid.flat(2, 0, 0), VoxelState::Occupied);
  states = part.classify(grid);
  CHECK(states[0] == SubspaceState::Reconstructed);
  CHECK(states[1] == SubspaceState::Reconstructing);
  CHECK(part.cached_state(0) == states[0]);
  CHECK(part.cached_state(1) == states[1]);
}

TEST_CASE("observed_fraction counts exactly") {
  VoxelGrid grid(Vec3::Zero(), 1.0, Eigen::Vector3i(2, 2, 2));
  // 3 observed of 8 -> 0.375.
  grid.set_state(grid.flat(0, 0, 0), VoxelState::Free);
  grid.set_state(grid.flat(1, 0, 0), VoxelState::Occupied);
  grid.set_state(grid.flat(0, 1, 0), VoxelState::Free);
  const auto f = observed_fraction(grid, AABB{Vec3::Zero(), Vec3(2, 2, 2)});
  REQUIRE(f.has_value());
  CHECK(*f == doctest::Approx(0.375));

  // Empty intersection -> error value.
  CHECK_FALSE(
      observed_fraction(grid, AABB{Vec3(10, 10, 10), Vec3(11, 11, 11)})
          .has_value());
}

TEST_CASE("grid save/load round-trips") {
  VoxelGrid grid(Vec3(1, 2, 3), 0.25, Eigen::Vector3i(3, 4, 5));
  Rng rng(11);
  for (std::size_t i = 0; i < grid.voxel_count(); ++i)
    grid.set_state(i, VoxelState(rng.uniform_int(3)));
  const std::string path = "/tmp/splatplan_test_grid.bin";
  grid.save(path);
  const VoxelGrid back = VoxelGrid::load(path);
  CHECK(back.dims() == grid.dims());
  CHECK(back.resolution() == doctest::Approx(grid.resolution()));
  CHECK(back.origin().isApprox(grid.origin(), 1e-6));
  for (std::size_t i = 0; i < grid.voxel_count(); ++i)
    CHECK(back.state(i) == grid.state(i));
  std::filesystem::remove(path);
}
