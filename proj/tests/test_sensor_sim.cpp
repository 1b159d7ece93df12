#include <doctest.h>

#include <map>

#include "splatplan/sensor_sim.hpp"

using namespace splatplan;

namespace {

Scene unit_room() {
  return Scene::parse("room 0 0 0 1 1 1 0.5 0.5 0.5\nsensor_height 0.5\n");
}

CameraModel small_cam() {
  CameraModel cam;
  cam.width = 8;
  cam.height = 8;
  cam.fx = cam.fy = 4.0;
  cam.cx = cam.cy = 4.0;
  cam.near_plane = 0.01;
  cam.far_plane = 5.0;
  return cam;
}

}  // namespace

TEST_CASE("scene parsing: grammar, comments, validation") {
  const Scene s = Scene::parse(
      "# a room with one box\n"
      "room 0 0 0 4 3 2.5 0.8 0.8 0.8\n"
      "box 1 1 0 1.2 2 1 0.2 0.3 0.4  # cabinet\n"
      "sensor_height 1.1\n");
  CHECK(s.room.bounds.lo.isApprox(Vec3(0, 0, 0)));
  CHECK(s.room.bounds.hi.isApprox(Vec3(4, 3, 2.5)));
  REQUIRE(s.boxes.size() == 1);
  CHECK(s.boxes[0].color.isApprox(Vec3(0.2, 0.3, 0.4)));
  CHECK(s.sensor_height == doctest::Approx(1.1));

  CHECK_THROWS(Scene::parse("box 0 0 0 1 1 1 1 1 1\n"));  // no room
  CHECK_THROWS(Scene::parse(
      "room 0 0 0 1 1 1 1 1 1\nbox 0 0 0 9 9 9 1 1 1\n"));  // box outside
}

TEST_CASE("raycast: head-on wall hit at exact distance") {
  const Scene s = unit_room();
  const auto hit =
      raycast_scene(s, Vec3(0.5, 0.5, 0.5), Vec3(1, 0, 0), 10.0);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(hit->color.isApprox(s.room.color));
}

TEST_CASE("raycast: obstacle boxes occlude the walls") {
  const Scene s = Scene::parse(
      "room 0 0 0 4 4 2 0.9 0.9 0.9\n"
      "box 2 1.8 0 2.2 2.2 2 0.1 0.2 0.3\n");
  const auto hit = raycast_scene(s, Vec3(1, 2, 1), Vec3(1, 0, 0), 10.0);
  REQUIRE(hit.has_value());
  CHECK(hit->t == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(hit->color.isApprox(Vec3(0.1, 0.2, 0.3)));
}

TEST_CASE("capture: noiseless depths equal analytic ray casts") {
  const Scene s = unit_room();
  const CameraModel cam = small_cam();
  Pose pose;
  pose.position = Vec3(0.5, 0.5, 0.5);
  const RGBDFrame f = capture(s, pose, cam, 0.0, 1);
  const CameraBasis basis = CameraBasis::from_pose(pose);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      const double xc = (x + 0.5 - cam.cx) / cam.fx;
      const double yc = (y + 0.5 - cam.cy) / cam.fy;
      const Vec3 dir =
          (basis.forward + xc * basis.right + yc * basis.down).normalized();
      const auto hit = raycast_scene(s, pose.position, dir, cam.far_plane);
      REQUIRE(hit.has_value());
      const double zdepth = hit->t / Vec3(xc, yc, 1.0).norm();
      CHECK(f.depth[std::size_t(y) * cam.width + x] ==
            doctest::Approx(zdepth).epsilon(1e-9));
      CHECK(f.color[std::size_t(y) * cam.width + x].isApprox(hit->color));
    }
}

TEST_CASE("capture: noise bounded, deterministic under seed") {
  const Scene s = unit_room();
  const CameraModel cam = small_cam();
  Pose pose;
  pose.position = Vec3(0.5, 0.5, 0.5);
  const RGBDFrame clean = capture(s, pose, cam, 0.0, 1);
  const RGBDFrame a = capture(s, pose, cam, 0.02, 42);
  const RGBDFrame b = capture(s, pose, cam, 0.02, 42);
  const RGBDFrame c = capture(s, pose, cam, 0.02, 43);
  bool any_diff_seed = false;
  for (std::size_t i = 0; i < a.depth.size(); ++i) {
    CHECK(std::abs(a.depth[i] - clean.depth[i]) <= 0.02 + 1e-12);
    CHECK(a.depth[i] == b.depth[i]);
    if (a.depth[i] != c.depth[i]) any_diff_seed = true;
  }
  CHECK(any_diff_seed);
}

TEST_CASE("capture throws from inside solid geometry") {
  const Scene s = Scene::parse(
      "room 0 0 0 4 4 2 0.9 0.9 0.9\nbox 1 1 0 2 2 2 0.5 0.5 0.5\n");
  Pose pose;
  pose.position = Vec3(1.5, 1.5, 1.0);
  CHECK_THROWS(capture(s, pose, small_cam(), 0.0, 1));
  pose.position = Vec3(9, 9, 9);
  CHECK_THROWS(capture(s, pose, small_cam(), 0.0, 1));
}

TEST_CASE("surface sampling: unit cube faces get ~1/6 of samples each") {
  const Scene s = unit_room();
  const auto samples = sample_surface_points(s, 60000, 5);
  REQUIRE(samples.size() == 60000);
  std::map<int, int> face_counts;
  for (const auto& sp : samples) {
    const Vec3& p = sp.point;
    int face = -1;
    for (int ax = 0; ax < 3; ++ax) {
      if (std::abs(p[ax]) < 1e-12) face = 2 * ax;
      if (std::abs(p[ax] - 1.0) < 1e-12) face = 2 * ax + 1;
    }
    REQUIRE(face >= 0);  // every sample lies exactly on a face
    ++face_counts[face];
  }
  for (const auto& [face, n] : face_counts)
    CHECK(double(n) / 60000.0 == doctest::Approx(1.0 / 6.0).epsilon(0.02));
}

TEST_CASE("surface sampling is area-weighted across obstacles") {
  // Box with 4x the surface area of another, both far from walls.
  const Scene s = Scene::parse(
      "room 0 0 0 20 20 10 0.9 0.9 0.9\n"
      "box 2 2 2 4 4 4 1 0 0\n"     // 2x2x2 cube: area 24
      "box 10 10 2 14 14 6 0 1 0\n"  // 4x4x4 cube: area 96
  );
  const auto samples = sample_surface_points(s, 200000, 5);
  std::size_t small_n = 0, big_n = 0;
  for (const auto& sp : samples) {
    if (sp.color.isApprox(Vec3(1, 0, 0))) ++small_n;
    if (sp.color.isApprox(Vec3(0, 1, 0))) ++big_n;
  }
  CHECK(double(big_n) / double(small_n) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("distance_to_surface: inside and outside points") {
  const Scene s = unit_room();
  // Room interior: distance to the nearest wall.
  CHECK(distance_to_surface(s, Vec3(0.5, 0.5, 0.5)) == doctest::Approx(0.5));
  CHECK(distance_to_surface(s, Vec3(0.03, 0.5, 0.5)) == doctest::Approx(0.03));

  const Scene s2 = Scene::parse(
      "room 0 0 0 10 10 10 0.9 0.9 0.9\nbox 4 4 4 6 6 6 1 0 0\n");
  // 3 cm off the obstacle face.
  CHECK(distance_to_surface(s2, Vec3(3.97, 5, 5)) == doctest::Approx(0.03));
  // On the face exactly.
  CHECK(distance_to_surface(s2, Vec3(4, 5, 5)) == doctest::Approx(0.0));
}
