#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splatplan/core.hpp"

namespace splatplan {

/// A colored axis-aligned box. The room itself is a box whose interior
/// faces act as walls; furniture boxes are solid obstacles.
struct Box {
  AABB bounds;
  Vec3 color = Vec3(0.5, 0.5, 0.5);
};

/// Ground-truth environment: a watertight room plus solid boxes inside it.
struct Scene {
  Box room;                 // rays hit its interior faces
  std::vector<Box> boxes;   // solid obstacles
  double sensor_height = 1.4;

  bool inside_solid(const Vec3& p) const;
  bool inside_room(const Vec3& p) const { return room.bounds.contains(p); }

  /// Text format, one directive per line:
  ///   room minx miny minz maxx maxy maxz r g b
  ///   box  minx miny minz maxx maxy maxz r g b
  ///   sensor_height h
  /// '#' starts a comment.
  static Scene parse(const std::string& text);
  static Scene load(const std::string& path);
};

struct RGBDFrame {
  int width = 0, height = 0;
  std::vector<Vec3> color;    // H*W
  std::vector<double> depth;  // H*W z-depth, sentinel (> far) for misses
  Pose pose;
};

/// Exact nearest ray-box hit from `origin` along normalized `dir`;
/// nullopt if nothing within max_range (radial distance).
struct SurfaceHit {
  double t;     // ray parameter (radial distance)
  Vec3 color;
};
std::optional<SurfaceHit> raycast_scene(const Scene& scene, const Vec3& origin,
                                        const Vec3& dir, double max_range);

/// Render a ground-truth RGB-D frame with uniform depth noise of the given
/// half-width, deterministic under `seed`. Throws if the pose is inside
/// solid geometry or outside the room.
RGBDFrame capture(const Scene& scene, const Pose& pose, const CameraModel& cam,
                  double noise_halfwidth, std::uint64_t seed);

/// Area-weighted uniform samples over interior-visible faces (room interior
/// faces plus obstacle exterior faces). Deterministic under `seed`.
struct SurfaceSample {
  Vec3 point;
  Vec3 color;
};
std::vector<SurfaceSample> sample_surface_points(const Scene& scene,
                                                 std::size_t n,
                                                 std::uint64_t seed);

/// Distance from a point to the nearest box surface in the scene.
double distance_to_surface(const Scene& scene, const Vec3& p);

}  // namespace splatplan
