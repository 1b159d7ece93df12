#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>

namespace splatplan {

using Vec3 = Eigen::Vector3d;

/// Wrap an angle into [-pi, pi).
inline double wrap_angle(double a) {
  const double two_pi = 2.0 * M_PI;
  a = std::fmod(a + M_PI, two_pi);
  if (a < 0.0) a += two_pi;
  return a - M_PI;
}

/// Pinhole camera intrinsics. `far_plane` doubles as the sensor max range.
struct CameraModel {
  double fx = 0.0, fy = 0.0;
  double cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  double near_plane = 0.05;
  double far_plane = 5.0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width >= 1 && height >= 1 &&
           near_plane > 0.0 && near_plane < far_plane;
  }
  double depth_sentinel() const { return far_plane + 1.0; }
  double horizontal_fov() const { return 2.0 * std::atan2(0.5 * width, fx); }
};

/// Robot/camera pose: position plus yaw/pitch. Roll is always zero.
struct Pose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;    // radians, wrapped to [-pi, pi)
  double pitch = 0.0;  // radians, elevation (positive looks up)
};

/// Orthonormal camera basis in world coordinates.
/// Camera convention: x right, y down, z forward.
struct CameraBasis {
  Vec3 right, down, forward;

  static CameraBasis from_pose(const Pose& p) {
    const double cy = std::cos(p.yaw), sy = std::sin(p.yaw);
    const double cp = std::cos(p.pitch), sp = std::sin(p.pitch);
    CameraBasis b;
    b.forward = Vec3(cp * cy, cp * sy, sp);
    b.right = Vec3(sy, -cy, 0.0);
    b.down = b.forward.cross(b.right);
    return b;
  }
};

struct AABB {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  AABB intersect(const AABB& o) const {
    return {lo.cwiseMax(o.lo), hi.cwiseMin(o.hi)};
  }
  bool empty() const { return (hi.array() <= lo.array()).any(); }
};

/// Deterministic 64-bit RNG (SplitMix64). Used everywhere randomness is
/// needed so runs are bit-reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform double in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) { return int(next_u64() % std::uint64_t(n)); }

 private:
  std::uint64_t state_;
};

}  // namespace splatplan
