#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <vector>

#include "splatplan/core.hpp"

namespace splatplan {

/// One isotropic splat: center, RGB color, radius, opacity (8 scalars).
struct Gaussian {
  Vec3 center = Vec3::Zero();
  Vec3 color = Vec3::Zero();  // components in [0, 1]
  double radius = 0.0;        // meters, > 0
  double opacity = 0.0;       // in [0, 1]

  bool valid() const {
    return radius > 0.0 && opacity >= 0.0 && opacity <= 1.0 &&
           (color.array() >= 0.0).all() && (color.array() <= 1.0).all() &&
           center.allFinite() && std::isfinite(radius);
  }

  /// Clamp fields back into the valid domain after a gradient step.
  void clamp() {
    color = color.cwiseMax(0.0).cwiseMin(1.0);
    radius = std::max(radius, 1e-4);
    opacity = std::min(std::max(opacity, 0.0), 1.0);
  }
};

/// Number of scalar parameters per Gaussian in flattened layouts:
/// [cx, cy, cz, r, g, b, radius, opacity].
inline constexpr int kParamsPerGaussian = 8;

/// Growable splat container. The generation counter increments on every
/// mutation; renders assert it is stable for the duration of a call.
class GaussianMap {
 public:
  std::size_t size() const { return gaussians_.size(); }
  bool empty() const { return gaussians_.empty(); }
  std::uint64_t generation() const { return generation_; }

  const Gaussian& operator[](std::size_t i) const { return gaussians_[i]; }
  std::span<const Gaussian> gaussians() const { return gaussians_; }

  void add(const Gaussian& g) {
    assert(g.valid());
    gaussians_.push_back(g);
    ++generation_;
  }

  /// Mutable access; counts as a mutation.
  Gaussian& mutate(std::size_t i) {
    ++generation_;
    return gaussians_[i];
  }

  void clear() {
    gaussians_.clear();
    ++generation_;
  }

 private:
  std::vector<Gaussian> gaussians_;
  std::uint64_t generation_ = 0;
};

}  // namespace splatplan
