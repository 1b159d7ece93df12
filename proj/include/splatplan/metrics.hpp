#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "splatplan/core.hpp"
#include "splatplan/gaussian.hpp"
#include "splatplan/sensor_sim.hpp"

namespace splatplan {

/// Uniform-hash-grid point index with exact nearest-neighbor queries
/// (expanding ring search with a conservative stopping bound).
class PointIndex {
 public:
  explicit PointIndex(double cell_size = 0.25);
  void build(const std::vector<Vec3>& points);
  std::size_t size() const { return points_.size(); }

  /// Exact nearest neighbor; returns (index, distance). Requires size() > 0.
  std::pair<std::size_t, double> nearest(const Vec3& q) const;

 private:
  Eigen::Vector3i cell_of(const Vec3& p) const;
  static std::uint64_t key(const Eigen::Vector3i& c);

  double cell_;
  std::vector<Vec3> points_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

/// Mean distance (cm) from Gaussian centers to the nearest scene surface.
/// Empty map has no defined value.
std::optional<double> accuracy_cm(const GaussianMap& map, const Scene& scene);

/// Mean distance (cm) from ground-truth surface samples to the nearest
/// Gaussian center. Empty map has no defined value.
std::optional<double> completion_cm(const std::vector<Vec3>& samples,
                                    const GaussianMap& map);

/// Fraction of surface samples whose nearest Gaussian center is closer than
/// tau_cm. Empty map yields 0.
double completion_ratio(const std::vector<Vec3>& samples,
                        const GaussianMap& map, double tau_cm = 5.0);

/// Sum of consecutive Euclidean distances along the trajectory, meters.
double path_length(const std::vector<Vec3>& trajectory);

struct CycleTiming {
  double t_ve = 0.0, t_lp = 0.0, t_gp = 0.0;
  double total() const { return t_ve + t_lp + t_gp; }
};

struct MetricsReport {
  std::optional<double> accuracy_cm;
  std::optional<double> completion_cm;
  double completion_ratio = 0.0;
  double tau_cm = 5.0;
  double path_length_m = 0.0;
  double simulated_time_s = 0.0;  // path length / max speed
  int cycles = 0;
  int captures = 0;
  std::size_t gaussian_count = 0;
  bool done = false;
  bool incomplete = false;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string scene;
  std::string variant;
  std::vector<CycleTiming> cycle_timings;  // deterministic totals excluded

  /// Deterministic JSON document (timings are not serialized; they live in
  /// the per-cycle CSV, which is allowed to differ between runs).
  std::string to_json() const;

  /// One CSV row: scene,variant,seed,acc_cm,comp_cm,cr,pl_m,cycles,done.
  std::string csv_row() const;
  static std::string csv_header();
};

/// FNV-1a hash of a config blob, as 16 hex digits.
std::string hash_hex(const std::string& text);

}  // namespace splatplan
