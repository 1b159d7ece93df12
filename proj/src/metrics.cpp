#include "splatplan/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace splatplan {

PointIndex::PointIndex(double cell_size) : cell_(cell_size) {
  assert(cell_ > 0.0);
}

Eigen::Vector3i PointIndex::cell_of(const Vec3& p) const {
  return Eigen::Vector3i(int(std::floor(p.x() / cell_)),
                         int(std::floor(p.y() / cell_)),
                         int(std::floor(p.z() / cell_)));
}

std::uint64_t PointIndex::key(const Eigen::Vector3i& c) {
  const auto u = [](int v) { return std::uint64_t(std::uint32_t(v + (1 << 20))) & 0x1FFFFF; };
  return (u(c.x()) << 42) | (u(c.y()) << 21) | u(c.z());
}

void PointIndex::build(const std::vector<Vec3>& points) {
  points_ = points;
  cells_.clear();
  cells_.reserve(points.size());
  for (std::size_t i = 0; i < points_.size(); ++i)
    cells_[key(cell_of(points_[i]))].push_back(i);
}

std::pair<std::size_t, double> PointIndex::nearest(const Vec3& q) const {
  assert(!points_.empty());
  const Eigen::Vector3i c0 = cell_of(q);
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  // Ring r is the hollow shell of cells at Chebyshev distance r. Every point
  // in a cell of ring r is at least (r - 1) * cell_ away from q, so once
  // best <= (r - 1) * cell_ no farther ring can improve the answer.
  for (int r = 0;; ++r) {
    if (std::isfinite(best_d2) &&
        std::sqrt(best_d2) <= double(r - 1) * cell_)
      break;
    bool any_cell_possible = false;
    for (int dz = -r; dz <= r; ++dz)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r)
            continue;
          const auto it = cells_.find(key(c0 + Eigen::Vector3i(dx, dy, dz)));
          if (it == cells_.end()) continue;
          any_cell_possible = true;
          for (std::size_t i : it->second) {
            const double d2 = (points_[i] - q).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && i < best)) {
              best_d2 = d2;
              best = i;
            }
          }
        }
    // Safety against fully empty distant rings: bail once the ring radius
    // exceeds any plausible data extent relative to the best found.
    if (!any_cell_possible && std::isfinite(best_d2) &&
        std::sqrt(best_d2) <= double(r) * cell_)
      break;
    if (r > 1 << 20) break;  // unreachable in practice
  }
  return {best, std::sqrt(best_d2)};
}

std::optional<double> accuracy_cm(const GaussianMap& map, const Scene& scene) {
  if (map.size() == 0) return std::nullopt;
  double sum = 0.0;
  for (const Gaussian& g : map.gaussians())
    sum += distance_to_surface(scene, g.center);
  return 100.0 * sum / double(map.size());
}

namespace {

std::vector<double> sample_distances(const std::vector<Vec3>& samples,
                                     const GaussianMap& map) {
  std::vector<Vec3> centers;
  centers.reserve(map.size());
  for (const Gaussian& g : map.gaussians()) centers.push_back(g.center);
  PointIndex index;
  index.build(centers);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const Vec3& s : samples) out.push_back(index.nearest(s).second);
  return out;
}

}  // namespace

std::optional<double> completion_cm(const std::vector<Vec3>& samples,
                                    const GaussianMap& map) {
  assert(!samples.empty());
  if (map.size() == 0) return std::nullopt;
  double sum = 0.0;
  for (double d : sample_distances(samples, map)) sum += d;
  return 100.0 * sum / double(samples.size());
}

double completion_ratio(const std::vector<Vec3>& samples,
                        const GaussianMap& map, double tau_cm) {
  assert(!samples.empty());
  if (map.size() == 0) return 0.0;
  std::size_t within = 0;
  for (double d : sample_distances(samples, map))
    if (100.0 * d < tau_cm) ++within;
  return double(within) / double(samples.size());
}

double path_length(const std::vector<Vec3>& trajectory) {
  assert(!trajectory.empty());
  double len = 0.0;
  for (std::size_t i = 1; i < trajectory.size(); ++i)
    len += (trajectory[i] - trajectory[i - 1]).norm();
  return len;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["scene"] = scene;
  j["variant"] = variant;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  if (accuracy_cm)
    j["accuracy_cm"] = *accuracy_cm;
  else
    j["accuracy_cm"] = nullptr;
  if (completion_cm)
    j["completion_cm"] = *completion_cm;
  else
    j["completion_cm"] = nullptr;
  j["completion_ratio"] = completion_ratio;
  j["tau_cm"] = tau_cm;
  j["path_length_m"] = path_length_m;
  j["simulated_time_s"] = simulated_time_s;
  j["cycles"] = cycles;
  j["captures"] = captures;
  j["gaussian_count"] = gaussian_count;
  j["done"] = done;
  j["incomplete"] = incomplete;
  return j.dump(2) + "\n";
}

std::string MetricsReport::csv_header() {
  return "scene,variant,seed,accuracy_cm,completion_cm,completion_ratio,"
         "path_length_m,cycles,done";
}

std::string MetricsReport::csv_row() const {
  std::ostringstream os;
  os.precision(9);
  os << scene << ',' << variant << ',' << seed << ',';
  if (accuracy_cm)
    os << *accuracy_cm;
  else
    os << "nan";
  os << ',';
  if (completion_cm)
    os << *completion_cm;
  else
    os << "nan";
  os << ',' << completion_ratio << ',' << path_length_m << ',' << cycles << ','
     << (done ? 1 : 0);
  return os.str();
}

std::string hash_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

}  // namespace splatplan
