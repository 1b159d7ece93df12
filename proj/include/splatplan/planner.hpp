#pragma once

#include <limits>
#include <vector>

#include "splatplan/core.hpp"
#include "splatplan/gain_eval.hpp"
#include "splatplan/gaussian.hpp"
#include "splatplan/voxel_world.hpp"

namespace splatplan {

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

enum class NodeSource : std::uint8_t { Trajectory = 0, Sampled = 1 };

/// Sparse roadmap in the traversable space around the past trajectory.
struct Roadmap {
  struct Edge {
    int to;
    double length;
  };
  std::vector<Vec3> nodes;
  std::vector<NodeSource> provenance;
  std::vector<std::vector<Edge>> edges;

  int add_node(const Vec3& p, NodeSource src);
  void add_edge(int a, int b, double length);
};

/// True when the straight segment between two points crosses only Free voxels.
bool segment_free(const VoxelGrid& grid, const Vec3& a, const Vec3& b);

/// Roadmap construction: downsampled trajectory nodes plus uniform samples in
/// the Free voxels within `inflation_radius` (xy) of the trajectory, connected
/// by collision-free edges shorter than `connect_radius`.
Roadmap build_roadmap(const VoxelGrid& grid, const std::vector<Vec3>& trajectory,
                      int sample_count, double connect_radius,
                      double inflation_radius, Rng& rng,
                      double trajectory_downsample = 0.5);

struct PathResult {
  bool reachable = false;
  std::vector<Vec3> points;  // includes start and goal
  double cost = kUnreachable;
};

/// A* over the roadmap with Euclidean edge weights and straight-line
/// heuristic. Start and goal attach to the nearest node reachable by a
/// collision-free segment within `attach_radius`.
PathResult shortest_path(const Roadmap& roadmap, const VoxelGrid& grid,
                         const Vec3& start, const Vec3& goal,
                         double attach_radius);

/// 2D occupancy grid used by search unit tests and as a planning fallback.
struct Grid2D {
  int width = 0, height = 0;
  std::vector<char> blocked;  // row-major
  bool is_blocked(int x, int y) const {
    return blocked[std::size_t(y) * width + x] != 0;
  }
};

/// 8-connected A* with Euclidean weights; exact (admissible heuristic).
PathResult grid_shortest_path(const Grid2D& grid, int sx, int sy, int gx,
                              int gy);

/// Open-path TSP from a fixed start: nearest-neighbor construction followed
/// by 2-opt until no improving swap. Unreachable nodes go last.
std::vector<int> solve_tsp(const std::vector<std::vector<double>>& cost,
                           int start_index);

struct GlobalPlan {
  std::vector<std::size_t> subspace_order;  // Reconstructing cuboid ids, visit order
  std::vector<Vec3> path;                   // concatenated reachable legs
  std::vector<double> leg_costs;
  bool empty() const { return subspace_order.empty(); }
};

struct PlannerConfig {
  double horizon_xy = 6.0;          // local horizon side length, meters
  double min_view_spacing = 1.5;    // between sampled viewpoints
  int max_candidates = 30;
  int yaw_bins = 12;
  double lambda = 1e-6;
  double g_thres_rel = 0.1;         // fraction of the cycle's max gain
  double g_thres_abs = 1e-12;       // floor below which gains count as zero
  bool normalize_gains = true;      // per-cycle max normalization of G(C)/G(Q)
  double connect_radius = 1.6;
  double inflation_radius = 2.0;
  int roadmap_samples = 120;
  double trajectory_downsample = 0.5;
  double suppression_radius = 1.0;  // captured-view novelty suppression
  JacobianParams gain_params = JacobianParams::All8;
};

enum class Variant { V1Tare, V2Coverage, V3Quality, V4Both, V5Adaptive };

struct PlanCycleResult {
  std::vector<Pose> selected_views;  // V_b, in local TSP visit order
  std::vector<Vec3> merged_path;     // polyline from the current position
  int next_view_index = -1;          // index into merged_path of the first view
  bool done = false;
  bool incomplete = false;           // boxed in: no progress possible
  double t_ve = 0.0, t_lp = 0.0, t_gp = 0.0;  // seconds, wall clock
  int candidate_count = 0;
  int reconstructing_subspaces = 0;
  double max_gain = 0.0;
  std::vector<GainRecord> gains;     // per surviving candidate
};

/// Hierarchical planner: global subspace routing + adaptive local views.
class Planner {
 public:
  Planner(PlannerConfig cfg, Variant variant, const CameraModel& gain_cam,
          double sensor_height, std::uint64_t seed)
      : cfg_(cfg), variant_(variant), gain_cam_(gain_cam),
        sensor_height_(sensor_height), rng_(seed) {}

  const PlannerConfig& config() const { return cfg_; }

  /// Record an executed capture; nearby yaw sectors stop yielding quality
  /// gain, which is what lets refinement-driven variants terminate.
  void note_capture(const Vec3& position, double yaw);

  GlobalPlan plan_global(const VoxelGrid& grid, SubspacePartition& partition,
                         const Roadmap& roadmap, const Pose& current);

  std::vector<Pose> select_local_views(const GlobalPlan& global,
                                       const Pose& current,
                                       const GaussianMap& map,
                                       const VoxelGrid& grid,
                                       std::vector<GainRecord>* records);

  PlanCycleResult plan_cycle(const GaussianMap& map, const VoxelGrid& grid,
                             SubspacePartition& partition, const Pose& current,
                             const std::vector<Vec3>& trajectory);

  /// Exposed for tests: threshold filter over an explicit gain assignment.
  /// Returns surviving indices. Entries flagged `is_intersection` are never
  /// removed; sampled entries below the threshold always are.
  static std::vector<int> filter_candidates(const std::vector<double>& gains,
                                            const std::vector<char>& is_intersection,
                                            double g_thres);

  AABB local_horizon(const VoxelGrid& grid, const Vec3& position) const;

 private:
  bool bin_suppressed(const Vec3& position, double bin_yaw) const;
  std::vector<Vec3> sample_viewpoints(const VoxelGrid& grid, const AABB& horizon,
                                      const std::vector<Vec3>& existing);

  PlannerConfig cfg_;
  Variant variant_;
  CameraModel gain_cam_;
  double sensor_height_;
  Rng rng_;
  std::vector<Pose> captured_;
};

/// Intersections of a polyline with the boundary of an axis-aligned box,
/// pulled slightly inside the box along the segment.
std::vector<Vec3> polyline_box_intersections(const std::vector<Vec3>& path,
                                             const AABB& box, double inset);

}  // namespace splatplan
