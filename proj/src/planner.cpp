#include "splatplan/planner.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <cmath>
#include <queue>

namespace splatplan {

namespace {

constexpr double kBigCost = 1e18;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int Roadmap::add_node(const Vec3& p, NodeSource src) {
  nodes.push_back(p);
  provenance.push_back(src);
  edges.emplace_back();
  return int(nodes.size()) - 1;
}

void Roadmap::add_edge(int a, int b, double length) {
  edges[a].push_back({b, length});
  edges[b].push_back({a, length});
}

bool segment_free(const VoxelGrid& grid, const Vec3& a, const Vec3& b) {
  const Vec3 d = b - a;
  const double len = d.norm();
  if (len < 1e-12) return grid.state_at(a) == VoxelState::Free;
  if (!grid.contains(a) || !grid.contains(b)) return false;
  for (const RayStep& s : grid.traverse_ray(a, d / len, len))
    if (s.state != VoxelState::Free) return false;
  return true;
}

Roadmap build_roadmap(const VoxelGrid& grid, const std::vector<Vec3>& trajectory,
                      int sample_count, double connect_radius,
                      double inflation_radius, Rng& rng,
                      double trajectory_downsample) {
  assert(!trajectory.empty());
  Roadmap rm;

  std::vector<Vec3> traj;
  for (const Vec3& p : trajectory) {
    if (traj.empty() || (p - traj.back()).norm() >= trajectory_downsample)
      traj.push_back(p);
  }
  if (traj.empty() || (trajectory.back() - traj.back()).norm() > 1e-9)
    traj.push_back(trajectory.back());
  for (const Vec3& p : traj) rm.add_node(p, NodeSource::Trajectory);

  // Uniform samples over Free voxels (at the trajectory's height layer)
  // within the inflation radius of the trajectory.
  if (sample_count > 0) {
    const double zref = trajectory.back().z();
    const int iz = std::clamp(
        int(std::floor((zref - grid.origin().z()) / grid.resolution())), 0,
        grid.dims().z() - 1);
    std::vector<Vec3> candidates;
    for (int y = 0; y < grid.dims().y(); ++y)
      for (int x = 0; x < grid.dims().x(); ++x) {
        if (grid.state(grid.flat(x, y, iz)) != VoxelState::Free) continue;
        Vec3 c = grid.voxel_center(grid.flat(x, y, iz));
        c.z() = zref;
        bool near = false;
        for (const Vec3& t : traj) {
          if ((c.head<2>() - t.head<2>()).norm() <= inflation_radius) {
            near = true;
            break;
          }
        }
        if (near) candidates.push_back(c);
      }
    for (int i = 0; i < sample_count && !candidates.empty(); ++i) {
      const int k = rng.uniform_int(int(candidates.size()));
      rm.add_node(candidates[k], NodeSource::Sampled);
      candidates[k] = candidates.back();
      candidates.pop_back();
    }
  }

  for (int a = 0; a < int(rm.nodes.size()); ++a)
    for (int b = a + 1; b < int(rm.nodes.size()); ++b) {
      const double len = (rm.nodes[a] - rm.nodes[b]).norm();
      if (len > connect_radius) continue;
      if (len < 1e-9 || segment_free(grid, rm.nodes[a], rm.nodes[b]))
        rm.add_edge(a, b, len);
    }
  return rm;
}

namespace {

int attach(const Roadmap& rm, const VoxelGrid& grid, const Vec3& p,
           double attach_radius) {
  int best = -1;
  double best_d = attach_radius;
  for (int i = 0; i < int(rm.nodes.size()); ++i) {
    const double d = (rm.nodes[i] - p).norm();
    if (d <= best_d && (d < 1e-9 || segment_free(grid, p, rm.nodes[i]))) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

PathResult shortest_path(const Roadmap& rm, const VoxelGrid& grid,
                         const Vec3& start, const Vec3& goal,
                         double attach_radius) {
  PathResult out;
  if ((start - goal).norm() < 1e-9) {
    out.reachable = true;
    out.cost = 0.0;
    return out;
  }
  const int s = attach(rm, grid, start, attach_radius);
  const int g = attach(rm, grid, goal, attach_radius);
  if (s < 0 || g < 0) return out;

  const int n = int(rm.nodes.size());
  std::vector<double> dist(n, kBigCost);
  std::vector<int> prev(n, -1);
  using QItem = std::pair<double, int>;  // (f = g + h, node)
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> open;
  dist[s] = 0.0;
  open.push({(rm.nodes[s] - rm.nodes[g]).norm(), s});
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (u == g) break;
    if (f > dist[u] + (rm.nodes[u] - rm.nodes[g]).norm() + 1e-12) continue;
    for (const Roadmap::Edge& e : rm.edges[u]) {
      const double nd = dist[u] + e.length;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        prev[e.to] = u;
        open.push({nd + (rm.nodes[e.to] - rm.nodes[g]).norm(), e.to});
      }
    }
  }
  if (dist[g] >= kBigCost) return out;

  std::vector<Vec3> rev;
  for (int u = g; u != -1; u = prev[u]) rev.push_back(rm.nodes[u]);
  out.points.push_back(start);
  for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
    if ((*it - out.points.back()).norm() > 1e-9) out.points.push_back(*it);
  }
  if ((goal - out.points.back()).norm() > 1e-9) out.points.push_back(goal);
  out.cost = (start - rm.nodes[s]).norm() + dist[g] +
             (goal - rm.nodes[g]).norm();
  out.reachable = true;
  return out;
}

PathResult grid_shortest_path(const Grid2D& grid, int sx, int sy, int gx,
                              int gy) {
  PathResult out;
  if (sx < 0 || sy < 0 || gx < 0 || gy < 0 || sx >= grid.width ||
      gx >= grid.width || sy >= grid.height || gy >= grid.height)
    return out;
  if (grid.is_blocked(sx, sy) || grid.is_blocked(gx, gy)) return out;

  const auto idx = [&](int x, int y) { return std::size_t(y) * grid.width + x; };
  const auto h = [&](int x, int y) {
    return std::hypot(double(x - gx), double(y - gy));
  };
  std::vector<double> dist(std::size_t(grid.width) * grid.height, kBigCost);
  std::vector<int> prev(dist.size(), -1);
  using QItem = std::pair<double, std::size_t>;
  std::priority_queue<QItem, std::vector<QItem>, std::greater<>> open;
  dist[idx(sx, sy)] = 0.0;
  open.push({h(sx, sy), idx(sx, sy)});
  const std::size_t goal = idx(gx, gy);
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (u == goal) break;
    const int ux = int(u % grid.width), uy = int(u / grid.width);
    if (f > dist[u] + h(ux, uy) + 1e-12) continue;
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = ux + dx, ny = uy + dy;
        if (nx < 0 || ny < 0 || nx >= grid.width || ny >= grid.height) continue;
        if (grid.is_blocked(nx, ny)) continue;
        const double nd = dist[u] + std::hypot(double(dx), double(dy));
        if (nd < dist[idx(nx, ny)]) {
          dist[idx(nx, ny)] = nd;
          prev[idx(nx, ny)] = int(u);
          open.push({nd + h(nx, ny), idx(nx, ny)});
        }
      }
  }
  if (dist[goal] >= kBigCost) return out;
  out.reachable = true;
  out.cost = dist[goal];
  for (int u = int(goal); u != -1; u = prev[u])
    out.points.push_back(Vec3(u % grid.width, u / grid.width, 0.0));
  std::reverse(out.points.begin(), out.points.end());
  return out;
}

std::vector<int> solve_tsp(const std::vector<std::vector<double>>& cost,
                           int start_index) {
  const int n = int(cost.size());
  assert(n >= 1 && start_index >= 0 && start_index < n);
  const auto c = [&](int a, int b) {
    const double v = cost[a][b];
    return std::isfinite(v) ? v : kBigCost;
  };

  // Nearest-neighbor construction.
  std::vector<int> order{start_index};
  std::vector<char> used(n, 0);
  used[start_index] = 1;
  while (int(order.size()) < n) {
    int best = -1;
    double best_c = kBigCost * 2;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      const double v = c(order.back(), i);
      if (v < best_c) {
        best_c = v;
        best = i;
      }
    }
    used[best] = 1;
    order.push_back(best);
  }

  // 2-opt plus Or-opt (relocation of short segments) on the open path; the
  // start stays fixed. Repeat until neither move improves the tour.
  const auto path_cost = [&](const std::vector<int>& o) {
    double t = 0.0;
    for (int k = 1; k < n; ++k) t += c(o[std::size_t(k) - 1], o[k]);
    return t;
  };
  bool improved = true;
  while (improved) {
    improved = false;
    for (int i = 1; i + 1 < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double delta = c(order[i - 1], order[j]) - c(order[i - 1], order[i]);
        if (j + 1 < n)
          delta += c(order[i], order[j + 1]) - c(order[j], order[j + 1]);
        if (delta < -1e-12) {
          std::reverse(order.begin() + i, order.begin() + j + 1);
          improved = true;
        }
      }
    }
    // Or-opt: move a run of 1..3 consecutive nodes elsewhere in the path.
    double cur = path_cost(order);
    for (int len = 1; len <= 3 && !improved; ++len) {
      for (int i = 1; i + len - 1 < n && !improved; ++i) {
        const int j = i + len - 1;  // segment [i, j]
        for (int k = 0; k < n && !improved; ++k) {
          if (k >= i - 1 && k <= j) continue;  // no-op or inside the segment
          std::vector<int> cand = order;
          std::vector<int> seg(cand.begin() + i, cand.begin() + j + 1);
          cand.erase(cand.begin() + i, cand.begin() + j + 1);
          const int kk = k > j ? k - len : k;
          cand.insert(cand.begin() + kk + 1, seg.begin(), seg.end());
          if (path_cost(cand) < cur - 1e-12) {
            order = std::move(cand);
            improved = true;
          }
        }
      }
    }
  }
  return order;
}

std::vector<Vec3> polyline_box_intersections(const std::vector<Vec3>& path,
                                             const AABB& box, double inset) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec3 a = path[i], b = path[i + 1];
    const Vec3 d = b - a;
    double t0 = 0.0, t1 = 1.0;
    bool miss = false;
    for (int ax = 0; ax < 3 && !miss; ++ax) {
      if (std::abs(d[ax]) < 1e-12) {
        if (a[ax] < box.lo[ax] || a[ax] > box.hi[ax]) miss = true;
        continue;
      }
      double ta = (box.lo[ax] - a[ax]) / d[ax];
      double tb = (box.hi[ax] - a[ax]) / d[ax];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) miss = true;
    }
    if (miss) continue;
    const double len = d.norm();
    if (len < 1e-9) continue;
    const double dt = inset / len;
    const bool enters = t0 > 0.0;
    const bool exits = t1 < 1.0;
    if (enters) out.push_back(a + std::min(t0 + dt, 1.0) * d);
    if (exits) out.push_back(a + std::max(t1 - dt, 0.0) * d);
  }
  // Deduplicate near-identical crossings.
  std::vector<Vec3> dedup;
  for (const Vec3& p : out) {
    bool close = false;
    for (const Vec3& q : dedup)
      if ((p - q).norm() < 0.25) {
        close = true;
        break;
      }
    if (!close) dedup.push_back(p);
  }
  return dedup;
}

void Planner::note_capture(const Vec3& position, double yaw) {
  captured_.push_back({position, wrap_angle(yaw), 0.0});
}

bool Planner::bin_suppressed(const Vec3& position, double bin_yaw) const {
  const double half_sector =
      0.5 * (gain_cam_.horizontal_fov() + 2.0 * M_PI / cfg_.yaw_bins);
  for (const Pose& cap : captured_) {
    if ((cap.position - position).head<2>().norm() > cfg_.suppression_radius)
      continue;
    if (std::abs(wrap_angle(bin_yaw - cap.yaw)) < half_sector) return true;
  }
  return false;
}

AABB Planner::local_horizon(const VoxelGrid& grid, const Vec3& position) const {
  const double h = 0.5 * cfg_.horizon_xy;
  AABB grid_box{grid.origin(),
                grid.origin() +
                    grid.resolution() * grid.dims().cast<double>().eval()};
  AABB horizon{Vec3(position.x() - h, position.y() - h, grid_box.lo.z()),
               Vec3(position.x() + h, position.y() + h, grid_box.hi.z())};
  return horizon.intersect(grid_box);
}

std::vector<Vec3> Planner::sample_viewpoints(const VoxelGrid& grid,
                                             const AABB& horizon,
                                             const std::vector<Vec3>& existing) {
  std::vector<Vec3> samples;
  const int max_tries = cfg_.max_candidates * 40;
  for (int t = 0; t < max_tries && int(samples.size()) < cfg_.max_candidates;
       ++t) {
    Vec3 p(rng_.uniform(horizon.lo.x(), horizon.hi.x()),
           rng_.uniform(horizon.lo.y(), horizon.hi.y()), sensor_height_);
    if (grid.state_at(p) != VoxelState::Free) continue;
    bool spaced = true;
    for (const Vec3& q : samples)
      if ((p - q).head<2>().norm() < cfg_.min_view_spacing) {
        spaced = false;
        break;
      }
    (void)existing;
    if (spaced) samples.push_back(p);
  }
  return samples;
}

GlobalPlan Planner::plan_global(const VoxelGrid& grid,
                                SubspacePartition& partition,
                                const Roadmap& roadmap, const Pose& current) {
  GlobalPlan plan;
  const auto& states = partition.classify(grid);
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < states.size(); ++i)
    if (states[i] == SubspaceState::Reconstructing) targets.push_back(i);
  if (targets.empty()) return plan;

  const double attach_radius = std::max(cfg_.connect_radius, 3.0);

  // A subspace still being reconstructed may have its center in unobserved
  // space, unreachable by the roadmap. In that case route to a surrogate
  // goal instead: march from the nearest roadmap node toward the center
  // through known-free space and stop at the frontier (capped so the goal
  // can still attach to that node).
  const auto approach_point = [&](Vec3 c) -> Vec3 {
    if (attach(roadmap, grid, c, attach_radius) >= 0) return c;
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < int(roadmap.nodes.size()); ++i) {
      const double d = (roadmap.nodes[i] - c).norm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    if (nearest < 0) return c;
    const Vec3 node = roadmap.nodes[nearest];
    Vec3 dir = c - node;
    dir.z() = 0.0;
    const double len = dir.norm();
    if (len < 1e-9) return node;
    dir /= len;
    const double step = grid.resolution();
    Vec3 goal = node;
    const double reach = std::min(len, attach_radius - step);
    for (double t = step; t <= reach; t += step) {
      const Vec3 p = node + t * dir;
      if (!segment_free(grid, node, p)) break;
      goal = p;
    }
    return goal;
  };

  std::vector<Vec3> pts{current.position};
  for (std::size_t t : targets) {
    Vec3 c = partition.cuboid_center(grid, t);
    c.z() = sensor_height_;
    pts.push_back(approach_point(c));
  }
  const int n = int(pts.size());
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, kUnreachable));
  std::vector<std::vector<PathResult>> paths(n, std::vector<PathResult>(n));
  for (int a = 0; a < n; ++a) {
    cost[a][a] = 0.0;
    for (int b = a + 1; b < n; ++b) {
      PathResult r = shortest_path(roadmap, grid, pts[a], pts[b], attach_radius);
      if (r.reachable) {
        cost[a][b] = cost[b][a] = r.cost;
        paths[a][b] = r;
        PathResult rev = r;
        std::reverse(rev.points.begin(), rev.points.end());
        paths[b][a] = rev;
      }
    }
  }

  const std::vector<int> order = solve_tsp(cost, 0);
  plan.path.push_back(current.position);
  for (std::size_t k = 1; k < order.size(); ++k) {
    const int a = order[k - 1], b = order[k];
    plan.subspace_order.push_back(targets[std::size_t(b) - 1]);
    plan.leg_costs.push_back(cost[a][b]);
    if (!std::isfinite(cost[a][b]) || cost[a][b] >= kBigCost) break;
    for (const Vec3& p : paths[a][b].points)
      if ((p - plan.path.back()).norm() > 1e-9) plan.path.push_back(p);
  }
  return plan;
}

std::vector<int> Planner::filter_candidates(
    const std::vector<double>& gains, const std::vector<char>& is_intersection,
    double g_thres) {
  std::vector<int> keep;
  for (int i = 0; i < int(gains.size()); ++i) {
    if (gains[i] < g_thres && !is_intersection[i]) continue;
    keep.push_back(i);
  }
  return keep;
}

std::vector<Pose> Planner::select_local_views(const GlobalPlan& global,
                                              const Pose& current,
                                              const GaussianMap& map,
                                              const VoxelGrid& grid,
                                              std::vector<GainRecord>* records) {
  const AABB horizon = local_horizon(grid, current.position);

  std::vector<Vec3> positions;
  std::vector<char> is_intersection;
  for (const Vec3& p : polyline_box_intersections(global.path, horizon, 0.3)) {
    Vec3 q = p;
    q.z() = sensor_height_;
    if (grid.state_at(q) != VoxelState::Free) continue;
    positions.push_back(q);
    is_intersection.push_back(1);
  }
  for (const Vec3& p : sample_viewpoints(grid, horizon, positions)) {
    positions.push_back(p);
    is_intersection.push_back(0);
  }
  if (positions.empty()) return {};

  double lambda_o = 0.0;
  switch (variant_) {
    case Variant::V1Tare:
    case Variant::V2Coverage:
      lambda_o = 0.0;
      break;
    case Variant::V3Quality:
    case Variant::V4Both:
      lambda_o = 1.0;
      break;
    case Variant::V5Adaptive:
      lambda_o = observed_fraction(grid, horizon).value_or(0.0);
      break;
  }
  const bool want_cov =
      variant_ != Variant::V3Quality;
  const bool want_qual = variant_ == Variant::V3Quality ||
                         variant_ == Variant::V4Both ||
                         variant_ == Variant::V5Adaptive;

  const int B = cfg_.yaw_bins;
  const std::size_t nc = positions.size();
  std::vector<std::vector<double>> cov(nc, std::vector<double>(B, 0.0));
  std::vector<std::vector<double>> qual(nc, std::vector<double>(B, 0.0));
  double max_cov = 0.0, max_qual = 0.0;
  RenderConfig rcfg;
  for (std::size_t i = 0; i < nc; ++i) {
    for (int k = 0; k < B; ++k) {
      const Pose bin_pose{positions[i], bin_center_yaw(k, B), 0.0};
      if (variant_ == Variant::V1Tare) {
        cov[i][k] = voxel_coverage_gain(grid, bin_pose, gain_cam_);
        max_cov = std::max(max_cov, cov[i][k]);
        continue;
      }
      const bool do_qual =
          want_qual && !bin_suppressed(positions[i], bin_pose.yaw);
      if (!want_cov && !do_qual) continue;
      const FrameBundle bundle = bind_splats(map, bin_pose, gain_cam_, rcfg);
      if (want_cov) {
        cov[i][k] = coverage_gain(bundle, grid, bin_pose, gain_cam_, rcfg).total;
        max_cov = std::max(max_cov, cov[i][k]);
      }
      if (do_qual) {
        qual[i][k] = quality_gain(bundle, map, bin_pose, gain_cam_, cfg_.lambda,
                                  rcfg, cfg_.gain_params);
        max_qual = std::max(max_qual, qual[i][k]);
      }
    }
  }

  const double cov_scale =
      cfg_.normalize_gains && max_cov > cfg_.g_thres_abs ? 1.0 / max_cov : 1.0;
  const double qual_scale =
      cfg_.normalize_gains && max_qual > cfg_.g_thres_abs ? 1.0 / max_qual : 1.0;

  std::vector<GainRecord> recs(nc);
  double max_gain = 0.0;
  const double fov = gain_cam_.horizontal_fov();
  for (std::size_t i = 0; i < nc; ++i) {
    GainRecord& r = recs[i];
    r.lambda_o = lambda_o;
    r.bin_gains.resize(B);
    double best_cov = 0.0, best_qual = 0.0;
    for (int k = 0; k < B; ++k)
      r.bin_gains[k] =
          combined_gain(cov[i][k] * cov_scale, qual[i][k] * qual_scale, lambda_o);
    const YawChoice yc = best_yaw(r.bin_gains, fov);
    r.chosen_yaw = yc.yaw;
    r.combined = yc.window_gain;
    // Report the per-candidate coverage/quality at the chosen yaw window.
    const double bin_width = 2.0 * M_PI / B;
    const int w = std::max(1, int(std::ceil(fov / bin_width - 1e-9)));
    int s0 = int(std::lround(yc.yaw / bin_width - 0.5 * (w - 1)));
    for (int k = 0; k < w; ++k) {
      const int k2 = ((s0 + k) % B + B) % B;
      best_cov += cov[i][k2] * cov_scale;
      best_qual += qual[i][k2] * qual_scale;
    }
    r.coverage = best_cov;
    r.quality = best_qual;
    r.viewpoint = Pose{positions[i], yc.yaw, 0.0};
    max_gain = std::max(max_gain, r.combined);
  }

  const double g_thres =
      std::max(cfg_.g_thres_rel * max_gain, cfg_.g_thres_abs);
  std::vector<double> gains(nc);
  for (std::size_t i = 0; i < nc; ++i) gains[i] = recs[i].combined;
  const std::vector<int> keep =
      filter_candidates(gains, is_intersection, g_thres);

  std::vector<Pose> views;
  if (records) records->clear();
  for (int i : keep) {
    views.push_back(recs[i].viewpoint);
    if (records) records->push_back(recs[i]);
  }
  return views;
}

PlanCycleResult Planner::plan_cycle(const GaussianMap& map,
                                    const VoxelGrid& grid,
                                    SubspacePartition& partition,
                                    const Pose& current,
                                    const std::vector<Vec3>& trajectory) {
  PlanCycleResult res;

  auto t0 = std::chrono::steady_clock::now();
  Roadmap roadmap = build_roadmap(grid, trajectory, cfg_.roadmap_samples,
                                  cfg_.connect_radius, cfg_.inflation_radius,
                                  rng_, cfg_.trajectory_downsample);
  GlobalPlan global = plan_global(grid, partition, roadmap, current);
  for (std::size_t i = 0; i < partition.cuboid_count(); ++i)
    if (partition.cached_state(i) == SubspaceState::Reconstructing)
      ++res.reconstructing_subspaces;
  res.t_gp = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  res.selected_views =
      select_local_views(global, current, map, grid, &res.gains);
  res.candidate_count = int(res.selected_views.size());
  for (const GainRecord& r : res.gains)
    res.max_gain = std::max(res.max_gain, r.combined);
  res.t_ve = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  res.done = res.reconstructing_subspaces == 0 && res.selected_views.empty();
  if (res.done) {
    res.t_lp = seconds_since(t0);
    return res;
  }

  // Local path: TSP through the selected views from the current pose, with
  // straight-line legs where free and roadmap legs otherwise.
  const auto leg = [&](const Vec3& a, const Vec3& b) -> PathResult {
    if (segment_free(grid, a, b)) {
      PathResult r;
      r.reachable = true;
      r.cost = (b - a).norm();
      r.points = {a, b};
      return r;
    }
    return shortest_path(roadmap, grid, a, b,
                         std::max(cfg_.connect_radius, 2.0));
  };

  std::vector<Pose> ordered;
  if (!res.selected_views.empty()) {
    const int n = int(res.selected_views.size()) + 1;
    std::vector<Vec3> pts{current.position};
    for (const Pose& v : res.selected_views) pts.push_back(v.position);
    std::vector<std::vector<double>> cost(n,
                                          std::vector<double>(n, kUnreachable));
    for (int a = 0; a < n; ++a) {
      cost[a][a] = 0.0;
      for (int b = a + 1; b < n; ++b) {
        const PathResult r = leg(pts[a], pts[b]);
        if (r.reachable) cost[a][b] = cost[b][a] = r.cost;
      }
    }
    const std::vector<int> order = solve_tsp(cost, 0);

    res.merged_path.push_back(current.position);
    for (std::size_t k = 1; k < order.size(); ++k) {
      const int a = order[k - 1], b = order[k];
      if (!std::isfinite(cost[a][b])) break;
      const PathResult r = leg(pts[a], pts[b]);
      if (!r.reachable) break;
      for (const Vec3& p : r.points)
        if ((p - res.merged_path.back()).norm() > 1e-9)
          res.merged_path.push_back(p);
      ordered.push_back(res.selected_views[std::size_t(b) - 1]);
      if (res.next_view_index < 0)
        res.next_view_index = int(res.merged_path.size()) - 1;
    }
    res.selected_views = ordered;
  }

  // Continuation toward the global tour.
  if (!global.path.empty()) {
    const Vec3 from =
        res.merged_path.empty() ? current.position : res.merged_path.back();
    if (res.merged_path.empty()) res.merged_path.push_back(from);
    const Vec3 target = global.path.back();
    const PathResult r = leg(from, target);
    if (r.reachable) {
      for (const Vec3& p : r.points)
        if ((p - res.merged_path.back()).norm() > 1e-9)
          res.merged_path.push_back(p);
    }
  }

  if (res.merged_path.size() <= 1 && res.selected_views.empty()) {
    // Boxed in: nothing reachable although work remains.
    res.incomplete = true;
  }
  res.t_lp = seconds_since(t0);
  return res;
}

}  // namespace splatplan
