#include "splatplan/sensor_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace splatplan {

bool Scene::inside_solid(const Vec3& p) const {
  for (const Box& b : boxes)
    if (b.bounds.contains(p)) return true;
  return false;
}

Scene Scene::parse(const std::string& text) {
  Scene scene;
  bool have_room = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "sensor_height") {
      if (!(ls >> scene.sensor_height))
        throw std::runtime_error("scene line " + std::to_string(lineno) +
                                 ": bad sensor_height");
    } else if (kind == "room" || kind == "box") {
      Box b;
      if (!(ls >> b.bounds.lo.x() >> b.bounds.lo.y() >> b.bounds.lo.z() >>
            b.bounds.hi.x() >> b.bounds.hi.y() >> b.bounds.hi.z() >>
            b.color.x() >> b.color.y() >> b.color.z()))
        throw std::runtime_error("scene line " + std::to_string(lineno) +
                                 ": expected 9 numbers after '" + kind + "'");
      if ((b.bounds.hi.array() <= b.bounds.lo.array()).any())
        throw std::runtime_error("scene line " + std::to_string(lineno) +
                                 ": degenerate box");
      if (kind == "room") {
        scene.room = b;
        have_room = true;
      } else {
        scene.boxes.push_back(b);
      }
    } else {
      throw std::runtime_error("scene line " + std::to_string(lineno) +
                               ": unknown directive '" + kind + "'");
    }
  }
  if (!have_room) throw std::runtime_error("scene file has no 'room' line");
  for (const Box& b : scene.boxes)
    if (!scene.room.bounds.contains(b.bounds.lo) ||
        !scene.room.bounds.contains(b.bounds.hi))
      throw std::runtime_error("scene box outside room bounds");
  return scene;
}

Scene Scene::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scene file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

namespace {

// Slab test. Returns [t_enter, t_exit] or nothing.
std::optional<std::pair<double, double>> ray_box(const AABB& b,
                                                 const Vec3& o,
                                                 const Vec3& d) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.lo[a] || o[a] > b.hi[a]) return std::nullopt;
      continue;
    }
    double ta = (b.lo[a] - o[a]) / d[a];
    double tb = (b.hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

}  // namespace

std::optional<SurfaceHit> raycast_scene(const Scene& scene, const Vec3& origin,
                                        const Vec3& dir, double max_range) {
  double best_t = max_range;
  const Vec3* best_color = nullptr;

  // Room interior: the ray leaves the room through a wall.
  if (auto span = ray_box(scene.room.bounds, origin, dir)) {
    const double t = span->second;
    if (t > 0.0 && t <= best_t) {
      best_t = t;
      best_color = &scene.room.color;
    }
  }
  for (const Box& b : scene.boxes) {
    if (auto span = ray_box(b.bounds, origin, dir)) {
      const double t = span->first > 0.0 ? span->first : span->second;
      if (t > 0.0 && t <= best_t) {
        best_t = t;
        best_color = &b.color;
      }
    }
  }
  if (!best_color) return std::nullopt;
  return SurfaceHit{best_t, *best_color};
}

RGBDFrame capture(const Scene& scene, const Pose& pose, const CameraModel& cam,
                  double noise_halfwidth, std::uint64_t seed) {
  if (!scene.inside_room(pose.position) || scene.inside_solid(pose.position))
    throw std::runtime_error("capture pose is not in free space");

  const CameraBasis basis = CameraBasis::from_pose(pose);
  Rng rng(seed);
  RGBDFrame f;
  f.width = cam.width;
  f.height = cam.height;
  f.pose = pose;
  f.color.assign(std::size_t(cam.width) * cam.height, Vec3::Zero());
  f.depth.assign(std::size_t(cam.width) * cam.height, cam.depth_sentinel());

  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 dir_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
      const double norm = dir_cam.norm();
      const Vec3 dir = (basis.right * dir_cam.x() + basis.down * dir_cam.y() +
                        basis.forward) /
                       norm;
      const std::size_t p = std::size_t(y) * cam.width + x;
      const auto hit = raycast_scene(scene, pose.position, dir,
                                     cam.far_plane * norm);
      if (!hit) continue;
      double z = hit->t / norm;  // radial -> z-depth
      if (noise_halfwidth > 0.0)
        z += rng.uniform(-noise_halfwidth, noise_halfwidth);
      f.depth[p] = std::max(z, 1e-6);
      f.color[p] = hit->color;
    }
  }
  return f;
}

namespace {

struct Face {
  Vec3 origin;   // corner
  Vec3 u, v;     // edge vectors spanning the face
  Vec3 color;
  double area;
};

void push_box_faces(std::vector<Face>& faces, const AABB& b, const Vec3& color) {
  const Vec3 e = b.extent();
  const auto add = [&](const Vec3& o, const Vec3& u, const Vec3& v) {
    faces.push_back({o, u, v, color, u.norm() * v.norm()});
  };
  add(b.lo, Vec3(e.x(), 0, 0), Vec3(0, e.y(), 0));                     // z-
  add(Vec3(b.lo.x(), b.lo.y(), b.hi.z()), Vec3(e.x(), 0, 0),
      Vec3(0, e.y(), 0));                                              // z+
  add(b.lo, Vec3(e.x(), 0, 0), Vec3(0, 0, e.z()));                     // y-
  add(Vec3(b.lo.x(), b.hi.y(), b.lo.z()), Vec3(e.x(), 0, 0),
      Vec3(0, 0, e.z()));                                              // y+
  add(b.lo, Vec3(0, e.y(), 0), Vec3(0, 0, e.z()));                     // x-
  add(Vec3(b.hi.x(), b.lo.y(), b.lo.z()), Vec3(0, e.y(), 0),
      Vec3(0, 0, e.z()));                                              // x+
}

}  // namespace

std::vector<SurfaceSample> sample_surface_points(const Scene& scene,
                                                 std::size_t n,
                                                 std::uint64_t seed) {
  std::vector<Face> faces;
  push_box_faces(faces, scene.room.bounds, scene.room.color);
  for (const Box& b : scene.boxes) push_box_faces(faces, b.bounds, b.color);

  std::vector<double> cdf(faces.size());
  double total = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    total += faces[i].area;
    cdf[i] = total;
  }

  Rng rng(seed);
  std::vector<SurfaceSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    const std::size_t fi =
        std::size_t(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
    const Face& face = faces[std::min(fi, faces.size() - 1)];
    const Vec3 p = face.origin + rng.uniform() * face.u + rng.uniform() * face.v;
    out.push_back({p, face.color});
  }
  return out;
}

namespace {

double box_surface_distance(const AABB& b, const Vec3& p) {
  if (b.contains(p)) {
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a)
      d = std::min({d, p[a] - b.lo[a], b.hi[a] - p[a]});
    return d;
  }
  const Vec3 q = p.cwiseMax(b.lo).cwiseMin(b.hi);
  return (p - q).norm();
}

}  // namespace

double distance_to_surface(const Scene& scene, const Vec3& p) {
  double d = box_surface_distance(scene.room.bounds, p);
  for (const Box& b : scene.boxes)
    d = std::min(d, box_surface_distance(b.bounds, p));
  return d;
}

}  // namespace splatplan
