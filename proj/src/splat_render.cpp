#include "splatplan/splat_render.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace splatplan {

double opacity_at(const Gaussian& g, const Vec3& point) {
  const double d2 = (point - g.center).squaredNorm();
  return g.opacity * std::exp(-d2 / (2.0 * g.radius * g.radius));
}

std::optional<Splat2D> project(const Gaussian& g, const Pose& pose,
                               const CameraModel& cam) {
  assert(cam.valid());
  const CameraBasis basis = CameraBasis::from_pose(pose);
  const Vec3 rel = g.center - pose.position;
  const double zc = basis.forward.dot(rel);
  if (zc <= cam.near_plane || zc > cam.far_plane) return std::nullopt;

  const double xc = basis.right.dot(rel);
  const double yc = basis.down.dot(rel);
  Splat2D s;
  s.px = cam.cx + cam.fx * xc / zc;
  s.py = cam.cy + cam.fy * yc / zc;
  s.screen_radius = g.radius * cam.fx / zc;
  s.depth = zc;
  return s;
}

FrameBundle bind_splats(const GaussianMap& map, const Pose& pose,
                        const CameraModel& cam, const RenderConfig& cfg) {
  FrameBundle b;
  b.width = cam.width;
  b.height = cam.height;
  b.visible.assign(map.size(), 0);
  b.pixels.resize(std::size_t(cam.width) * cam.height);

  b.splats.reserve(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    auto s = project(map[i], pose, cam);
    if (!s) continue;
    const double cut = cfg.cutoff_sigmas * s->screen_radius;
    if (s->px + cut < 0.0 || s->px - cut > cam.width - 1 ||
        s->py + cut < 0.0 || s->py - cut > cam.height - 1)
      continue;
    s->source_index = int(i);
    b.splats.push_back(*s);
    b.visible[i] = 1;
  }

  std::sort(b.splats.begin(), b.splats.end(),
            [](const Splat2D& a, const Splat2D& c) {
              if (a.depth != c.depth) return a.depth < c.depth;
              return a.source_index < c.source_index;
            });

  b.splat_colors.resize(b.splats.size());
  for (std::size_t i = 0; i < b.splats.size(); ++i)
    b.splat_colors[i] = map[b.splats[i].source_index].color;

  // Splats arrive in depth order, so per-pixel lists stay front-to-back.
  std::vector<double> trans(b.pixels.size(), 1.0);
  std::size_t active = b.pixels.size();
  for (int si = 0; si < int(b.splats.size()); ++si) {
    if (active == 0) break;  // every pixel saturated; the rest are occluded
    const Splat2D& s = b.splats[si];
    const Gaussian& g = map[s.source_index];
    const double sigma = std::max(s.screen_radius, 1e-12);
    const double cut = cfg.cutoff_sigmas * sigma;
    const double cut2 = cut * cut;
    // Pixel x samples the scene at coordinate x + 0.5 (pixel centers).
    const int x0 = std::max(0, int(std::ceil(s.px - cut - 0.5)));
    const int x1 = std::min(cam.width - 1, int(std::floor(s.px + cut - 0.5)));
    const int y0 = std::max(0, int(std::ceil(s.py - cut - 0.5)));
    const int y1 = std::min(cam.height - 1, int(std::floor(s.py + cut - 0.5)));
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int y = y0; y <= y1; ++y) {
      const double dy = double(y) + 0.5 - s.py;
      for (int x = x0; x <= x1; ++x) {
        const double dx = double(x) + 0.5 - s.px;
        const double r2 = dx * dx + dy * dy;
        if (r2 > cut2) continue;
        const std::size_t p = std::size_t(y) * cam.width + x;
        if (trans[p] < cfg.transmittance_floor) continue;
        const double gexp = std::exp(-r2 * inv2s2);
        const double alpha = g.opacity * gexp;
        b.pixels[p].push_back({si, alpha, gexp});
        trans[p] *= (1.0 - alpha);
        if (trans[p] < cfg.transmittance_floor) --active;
      }
    }
  }
  return b;
}

RenderedFrame composite(const FrameBundle& bundle, const CameraModel& cam,
                        const RenderConfig& cfg) {
  RenderedFrame f;
  f.width = bundle.width;
  f.height = bundle.height;
  const std::size_t n = bundle.pixels.size();
  f.color.assign(n, Vec3::Zero());
  f.depth.assign(n, cam.depth_sentinel());
  f.alpha.assign(n, 0.0);

  for (std::size_t p = 0; p < n; ++p) {
    double trans = 1.0;
    Vec3 col = Vec3::Zero();
    double dep = 0.0, acc_a = 0.0;
    for (const PixelContrib& c : bundle.pixels[p]) {
      if (trans < cfg.transmittance_floor) break;
      const double w = c.alpha * trans;
      col += w * bundle.splat_colors[c.splat];
      dep += w * bundle.splats[c.splat].depth;
      acc_a += w;
      trans *= (1.0 - c.alpha);
    }
    col += trans * cfg.background;
    f.color[p] = col;
    f.alpha[p] = acc_a;
    f.depth[p] = acc_a >= cfg.alpha_floor ? dep : cam.depth_sentinel();
  }
  return f;
}

RenderedFrame render(const GaussianMap& map, const Pose& pose,
                     const CameraModel& cam, const RenderConfig& cfg) {
  const std::uint64_t gen = map.generation();
  const FrameBundle b = bind_splats(map, pose, cam, cfg);
  RenderedFrame f = composite(b, cam, cfg);
  assert(map.generation() == gen);
  (void)gen;
  return f;
}

namespace {

// Gradients of the screen-space quantities (u, v, sigma) of one splat with
// respect to its world center and radius.
struct SplatGrad {
  Vec3 du_dc, dv_dc, dsigma_dc;
  double dsigma_dmu;
};

std::vector<SplatGrad> projection_gradients(const FrameBundle& b,
                                            const GaussianMap& map,
                                            const Pose& pose,
                                            const CameraModel& cam) {
  const CameraBasis basis = CameraBasis::from_pose(pose);
  std::vector<SplatGrad> grads(b.splats.size());
  for (std::size_t i = 0; i < b.splats.size(); ++i) {
    const Splat2D& s = b.splats[i];
    const Gaussian& g = map[s.source_index];
    const Vec3 rel = g.center - pose.position;
    const double zc = s.depth;
    const double xc = basis.right.dot(rel);
    const double yc = basis.down.dot(rel);
    const double inv_z2 = 1.0 / (zc * zc);
    SplatGrad& sg = grads[i];
    sg.du_dc = cam.fx * (basis.right * zc - xc * basis.forward) * inv_z2;
    sg.dv_dc = cam.fy * (basis.down * zc - yc * basis.forward) * inv_z2;
    sg.dsigma_dc = -g.radius * cam.fx * basis.forward * inv_z2;
    sg.dsigma_dmu = cam.fx / zc;
  }
  return grads;
}

}  // namespace

FisherDiag render_jacobian_sq(const GaussianMap& map, const Pose& pose,
                              const CameraModel& cam, const RenderConfig& cfg,
                              JacobianParams params) {
  return render_jacobian_sq(bind_splats(map, pose, cam, cfg), map, pose, cam,
                            cfg, params);
}

FisherDiag render_jacobian_sq(const FrameBundle& b, const GaussianMap& map,
                              const Pose& pose, const CameraModel& cam,
                              const RenderConfig& cfg, JacobianParams params) {
  FisherDiag out;
  out.values.assign(map.size() * kParamsPerGaussian, 0.0);
  out.visible.assign(b.visible.begin(), b.visible.end());

  const bool full = params == JacobianParams::All8;
  std::vector<SplatGrad> grads;
  if (full) grads = projection_gradients(b, map, pose, cam);

  std::vector<double> trans;
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const auto& contribs = b.pixels[std::size_t(y) * b.width + x];
      if (contribs.empty()) continue;
      const std::size_t m = contribs.size();

      trans.resize(m);
      double t = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        trans[i] = t;
        if (t < cfg.transmittance_floor) trans[i] = 0.0;
        t *= (1.0 - contribs[i].alpha);
      }

      // Backward sweep: acc = sum over later contributors (plus background)
      // of color * alpha * transmittance-excluding-this-splat.
      Vec3 acc = cfg.background;
      for (std::size_t k = m; k-- > 0;) {
        const PixelContrib& c = contribs[k];
        const Splat2D& s = b.splats[c.splat];
        const Vec3& col = b.splat_colors[c.splat];
        const double Ti = trans[k];
        const Vec3 dR_dalpha = Ti * (col - acc);
        acc = col * c.alpha + (1.0 - c.alpha) * acc;
        if (Ti == 0.0) continue;

        double* row =
            out.values.data() + std::size_t(s.source_index) * kParamsPerGaussian;
        const double w = c.alpha * Ti;
        row[3] += w * w;  // same weight for each color channel
        row[4] += w * w;
        row[5] += w * w;

        const double sA2 = dR_dalpha.squaredNorm();
        row[7] += sA2 * c.gexp * c.gexp;
        if (full) {
          const SplatGrad& sg = grads[c.splat];
          const double sigma = std::max(s.screen_radius, 1e-12);
          const double du = double(x) + 0.5 - s.px;
          const double dv = double(y) + 0.5 - s.py;
          const double inv_s2 = 1.0 / (sigma * sigma);
          const Vec3 dalpha_dc =
              c.alpha * (du * inv_s2 * sg.du_dc + dv * inv_s2 * sg.dv_dc +
                         (du * du + dv * dv) * inv_s2 / sigma * sg.dsigma_dc);
          const double dalpha_dmu =
              c.alpha * (du * du + dv * dv) * inv_s2 / sigma * sg.dsigma_dmu;
          row[0] += sA2 * dalpha_dc.x() * dalpha_dc.x();
          row[1] += sA2 * dalpha_dc.y() * dalpha_dc.y();
          row[2] += sA2 * dalpha_dc.z() * dalpha_dc.z();
          row[6] += sA2 * dalpha_dmu * dalpha_dmu;
        }
      }
    }
  }
  return out;
}

void accumulate_render_gradient(const FrameBundle& b, const GaussianMap& map,
                                const Pose& pose, const CameraModel& cam,
                                const RenderConfig& cfg,
                                std::span<const Vec3> dL_dcolor,
                                std::span<const double> dL_ddepth,
                                std::span<double> grad,
                                JacobianParams params) {
  assert(dL_dcolor.size() == b.pixels.size());
  assert(dL_ddepth.size() == b.pixels.size());
  assert(grad.size() == map.size() * kParamsPerGaussian);

  const CameraBasis basis = CameraBasis::from_pose(pose);
  const bool full = params == JacobianParams::All8;
  std::vector<SplatGrad> grads;
  if (full) grads = projection_gradients(b, map, pose, cam);

  std::vector<double> trans;
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) {
      const std::size_t p = std::size_t(y) * b.width + x;
      const auto& contribs = b.pixels[p];
      if (contribs.empty()) continue;
      const Vec3 gC = dL_dcolor[p];
      const double gD = dL_ddepth[p];
      if (gC.isZero(0.0) && gD == 0.0) continue;
      const std::size_t m = contribs.size();

      trans.resize(m);
      double t = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        trans[i] = t;
        if (t < cfg.transmittance_floor) trans[i] = 0.0;
        t *= (1.0 - contribs[i].alpha);
      }

      Vec3 accC = cfg.background;
      double accD = 0.0;
      for (std::size_t k = m; k-- > 0;) {
        const PixelContrib& c = contribs[k];
        const Splat2D& s = b.splats[c.splat];
        const Vec3& col = b.splat_colors[c.splat];
        const double Ti = trans[k];
        const double d_i = s.depth;
        // dL/dalpha_k through both the color and depth channels.
        const double g_alpha =
            Ti * (gC.dot(col - accC) + gD * (d_i - accD));
        accC = col * c.alpha + (1.0 - c.alpha) * accC;
        accD = d_i * c.alpha + (1.0 - c.alpha) * accD;
        if (Ti == 0.0) continue;

        double* row =
            grad.data() + std::size_t(s.source_index) * kParamsPerGaussian;
        const double w = c.alpha * Ti;
        row[3] += gC.x() * w;
        row[4] += gC.y() * w;
        row[5] += gC.z() * w;
        row[7] += g_alpha * c.gexp;
        if (full) {
          const SplatGrad& sg = grads[c.splat];
          const double sigma = std::max(s.screen_radius, 1e-12);
          const double du = double(x) + 0.5 - s.px;
          const double dv = double(y) + 0.5 - s.py;
          const double inv_s2 = 1.0 / (sigma * sigma);
          const Vec3 dalpha_dc =
              c.alpha * (du * inv_s2 * sg.du_dc + dv * inv_s2 * sg.dv_dc +
                         (du * du + dv * dv) * inv_s2 / sigma * sg.dsigma_dc);
          const double dalpha_dmu =
              c.alpha * (du * du + dv * dv) * inv_s2 / sigma * sg.dsigma_dmu;
          // Depth of the center also moves with the center along the optical axis.
          const Vec3 dc = g_alpha * dalpha_dc + gD * w * basis.forward;
          row[0] += dc.x();
          row[1] += dc.y();
          row[2] += dc.z();
          row[6] += g_alpha * dalpha_dmu;
        }
      }
    }
  }
}

}  // namespace splatplan
