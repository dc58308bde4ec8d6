#include "splatsim/optim/backward.hpp"

#include <cmath>

#include "splatsim/common/error.hpp"

namespace splatsim::optim {
namespace {

using splat::ProjectedSplat;

/// d(R(q_hat))/d(q_hat) contracted with dL/dR.
Vec4 rotation_matrix_vjp(const Vec4& q, const Mat3& g) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 d;
  d[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
              z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  d[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
              w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  d[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
              y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return d;
}

/// Screen-space accumulators for one splat.
struct ScreenGrad {
  Vec3 conic = Vec3::Zero();  // d/d(a, b, c)
  Vec2 mean2d = Vec2::Zero();
  Vec2 mean2d_abs = Vec2::Zero();
  double depth = 0;
  Vec3 normal = Vec3::Zero();
};

void pixel_backward(const ProjectedSplat* projected, const splat::BlendRecord* rec, std::size_t n,
                    const Vec2& px, const Vec3& background, const Vec3& g_color, double g_depth,
                    const Vec3& g_normal, double g_alpha, SplatGrads& out,
                    std::vector<ScreenGrad>& screen) {
  if (n == 0) return;
  // Suffix features behind splat i, starting from the background.
  Vec3 b_color = background, b_normal = Vec3::Zero();
  double b_depth = 0, b_alpha = 0;
  for (std::size_t k = n; k-- > 0;) {
    const auto& r = rec[k];
    const auto& ps = projected[r.splat];
    const double w = r.alpha * r.transmittance;

    out.color[r.splat] += w * g_color;
    auto& sg = screen[r.splat];
    sg.depth += w * g_depth;
    sg.normal += w * g_normal;

    const double d_alpha =
        r.transmittance * (g_color.dot(ps.color - b_color) + g_depth * (ps.depth - b_depth) +
                           g_normal.dot(ps.normal - b_normal) + g_alpha * (1.0 - b_alpha));
    out.opacity[r.splat] += d_alpha * r.gauss;
    const double d_power = d_alpha * ps.opacity * r.gauss;

    const double dx = px.x() - ps.mean2d.x(), dy = px.y() - ps.mean2d.y();
    sg.conic += d_power * Vec3(-0.5 * dx * dx, -dx * dy, -0.5 * dy * dy);
    const Vec2 dm = d_power * Vec2(ps.conic[0] * dx + ps.conic[1] * dy,
                                   ps.conic[2] * dy + ps.conic[1] * dx);
    sg.mean2d += dm;
    sg.mean2d_abs += dm.cwiseAbs();

    b_color = r.alpha * ps.color + (1.0 - r.alpha) * b_color;
    b_depth = r.alpha * ps.depth + (1.0 - r.alpha) * b_depth;
    b_normal = r.alpha * ps.normal + (1.0 - r.alpha) * b_normal;
    b_alpha = r.alpha + (1.0 - r.alpha) * b_alpha;
  }
}

void splat_backward(std::size_t i, const splat::Splat& s, const ProjectedSplat& ps,
                    const ScreenGrad& sg, const splat::Camera& cam, SplatGrads& out) {
  const Mat3& wr = cam.rotation;
  // Conic (inverse dilated covariance) to covariance.
  Mat2 k;
  k << ps.conic[0], ps.conic[1], ps.conic[1], ps.conic[2];
  Mat2 gk;
  gk << sg.conic[0], 0.5 * sg.conic[1], 0.5 * sg.conic[1], sg.conic[2];
  const Mat2 g_cov2d = -k * gk * k;

  const Mat23& j = ps.jacobian;
  const Mat3 g_cov_cam = j.transpose() * g_cov2d * j;
  const Mat23 g_j = 2.0 * g_cov2d * j * ps.cov_cam;

  // Camera-frame position: projection Jacobian, screen mean and depth.
  const double x = ps.p_cam.x(), y = ps.p_cam.y(), z = ps.p_cam.z();
  const double iz = 1.0 / z, iz2 = iz * iz, iz3 = iz2 * iz;
  Vec3 g_p = Vec3::Zero();
  g_p.x() += g_j(0, 2) * (-cam.fx * iz2);
  g_p.y() += g_j(1, 2) * (-cam.fy * iz2);
  g_p.z() += g_j(0, 0) * (-cam.fx * iz2) + g_j(0, 2) * (2 * cam.fx * x * iz3) +
             g_j(1, 1) * (-cam.fy * iz2) + g_j(1, 2) * (2 * cam.fy * y * iz3);
  g_p.x() += sg.mean2d.x() * cam.fx * iz;
  g_p.y() += sg.mean2d.y() * cam.fy * iz;
  g_p.z() += -sg.mean2d.x() * cam.fx * x * iz2 - sg.mean2d.y() * cam.fy * y * iz2;
  g_p.z() += sg.depth;
  out.mean[i] += wr.transpose() * g_p;

  // World covariance to M = R S.
  const Mat3 g_cov = wr.transpose() * g_cov_cam * wr;
  const Mat3 m = ps.rot * s.scales.asDiagonal();
  const Mat3 g_m = 2.0 * g_cov * m;
  Mat3 g_r = g_m * s.scales.asDiagonal();
  for (int c = 0; c < 3; ++c) out.scales[i][c] += g_m.col(c).dot(ps.rot.col(c));

  // Normal is the world-to-camera rotated shortest axis, sign-flipped to face the camera.
  g_r.col(ps.normal_axis) += ps.normal_sign * (wr.transpose() * sg.normal);

  const double qn = s.rotation.norm();
  const Vec4 qhat = s.rotation / qn;
  const Vec4 g_qhat = rotation_matrix_vjp(qhat, g_r);
  out.rotation[i] += (g_qhat - qhat * qhat.dot(g_qhat)) / qn;

  out.screen_abs[i] = Vec2(sg.mean2d_abs.x() * 0.5 * cam.width,
                           sg.mean2d_abs.y() * 0.5 * cam.height).norm();
}

}  // namespace

SplatGrads SplatGrads::zeros(std::size_t n) {
  SplatGrads g;
  g.mean.assign(n, Vec3::Zero());
  g.rotation.assign(n, Vec4::Zero());
  g.scales.assign(n, Vec3::Zero());
  g.opacity.assign(n, 0.0);
  g.color.assign(n, Vec3::Zero());
  g.screen_abs.assign(n, 0.0);
  return g;
}

SplatGrads render_backward(const splat::SplatSet& splats, const splat::Camera& cam,
                           const splat::RenderOutput& fwd, const loss::PixelGrads& pixel) {
  if (fwd.tiles.size() != static_cast<std::size_t>(fwd.bins.tiles_x) * fwd.bins.tiles_y)
    throw InvalidParameter("render_backward: forward render has no blend records");
  if (fwd.projected.size() != splats.size())
    throw DimensionMismatch("render_backward: splat count differs from the forward render");
  require_same_size(fwd.color, pixel.color, "render_backward color grad");
  require_same_size(fwd.color, pixel.depth, "render_backward depth grad");
  require_same_size(fwd.color, pixel.normal, "render_backward normal grad");
  require_same_size(fwd.color, pixel.alpha, "render_backward alpha grad");

  SplatGrads out = SplatGrads::zeros(splats.size());
  std::vector<ScreenGrad> screen(splats.size());
  // Sequential over tiles: the accumulation order is fixed, so gradients are bit-stable.
  for (int ty = 0; ty < fwd.bins.tiles_y; ++ty)
    for (int tx = 0; tx < fwd.bins.tiles_x; ++tx) {
      const auto& tile = fwd.tiles[static_cast<std::size_t>(ty) * fwd.bins.tiles_x + tx];
      for (int ly = 0; ly < splat::kTileSize; ++ly)
        for (int lx = 0; lx < splat::kTileSize; ++lx) {
          const int x = tx * splat::kTileSize + lx, y = ty * splat::kTileSize + ly;
          if (x >= cam.width || y >= cam.height) continue;
          const int local = ly * splat::kTileSize + lx;
          const auto begin = tile.offsets[local], end = tile.offsets[local + 1];
          const Vec3 gc(pixel.color.at(x, y, 0), pixel.color.at(x, y, 1), pixel.color.at(x, y, 2));
          const Vec3 gn(pixel.normal.at(x, y, 0), pixel.normal.at(x, y, 1),
                        pixel.normal.at(x, y, 2));
          pixel_backward(fwd.projected.data(), tile.records.data() + begin, end - begin,
                         splat::pixel_center(x, y), fwd.background, gc, pixel.depth.at(x, y), gn,
                         pixel.alpha.at(x, y), out, screen);
        }
    }
  for (std::size_t i = 0; i < splats.size(); ++i)
    if (fwd.projected[i].visible && !fwd.culled[i])
      splat_backward(i, splats[i], fwd.projected[i], screen[i], cam, out);
  return out;
}

FrameTargets prepare_targets(const data::Frame& frame, int pca_radius) {
  FrameTargets t;
  t.image = frame.image;
  const int w = frame.image.width, h = frame.image.height;
  t.dynamic = frame.dynamic_mask.empty() ? Mask(w, h, 1, 0) : frame.dynamic_mask;
  require_same_size(t.image, t.dynamic, "prepare_targets mask");
  t.ignore = t.dynamic;
  if (frame.depth.empty()) return t;

  require_same_size(t.image, frame.depth, "prepare_targets depth");
  t.depth = frame.depth;
  ImageD usable = frame.depth;
  for (std::size_t i = 0; i < usable.pixels(); ++i) {
    const bool bad = !(frame.depth.data[i] > 0) || !std::isfinite(frame.depth.data[i]);
    if (bad) t.ignore.data[i] = 1;
    if (t.ignore.data[i]) usable.data[i] = std::numeric_limits<double>::quiet_NaN();
  }
  ImageD pca_depth = frame.depth;
  for (std::size_t i = 0; i < pca_depth.pixels(); ++i)
    if (t.ignore.data[i]) pca_depth.data[i] = 0;
  t.normals = loss::pseudo_normals_from_depth(pca_depth, frame.camera, pca_radius);
  if (w >= 2 && h >= 2) {
    t.geo_weights = loss::geo_weights(usable);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const bool bad = t.ignore.at(x, y) || (x + 1 < w && t.ignore.at(x + 1, y)) ||
                         (y + 1 < h && t.ignore.at(x, y + 1));
        if (bad) t.geo_weights.at(x, y) = 0;
      }
  }
  return t;
}

LossEvaluation evaluate_loss(const splat::RenderOutput& render, const splat::SplatSet& splats,
                             const FrameTargets& targets, const LossConfig& cfg, bool with_grad) {
  const int w = render.color.width, h = render.color.height;
  require_same_size(render.color, targets.image, "evaluate_loss");
  LossEvaluation ev;
  if (with_grad) ev.pixel = loss::PixelGrads::zeros(w, h);
  loss::LossBreakdown parts;
  const auto& lw = cfg.weights;

  {
    ImageD g;
    const auto rgb = loss::rgb_loss(render.color, targets.image, &targets.dynamic,
                                    with_grad ? &g : nullptr);
    ev.active.rgb = !rgb.empty_support;
    parts.rgb = rgb.value;
    if (with_grad && ev.active.rgb)
      for (std::size_t i = 0; i < g.data.size(); ++i) ev.pixel.color.data[i] = lw.rgb * g.data[i];
  }

  if (cfg.geometry && !targets.depth.empty()) {
    try {
      const auto patches = loss::PatchGrid::make(w, h, cfg.patch_size, cfg.patch_stride);
      ImageD g;
      parts.depth = loss::ncc_depth_loss(render.depth, targets.depth, patches, &targets.ignore,
                                         with_grad ? &g : nullptr);
      ev.active.depth = true;
      if (with_grad)
        for (std::size_t i = 0; i < g.data.size(); ++i) ev.pixel.depth.data[i] += lw.depth * g.data[i];
    } catch (const EmptySupport&) {
    }
    try {
      ImageD gn, ga;
      parts.normal = loss::normal_loss(render.normal, render.alpha, targets.normals,
                                       with_grad ? &gn : nullptr, with_grad ? &ga : nullptr);
      ev.active.normal = true;
      if (with_grad) {
        for (std::size_t i = 0; i < gn.data.size(); ++i) ev.pixel.normal.data[i] += lw.normal * gn.data[i];
        for (std::size_t i = 0; i < ga.data.size(); ++i) ev.pixel.alpha.data[i] += lw.normal * ga.data[i];
      }
    } catch (const EmptySupport&) {
    }
    if (!targets.geo_weights.empty()) {
      ImageD gn, ga;
      parts.geo = loss::geo_consistency_loss(render.normal, render.alpha, targets.geo_weights,
                                             with_grad ? &gn : nullptr, with_grad ? &ga : nullptr);
      ev.active.geo = true;
      if (with_grad) {
        for (std::size_t i = 0; i < gn.data.size(); ++i) ev.pixel.normal.data[i] += lw.geo * gn.data[i];
        for (std::size_t i = 0; i < ga.data.size(); ++i) ev.pixel.alpha.data[i] += lw.geo * ga.data[i];
      }
    }
  }

  if (cfg.scale) {
    parts.scale = loss::scale_loss(splats, with_grad ? &ev.scale_grad : nullptr);
    ev.active.scale = true;
    for (auto& g : ev.scale_grad) g *= lw.scale;
  }

  loss::LossWeights effective = lw;
  if (!ev.active.rgb) effective.rgb = 0;
  if (!ev.active.depth) effective.depth = 0;
  if (!ev.active.normal) effective.normal = 0;
  if (!ev.active.geo) effective.geo = 0;
  if (!ev.active.scale) effective.scale = 0;
  ev.total = loss::total_loss(parts, effective);
  return ev;
}

BackwardResult backward(const splat::SplatSet& splats, const splat::Camera& camera,
                        const FrameTargets& targets, const LossConfig& cfg) {
  BackwardResult res;
  res.render = splat::rasterize(splats, camera,
                                {.cull = std::nullopt, .keep_records = true, .background = cfg.background});
  res.loss = evaluate_loss(res.render, splats, targets, cfg, true);
  res.grads = render_backward(splats, camera, res.render, res.loss.pixel);
  if (res.loss.active.scale)
    for (std::size_t i = 0; i < splats.size(); ++i) res.grads.scales[i] += res.loss.scale_grad[i];
  return res;
}

double loss_value(const splat::SplatSet& splats, const splat::Camera& camera,
                  const FrameTargets& targets, const LossConfig& cfg) {
  const auto render = splat::rasterize(
      splats, camera, {.cull = std::nullopt, .keep_records = false, .background = cfg.background});
  return evaluate_loss(render, splats, targets, cfg, false).total.value;
}

}  // namespace splatsim::optim
