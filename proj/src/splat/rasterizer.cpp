#include "splatsim/splat/rasterizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "splatsim/common/error.hpp"

namespace splatsim::splat {

TileBins depth_sort_and_tile(const std::vector<ProjectedSplat>& projected,
                             const std::vector<std::uint8_t>& skip, int width, int height) {
  TileBins bins;
  bins.tiles_x = (width + kTileSize - 1) / kTileSize;
  bins.tiles_y = (height + kTileSize - 1) / kTileSize;
  bins.lists.resize(static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y);

  std::vector<std::uint32_t> order;
  order.reserve(projected.size());
  for (std::uint32_t i = 0; i < projected.size(); ++i)
    if (projected[i].visible && !skip[i]) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (projected[a].depth != projected[b].depth) return projected[a].depth < projected[b].depth;
    return a < b;
  });

  for (const auto i : order) {
    const auto& ps = projected[i];
    const double x0 = ps.mean2d.x() - ps.radius, x1 = ps.mean2d.x() + ps.radius;
    const double y0 = ps.mean2d.y() - ps.radius, y1 = ps.mean2d.y() + ps.radius;
    if (x1 < 0 || y1 < 0 || x0 > width || y0 > height) continue;
    const int tx0 = std::max(0, static_cast<int>(std::floor(x0 / kTileSize)));
    const int ty0 = std::max(0, static_cast<int>(std::floor(y0 / kTileSize)));
    const int tx1 = std::min(bins.tiles_x - 1, static_cast<int>(std::floor(x1 / kTileSize)));
    const int ty1 = std::min(bins.tiles_y - 1, static_cast<int>(std::floor(y1 / kTileSize)));
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        bins.lists[static_cast<std::size_t>(ty) * bins.tiles_x + tx].push_back(i);
  }
  return bins;
}

namespace {

void render_tile(int tx, int ty, const std::vector<std::uint32_t>& list,
                 const std::vector<ProjectedSplat>& projected, const Camera& cam,
                 const RenderOptions& opts, RenderOutput& out, TileRecords* rec) {
  const int x0 = tx * kTileSize, y0 = ty * kTileSize;
  const int x1 = std::min(cam.width, x0 + kTileSize), y1 = std::min(cam.height, y0 + kTileSize);
  if (rec) {
    rec->offsets.assign(static_cast<std::size_t>(kTileSize) * kTileSize + 1, 0);
    rec->records.clear();
  }
  for (int ly = 0; ly < kTileSize; ++ly) {
    for (int lx = 0; lx < kTileSize; ++lx) {
      const int local = ly * kTileSize + lx;
      if (rec) rec->offsets[local] = static_cast<std::uint32_t>(rec->records.size());
      const int x = x0 + lx, y = y0 + ly;
      if (x >= x1 || y >= y1) continue;
      const Vec2 px = pixel_center(x, y);
      double t = 1.0;
      Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
      double depth = 0;
      for (const auto idx : list) {
        const auto& ps = projected[idx];
        const double dx = px.x() - ps.mean2d.x(), dy = px.y() - ps.mean2d.y();
        const double power =
            -0.5 * (ps.conic[0] * dx * dx + ps.conic[2] * dy * dy) - ps.conic[1] * dx * dy;
        if (power > 0) continue;
        const double g = std::exp(power);
        const double a = ps.opacity * g;
        if (a < kMinAlpha) continue;
        const double w = a * t;
        color += w * ps.color;
        depth += w * ps.depth;
        normal += w * ps.normal;
        if (rec) rec->records.push_back({idx, a, g, t});
        t *= 1.0 - a;
        if (t < kTransmittanceStop) break;
      }
      color += t * opts.background;
      for (int c = 0; c < 3; ++c) {
        out.color.at(x, y, c) = color[c];
        out.normal.at(x, y, c) = normal[c];
      }
      out.depth.at(x, y) = depth;
      out.alpha.at(x, y) = 1.0 - t;
    }
  }
  if (rec) rec->offsets.back() = static_cast<std::uint32_t>(rec->records.size());
}

}  // namespace

RenderOutput rasterize(const SplatSet& splats, const Camera& cam, const RenderOptions& opts) {
  validate(cam);
  if (splats.empty()) throw InvalidParameter("rasterize: empty splat set");

  RenderOutput out;
  out.background = opts.background;
  out.color = ImageD(cam.width, cam.height, 3);
  out.depth = ImageD(cam.width, cam.height, 1);
  out.normal = ImageD(cam.width, cam.height, 3);
  out.alpha = ImageD(cam.width, cam.height, 1);

  out.projected.resize(splats.size());
  out.culled.assign(splats.size(), 0);
  double threshold = 0;
  const bool culling = opts.cull && opts.cull->enabled;
  if (culling) {
    cull::validate(*opts.cull);
    threshold = cull::cull_threshold(*opts.cull, cam);
  }
  for (std::size_t i = 0; i < splats.size(); ++i) {
    validate(splats[i]);
    out.projected[i] = project_splat(splats[i], cam);
    if (culling && out.projected[i].visible && cull::should_cull(out.projected[i], threshold))
      out.culled[i] = 1;
  }

  out.bins = depth_sort_and_tile(out.projected, out.culled, cam.width, cam.height);
  {
    std::vector<std::uint8_t> seen(splats.size(), 0);
    for (const auto& l : out.bins.lists)
      for (auto i : l) seen[i] = 1;
    out.rendered_splats = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
  }

  const int ntiles = out.bins.tiles_x * out.bins.tiles_y;
  if (opts.keep_records) out.tiles.resize(ntiles);
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < ntiles; ++t) {
    const int tx = t % out.bins.tiles_x, ty = t / out.bins.tiles_x;
    render_tile(tx, ty, out.bins.lists[t], out.projected, cam, opts, out,
                opts.keep_records ? &out.tiles[t] : nullptr);
  }
  return out;
}

}  // namespace splatsim::splat
