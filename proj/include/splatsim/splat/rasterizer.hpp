#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "splatsim/common/image.hpp"
#include "splatsim/cull/culling.hpp"
#include "splatsim/splat/projection.hpp"

namespace splatsim::splat {

inline constexpr int kTileSize = 16;
/// Per-pixel compositing stops once transmittance drops below this.
inline constexpr double kTransmittanceStop = 1e-4;

/// One splat's contribution to one pixel, in compositing order.
struct BlendRecord {
  std::uint32_t splat = 0;  // index into RenderOutput::projected (== input splat index)
  double alpha = 0;         // o * G
  double gauss = 0;         // G
  double transmittance = 0; // T before this splat
};

/// Contributions for the pixels of one tile; offsets are indexed by the pixel's
/// row-major position inside the tile (tile-local), with one trailing sentinel.
struct TileRecords {
  std::vector<std::uint32_t> offsets;
  std::vector<BlendRecord> records;
};

struct TileBins {
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<std::vector<std::uint32_t>> lists;  // per tile, sorted near to far

  [[nodiscard]] const std::vector<std::uint32_t>& at(int tx, int ty) const {
    return lists[static_cast<std::size_t>(ty) * tiles_x + tx];
  }
};

struct RenderOptions {
  std::optional<cull::CullConfig> cull;
  bool keep_records = false;
  Vec3 background = Vec3::Zero();
};

struct RenderOutput {
  ImageD color;   // 3 channels
  ImageD depth;   // alpha-blended camera z, 0 where empty
  ImageD normal;  // 3 channels, camera frame, not renormalized
  ImageD alpha;   // accumulated opacity 1 - T_final
  std::vector<ProjectedSplat> projected;
  std::vector<std::uint8_t> culled;  // per input splat
  TileBins bins;
  std::vector<TileRecords> tiles;    // filled when keep_records
  Vec3 background = Vec3::Zero();
  std::size_t rendered_splats = 0;   // visible, not culled, binned to at least one tile
};

/// Bins visible splats into 16x16 tiles by their screen-space influence square; each list
/// is ordered by camera depth (ties broken by input index).
TileBins depth_sort_and_tile(const std::vector<ProjectedSplat>& projected,
                             const std::vector<std::uint8_t>& skip, int width, int height);

/// Front-to-back alpha compositing of color, depth, normal and alpha.
RenderOutput rasterize(const SplatSet& splats, const Camera& camera, const RenderOptions& opts = {});

/// Center of pixel (x, y) in image coordinates.
inline Vec2 pixel_center(int x, int y) { return Vec2(x + 0.5, y + 0.5); }

}  // namespace splatsim::splat
