#pragma once

#include <vector>

#include "splatsim/common/image.hpp"
#include "splatsim/splat/splat.hpp"

namespace splatsim::loss {

/// Square patches of side `size` laid out on a regular stride, fully inside the image.
struct PatchGrid {
  int size = 11;
  int stride = 8;
  std::vector<std::pair<int, int>> origins;  // top-left (x, y)

  static PatchGrid make(int width, int height, int size = 11, int stride = 8);
};

/// Camera-frame unit normals estimated from a depth map, with a validity mask.
struct PseudoNormals {
  ImageD normal;  // 3 channels
  Mask valid;
};

/// dL/d(rendered map), one image per render output.
struct PixelGrads {
  ImageD color, depth, normal, alpha;

  static PixelGrads zeros(int width, int height);
};

struct RgbLoss {
  double value = 0;
  double l1 = 0;
  double ssim = 1;
  bool empty_support = false;  // every pixel masked; value is 0
};

/// 0.8 * L1 + 0.2 * (1 - SSIM) over pixels not set in `dyn_mask` (set = dynamic, excluded).
/// SSIM uses an 11x11 Gaussian window (sigma 1.5) with zero padding.
RgbLoss rgb_loss(const ImageD& rendered, const ImageD& target, const Mask* dyn_mask = nullptr,
                 ImageD* grad = nullptr);

/// Mean SSIM over unmasked pixels and channels; `grad` receives dSSIM/d(x).
double ssim(const ImageD& x, const ImageD& y, const Mask* dyn_mask = nullptr, ImageD* grad = nullptr);

inline constexpr double kNccStdFloor = 1e-6;

/// 1 - mean Pearson correlation over patches. Patches with a masked pixel or with either
/// standard deviation below kNccStdFloor are dropped; no patch left throws EmptySupport.
double ncc_depth_loss(const ImageD& rendered_depth, const ImageD& predicted_depth,
                      const PatchGrid& patches, const Mask* dyn_mask = nullptr,
                      ImageD* grad = nullptr);

/// 1 - coverage-weighted mean cosine similarity over valid pseudo-normal pixels:
///   1 - sum_p a_p cos(N_p, M_p) / sum_p a_p
/// where a_p is the rendered alpha. Reduces to the plain mean for fully covered pixels.
double normal_loss(const ImageD& rendered_normal, const ImageD& rendered_alpha,
                   const PseudoNormals& pseudo, ImageD* grad_normal = nullptr,
                   ImageD* grad_alpha = nullptr);

/// Same with unit coverage everywhere.
double normal_loss(const ImageD& rendered_normal, const PseudoNormals& pseudo);

/// Per-pixel weights 1 - |grad D| clamped to [0,1], with D min-max normalized to [0,1]
/// and forward differences (backward on the last row/column).
ImageD geo_weights(const ImageD& predicted_depth);

/// Weighted disagreement of normalized rendered normals between each pixel and its right
/// and bottom neighbors. Pair weight is w_p * a_p * a_q; empty weighted support gives 0.
double geo_consistency_loss(const ImageD& rendered_normal, const ImageD& rendered_alpha,
                            const ImageD& weights, ImageD* grad_normal = nullptr,
                            ImageD* grad_alpha = nullptr);

/// Convenience form: unit coverage, weights from the predicted depth.
double geo_consistency_loss(const ImageD& rendered_normal, const ImageD& predicted_depth);

/// Mean over splats of the smallest scale; `grad_scales` (resized) gets dL/dscales.
double scale_loss(const splat::SplatSet& splats, std::vector<Vec3>* grad_scales = nullptr);

struct LossWeights {
  double rgb = 1.0;
  double depth = 0.5;
  double normal = 0.1;
  double geo = 0.05;
  double scale = 10.0;
};

struct LossBreakdown {
  double rgb = 0, depth = 0, normal = 0, geo = 0, scale = 0;
};

struct TotalLoss {
  double value = 0;
  LossBreakdown parts;  // unweighted
};

TotalLoss total_loss(const LossBreakdown& parts, const LossWeights& weights = {});

/// PCA plane fit over the (2k+1)^2 neighborhood of each pixel's unprojected point.
PseudoNormals pseudo_normals_from_depth(const ImageD& depth, const splat::Camera& camera, int k = 2);

}  // namespace splatsim::loss
