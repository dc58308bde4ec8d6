#pragma once

#include <vector>

#include "splatsim/data/frames.hpp"
#include "splatsim/losses/losses.hpp"
#include "splatsim/splat/rasterizer.hpp"

namespace splatsim::optim {

/// Per-splat gradients with respect to the natural parameters of splat::Splat. The rotation
/// gradient is taken with respect to the stored (possibly unnormalized) quaternion.
struct SplatGrads {
  std::vector<Vec3> mean;
  std::vector<Vec4> rotation;
  std::vector<Vec3> scales;
  std::vector<double> opacity;
  std::vector<Vec3> color;
  /// Norm of the per-pixel absolute screen-space mean gradients, in NDC units.
  std::vector<double> screen_abs;

  static SplatGrads zeros(std::size_t n);
  [[nodiscard]] std::size_t size() const { return mean.size(); }
};

/// Chains per-pixel map gradients through a forward render made with keep_records = true.
SplatGrads render_backward(const splat::SplatSet& splats, const splat::Camera& camera,
                           const splat::RenderOutput& forward, const loss::PixelGrads& pixel);

/// Supervision for one frame, precomputed once.
struct FrameTargets {
  ImageD image;
  ImageD depth;                  // predicted; empty disables depth-derived terms
  Mask ignore;                   // dynamic or depth-less pixels
  Mask dynamic;                  // dynamic pixels only (photometric mask)
  loss::PseudoNormals normals;
  ImageD geo_weights;
};

FrameTargets prepare_targets(const data::Frame& frame, int pca_radius = 2);

struct LossConfig {
  loss::LossWeights weights;
  bool geometry = true;  // depth, normal and geo terms
  bool scale = true;
  int patch_size = 11;
  int patch_stride = 8;
  Vec3 background = Vec3::Zero();
};

struct ActiveTerms {
  bool rgb = false, depth = false, normal = false, geo = false, scale = false;
};

struct LossEvaluation {
  loss::TotalLoss total;
  ActiveTerms active;
  loss::PixelGrads pixel;        // weighted
  std::vector<Vec3> scale_grad;  // weighted
};

/// Total loss of a render against frame targets. Terms whose support is empty are reported
/// inactive and contribute nothing.
LossEvaluation evaluate_loss(const splat::RenderOutput& render, const splat::SplatSet& splats,
                             const FrameTargets& targets, const LossConfig& cfg, bool with_grad);

struct BackwardResult {
  LossEvaluation loss;
  SplatGrads grads;
  splat::RenderOutput render;
};

/// Forward render, total loss and analytic gradients for every splat parameter.
BackwardResult backward(const splat::SplatSet& splats, const splat::Camera& camera,
                        const FrameTargets& targets, const LossConfig& cfg);

/// Forward-only total loss; used by gradient checks and reports.
double loss_value(const splat::SplatSet& splats, const splat::Camera& camera,
                  const FrameTargets& targets, const LossConfig& cfg);

}  // namespace splatsim::optim
