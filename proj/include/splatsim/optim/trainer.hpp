#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "splatsim/data/frames.hpp"
#include "splatsim/optim/backward.hpp"

namespace splatsim::optim {

struct LearningRates {
  double mean_initial = 1.6e-4;  // multiplied by the scene extent
  double mean_final = 1.6e-6;
  double rotation = 1e-3;
  double scale = 5e-3;           // on log-scales
  double opacity = 5e-2;         // on logit-opacities
  double color = 2.5e-3;
};

struct DensifyConfig {
  bool enabled = true;
  int interval = 100;
  int start = 500;
  int stop = 15000;
  double grad_threshold = 4e-4;   // mean absolute screen-space gradient, NDC units
  double prune_opacity = 0.005;
  double clone_extent_fraction = 0.01;  // clone when max scale <= fraction * extent
  double split_divisor = 1.6;
  std::size_t max_splats = 500000;
};

struct TrainConfig {
  int iterations = 30000;
  int geometry_start = 500;  // depth, normal and geo terms start here
  bool geometry = true;
  bool scale_loss = true;
  loss::LossWeights weights;
  LearningRates lr;
  DensifyConfig densify;
  std::uint64_t seed = 0;
  Vec3 background = Vec3::Zero();
  double scene_extent = 0;   // 0: derived from the training cameras
  int patch_size = 11;
  int patch_stride = 8;
};

void validate(const TrainConfig& cfg);

struct IterationLog {
  int iteration = 0;
  std::size_t frame = 0;
  loss::LossBreakdown parts;
  double total = 0;
  std::size_t splat_count = 0;
};

struct ViewMetrics {
  std::size_t frame = 0;
  double psnr = 0;
  double ssim = 0;
};

struct TrainReport {
  std::vector<IterationLog> iterations;
  std::vector<ViewMetrics> initial_views;  // held-out views before training
  std::vector<ViewMetrics> final_views;    // held-out views after training
  double initial_psnr = 0, final_psnr = 0, final_ssim = 0;
};

struct TrainResult {
  splat::SplatSet splats;
  TrainReport report;
};

/// Optimizes `init` against the training frames. Deterministic for a fixed config.
TrainResult train(const data::FrameDataset& dataset, const splat::SplatSet& init,
                  const TrainConfig& cfg);

/// PSNR (peak 1) and SSIM of a render of `splats` against a frame's image.
ViewMetrics evaluate_view(const splat::SplatSet& splats, const data::Frame& frame,
                          const Vec3& background = Vec3::Zero());

/// 1.1 x the largest distance from a camera center to the mean center (1 if degenerate).
double camera_extent(const data::FrameDataset& dataset);

struct DensifyResult {
  splat::SplatSet splats;
  std::vector<std::size_t> source;  // input index each output splat came from
  std::vector<std::uint8_t> fresh;  // 1 for splats created by clone or split
  std::size_t cloned = 0, split = 0, pruned = 0;
};

/// Clones small and splits large splats whose mean absolute screen gradient exceeds the
/// threshold, then removes splats below the prune opacity.
DensifyResult densify_and_prune(const splat::SplatSet& splats, const std::vector<double>& mean_grad,
                                const DensifyConfig& cfg, double extent, std::mt19937_64& rng);

// ----- initialization

/// Isotropic splats at the given points; scale is half the mean point spacing.
splat::SplatSet init_from_points(const std::vector<Vec3>& points, const std::vector<Vec3>& colors,
                                 double opacity = 0.1);

/// `n` splats uniformly in an axis-aligned box with random colors.
splat::SplatSet init_random_box(std::size_t n, const Vec3& lo, const Vec3& hi, std::uint64_t seed);

/// Whitespace-separated "x y z [r g b]" lines; colors in [0,1] or 0..255. '#' starts a comment.
void read_point_cloud(const std::string& path, std::vector<Vec3>& points, std::vector<Vec3>& colors);

// ----- checkpoints

/// One JSON header line, then count x 14 little-endian float64 values per splat in the
/// order of kCheckpointFields.
inline constexpr const char* kCheckpointFields[14] = {
    "mean_x",  "mean_y",  "mean_z",  "rot_w",   "rot_x", "rot_y",   "rot_z",
    "scale_x", "scale_y", "scale_z", "opacity", "red",   "green",   "blue"};

void save_checkpoint(const std::string& path, const splat::SplatSet& splats);
splat::SplatSet load_checkpoint(const std::string& path);

}  // namespace splatsim::optim
