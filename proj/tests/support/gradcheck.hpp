#pragma once

// Central-difference oracle for splat-parameter gradients of the total loss.

#include <cmath>
#include <random>
#include <string>

#include "splatsim/optim/backward.hpp"
#include "support/scenes.hpp"

namespace splatsim::testing {

inline constexpr int kParamsPerSplat = 14;

inline const char* param_name(int k) {
  static const char* names[kParamsPerSplat] = {"mean.x", "mean.y", "mean.z", "rot.w", "rot.x",
                                               "rot.y",  "rot.z",  "scale.0", "scale.1", "scale.2",
                                               "opacity", "color.r", "color.g", "color.b"};
  return names[k];
}

inline double& param_ref(Splat& s, int k) {
  if (k < 3) return s.mean[k];
  if (k < 7) return s.rotation[k - 3];
  if (k < 10) return s.scales[k - 7];
  if (k == 10) return s.opacity;
  return s.color[k - 11];
}

inline double analytic_ref(const optim::SplatGrads& g, std::size_t i, int k) {
  if (k < 3) return g.mean[i][k];
  if (k < 7) return g.rotation[i][k - 3];
  if (k < 10) return g.scales[i][k - 7];
  if (k == 10) return g.opacity[i];
  return g.color[i][k - 11];
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::size_t kinks_refined = 0;  // entries that passed only after the step refinement
  double worst_rel = 0;
  std::string first_failure;
};

/// Compares every parameter of every splat against central differences with step h.
/// Pass rule per entry: |a - n| <= rel * max(|a|, |n|) or |a - n| < abs_floor.
/// With `refine_kinks`, an entry that fails while its one-sided differences disagree (the loss
/// has a kink, such as a depth-order swap, inside [v - h, v + h]) is re-checked at h / 10 with
/// the same rule.
inline GradCheckResult check_gradients(const SplatSet& splats, const Camera& cam,
                                       const optim::FrameTargets& targets,
                                       const optim::LossConfig& cfg, double h = 1e-4,
                                       double rel = 1e-3, double abs_floor = 1e-6,
                                       bool refine_kinks = false) {
  const auto res = optim::backward(splats, cam, targets, cfg);
  GradCheckResult out;
  SplatSet work = splats;
  const double base = refine_kinks ? optim::loss_value(splats, cam, targets, cfg) : 0.0;
  const auto passes = [&](double ana, double num) {
    const double err = std::abs(ana - num);
    return err < abs_floor || err <= rel * std::max(std::abs(ana), std::abs(num));
  };
  for (std::size_t i = 0; i < splats.size(); ++i)
    for (int k = 0; k < kParamsPerSplat; ++k) {
      double& p = param_ref(work.splats[i], k);
      const double v = p;
      const auto at = [&](double x) {
        p = x;
        const double f = optim::loss_value(work, cam, targets, cfg);
        p = v;
        return f;
      };
      const double fp = at(v + h), fm = at(v - h);
      double num = (fp - fm) / (2 * h);
      const double ana = analytic_ref(res.grads, i, k);
      if (refine_kinks && !passes(ana, num)) {
        const double forward = (fp - base) / h, backward = (base - fm) / h;
        if (!passes(forward, backward)) {
          const double fine = (at(v + h / 10) - at(v - h / 10)) / (2 * h / 10);
          if (passes(ana, fine)) ++out.kinks_refined;
          num = fine;
        }
      }
      const double err = std::abs(ana - num);
      const double scale = std::max(std::abs(ana), std::abs(num));
      ++out.checked;
      if (err >= abs_floor) out.worst_rel = std::max(out.worst_rel, err / scale);
      if (!passes(ana, num)) {
        if (out.failed++ == 0)
          out.first_failure = "splat " + std::to_string(i) + " " + param_name(k) +
                              ": analytic " + std::to_string(ana) + " numeric " +
                              std::to_string(num);
      }
    }
  return out;
}

/// A random scene plus supervision rendered from an independently perturbed copy, so every
/// loss term is active and away from its minimum.
struct GradScene {
  SplatSet splats;
  Camera camera;
  optim::FrameTargets targets;
};

inline GradScene make_grad_scene(std::uint64_t seed, int n_splats = 18, int size = 32) {
  std::mt19937_64 rng(seed);
  GradScene s;
  s.camera = front_camera(size, size, size * 1.1);
  s.splats = random_scene(rng, n_splats);
  SplatSet reference = random_scene(rng, n_splats);
  const auto ref = splat::rasterize(reference, s.camera);
  data::Frame frame;
  frame.camera = s.camera;
  frame.image = ref.color;
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  for (auto& v : frame.image.data) v += noise(rng);
  frame.depth = ref.depth;
  for (auto& v : frame.depth.data) v = std::max(0.5, v) + 0.01 * noise(rng);
  s.targets = optim::prepare_targets(frame);
  return s;
}

/// Loss config isolating one term (index 0..4: rgb, depth, normal, geo, scale).
inline optim::LossConfig single_term(int term) {
  optim::LossConfig cfg;
  cfg.weights = {0, 0, 0, 0, 0};
  double* w[5] = {&cfg.weights.rgb, &cfg.weights.depth, &cfg.weights.normal, &cfg.weights.geo,
                  &cfg.weights.scale};
  *w[term] = 1.0;
  return cfg;
}

inline const char* term_name(int term) {
  static const char* names[5] = {"rgb", "depth", "normal", "geo", "scale"};
  return names[term];
}

}  // namespace splatsim::testing
