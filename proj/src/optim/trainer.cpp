#include "splatsim/optim/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "splatsim/common/error.hpp"

namespace splatsim::optim {
namespace {

using Vec1 = Eigen::Matrix<double, 1, 1>;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

constexpr double kLogitClamp = 15.0;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-15;

template <typename V>
struct AdamState {
  std::vector<V> m, v;

  void reset(std::size_t n) {
    m.assign(n, V::Zero());
    v.assign(n, V::Zero());
  }

  void step(std::vector<V>& param, const std::vector<V>& grad, double lr, int t) {
    const double c1 = 1.0 - std::pow(kAdamBeta1, t), c2 = 1.0 - std::pow(kAdamBeta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
      m[i] = kAdamBeta1 * m[i] + (1 - kAdamBeta1) * grad[i];
      v[i] = kAdamBeta2 * v[i] + (1 - kAdamBeta2) * grad[i].cwiseProduct(grad[i]);
      const V mhat = m[i] / c1;
      const V vhat = v[i] / c2;
      param[i] -= lr * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + kAdamEps).matrix());
    }
  }

  void remap(const std::vector<std::size_t>& source, const std::vector<std::uint8_t>& fresh) {
    std::vector<V> nm(source.size()), nv(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      nm[i] = fresh[i] ? V::Zero().eval() : m[source[i]];
      nv[i] = fresh[i] ? V::Zero().eval() : v[source[i]];
    }
    m = std::move(nm);
    v = std::move(nv);
  }
};

/// Unconstrained parameterization that Adam acts on.
struct RawParams {
  std::vector<Vec3> mean;
  std::vector<Vec4> rotation;
  std::vector<Vec3> log_scale;
  std::vector<Vec1> logit_opacity;
  std::vector<Vec3> color;

  static RawParams from(const splat::SplatSet& set) {
    RawParams p;
    for (const auto& s : set.splats) {
      p.mean.push_back(s.mean);
      p.rotation.push_back(s.rotation.normalized());
      p.log_scale.push_back(s.scales.array().log().matrix());
      p.logit_opacity.push_back(Vec1(std::clamp(logit(s.opacity), -kLogitClamp, kLogitClamp)));
      p.color.push_back(s.color);
    }
    return p;
  }

  [[nodiscard]] splat::SplatSet to_splats() const {
    splat::SplatSet set;
    set.splats.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      auto& s = set.splats[i];
      s.mean = mean[i];
      s.rotation = rotation[i];
      s.scales = log_scale[i].array().exp().matrix();
      s.opacity = sigmoid(logit_opacity[i][0]);
      s.color = color[i];
    }
    return set;
  }
};

struct Optimizer {
  AdamState<Vec3> mean, log_scale, color;
  AdamState<Vec4> rotation;
  AdamState<Vec1> opacity;

  void reset(std::size_t n) {
    mean.reset(n);
    log_scale.reset(n);
    color.reset(n);
    rotation.reset(n);
    opacity.reset(n);
  }

  void remap(const DensifyResult& d) {
    mean.remap(d.source, d.fresh);
    log_scale.remap(d.source, d.fresh);
    color.remap(d.source, d.fresh);
    rotation.remap(d.source, d.fresh);
    opacity.remap(d.source, d.fresh);
  }
};

double mean_learning_rate(const LearningRates& lr, int it, int total) {
  const double t = total > 1 ? std::clamp(static_cast<double>(it) / (total - 1), 0.0, 1.0) : 0.0;
  return std::exp((1 - t) * std::log(lr.mean_initial) + t * std::log(lr.mean_final));
}

double psnr_of(const ImageD& a, const ImageD& b) {
  double se = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = std::clamp(a.data[i], 0.0, 1.0) - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.data.size());
  return mse > 0 ? -10.0 * std::log10(mse) : 100.0;
}

std::vector<ViewMetrics> evaluate_views(const splat::SplatSet& splats,
                                        const data::FrameDataset& ds,
                                        const std::vector<std::size_t>& which, const Vec3& bg,
                                        double& mean_psnr, double* mean_ssim) {
  std::vector<ViewMetrics> out;
  mean_psnr = 0;
  double ssim_sum = 0;
  for (const auto i : which) {
    auto m = evaluate_view(splats, ds.frames[i], bg);
    m.frame = i;
    mean_psnr += m.psnr;
    ssim_sum += m.ssim;
    out.push_back(m);
  }
  if (!out.empty()) {
    mean_psnr /= out.size();
    ssim_sum /= out.size();
  }
  if (mean_ssim) *mean_ssim = ssim_sum;
  return out;
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (cfg.iterations < 0) throw InvalidParameter("iterations must be non-negative");
  if (cfg.iterations > 0 && cfg.geometry && cfg.geometry_start >= cfg.iterations)
    throw InvalidParameter("geometry loss start iteration must be below the iteration count");
  if (cfg.geometry_start < 0) throw InvalidParameter("geometry start must be non-negative");
  if (cfg.densify.interval < 1) throw InvalidParameter("densify interval must be positive");
  if (!(cfg.densify.split_divisor > 1)) throw InvalidParameter("split divisor must exceed 1");
  if (!(cfg.densify.prune_opacity >= 0 && cfg.densify.prune_opacity < 1))
    throw InvalidParameter("prune opacity must be in [0,1)");
  const auto& lr = cfg.lr;
  for (double v : {lr.mean_initial, lr.mean_final, lr.rotation, lr.scale, lr.opacity, lr.color})
    if (!(v >= 0) || !std::isfinite(v)) throw InvalidParameter("learning rates must be finite and >= 0");
}

double camera_extent(const data::FrameDataset& ds) {
  if (ds.frames.empty()) return 1.0;
  Vec3 mean = Vec3::Zero();
  for (const auto& f : ds.frames) mean += f.camera.center();
  mean /= static_cast<double>(ds.frames.size());
  double r = 0;
  for (const auto& f : ds.frames) r = std::max(r, (f.camera.center() - mean).norm());
  return r > 1e-9 ? 1.1 * r : 1.0;
}

ViewMetrics evaluate_view(const splat::SplatSet& splats, const data::Frame& frame,
                          const Vec3& background) {
  splat::RenderOptions opts;
  opts.background = background;
  const auto r = splat::rasterize(splats, frame.camera, opts);
  ImageD clamped = r.color;
  for (auto& v : clamped.data) v = std::clamp(v, 0.0, 1.0);
  ViewMetrics m;
  m.psnr = psnr_of(clamped, frame.image);
  m.ssim = loss::ssim(clamped, frame.image);
  return m;
}

DensifyResult densify_and_prune(const splat::SplatSet& splats, const std::vector<double>& mean_grad,
                                const DensifyConfig& cfg, double extent, std::mt19937_64& rng) {
  if (mean_grad.size() != splats.size())
    throw DimensionMismatch("densify_and_prune: gradient count differs from splat count");
  DensifyResult out;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto emit = [&](const splat::Splat& s, std::size_t src, bool fresh) {
    out.splats.splats.push_back(s);
    out.source.push_back(src);
    out.fresh.push_back(fresh ? 1 : 0);
  };

  std::vector<std::uint8_t> keep(splats.size(), 1);
  std::vector<splat::Splat> added;
  std::vector<std::size_t> added_src;
  for (std::size_t i = 0; i < splats.size(); ++i) {
    if (!(mean_grad[i] > cfg.grad_threshold)) continue;
    if (splats.size() + added.size() >= cfg.max_splats) break;
    const auto& s = splats[i];
    if (s.scales.maxCoeff() <= cfg.clone_extent_fraction * extent) {
      added.push_back(s);
      added_src.push_back(i);
      ++out.cloned;
    } else {
      const Mat3 r = splat::rotation_matrix(s.rotation);
      for (int k = 0; k < 2; ++k) {
        splat::Splat child = s;
        const Vec3 offset(normal(rng) * s.scales.x(), normal(rng) * s.scales.y(),
                          normal(rng) * s.scales.z());
        child.mean = s.mean + r * offset;
        child.scales = s.scales / cfg.split_divisor;
        added.push_back(child);
        added_src.push_back(i);
      }
      keep[i] = 0;
      ++out.split;
    }
  }

  auto survives = [&](const splat::Splat& s) { return !(s.opacity < cfg.prune_opacity); };
  for (std::size_t i = 0; i < splats.size(); ++i) {
    if (!keep[i]) continue;
    if (!survives(splats[i])) {
      ++out.pruned;
      continue;
    }
    emit(splats[i], i, false);
  }
  for (std::size_t k = 0; k < added.size(); ++k) {
    if (!survives(added[k])) {
      ++out.pruned;
      continue;
    }
    emit(added[k], added_src[k], true);
  }
  return out;
}

TrainResult train(const data::FrameDataset& ds, const splat::SplatSet& init, const TrainConfig& cfg) {
  validate(cfg);
  if (ds.frames.empty() || ds.train.empty()) throw InvalidParameter("train: dataset has no training frames");
  if (init.empty()) throw InvalidParameter("train: empty initial splat set");
  for (const auto& s : init.splats) splat::validate(s);

  TrainResult result;
  const auto& eval_set = ds.test.empty() ? ds.train : ds.test;
  result.report.initial_views =
      evaluate_views(init, ds, eval_set, cfg.background, result.report.initial_psnr, nullptr);
  if (cfg.iterations == 0) {
    result.splats = init;
    result.report.final_views = result.report.initial_views;
    result.report.final_psnr = result.report.initial_psnr;
    evaluate_views(init, ds, eval_set, cfg.background, result.report.final_psnr,
                   &result.report.final_ssim);
    return result;
  }

  std::vector<FrameTargets> targets(ds.frames.size());
  for (const auto i : ds.train) targets[i] = prepare_targets(ds.frames[i]);

  const double extent = cfg.scene_extent > 0 ? cfg.scene_extent : camera_extent(ds);
  RawParams raw = RawParams::from(init);
  Optimizer adam;
  adam.reset(raw.mean.size());
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, ds.train.size() - 1);
  std::vector<double> grad_accum(raw.mean.size(), 0.0), grad_count(raw.mean.size(), 0.0);

  LossConfig lcfg;
  lcfg.weights = cfg.weights;
  lcfg.scale = cfg.scale_loss;
  lcfg.patch_size = cfg.patch_size;
  lcfg.patch_stride = cfg.patch_stride;
  lcfg.background = cfg.background;

  result.report.iterations.reserve(cfg.iterations);
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t fi = ds.train[pick(rng)];
    const auto& frame = ds.frames[fi];
    lcfg.geometry = cfg.geometry && it >= cfg.geometry_start;

    const splat::SplatSet current = raw.to_splats();
    const auto res = backward(current, frame.camera, targets[fi], lcfg);
    const double total = res.loss.total.value;
    if (!std::isfinite(total))
      throw Error("train: non-finite loss at iteration " + std::to_string(it) + " on frame '" +
                  frame.name + "'");
    result.report.iterations.push_back(
        {it, fi, res.loss.total.parts, total, current.size()});

    const auto& g = res.grads;
    const std::size_t n = current.size();
    std::vector<Vec3> g_log_scale(n);
    std::vector<Vec1> g_logit(n);
    for (std::size_t i = 0; i < n; ++i) {
      g_log_scale[i] = g.scales[i].cwiseProduct(current[i].scales);
      const double o = current[i].opacity;
      g_logit[i] = Vec1(g.opacity[i] * o * (1 - o));
    }
    const int t = it + 1;
    adam.mean.step(raw.mean, g.mean, mean_learning_rate(cfg.lr, it, cfg.iterations) * extent, t);
    adam.rotation.step(raw.rotation, g.rotation, cfg.lr.rotation, t);
    adam.log_scale.step(raw.log_scale, g_log_scale, cfg.lr.scale, t);
    adam.opacity.step(raw.logit_opacity, g_logit, cfg.lr.opacity, t);
    adam.color.step(raw.color, g.color, cfg.lr.color, t);
    for (std::size_t i = 0; i < n; ++i) {
      raw.rotation[i].normalize();
      raw.color[i] = raw.color[i].cwiseMax(0.0).cwiseMin(1.0);
      raw.logit_opacity[i][0] = std::clamp(raw.logit_opacity[i][0], -kLogitClamp, kLogitClamp);
    }

    const auto& dc = cfg.densify;
    if (dc.enabled && it < dc.stop) {
      for (std::size_t i = 0; i < n; ++i)
        if (res.render.projected[i].visible) {
          grad_accum[i] += g.screen_abs[i];
          grad_count[i] += 1;
        }
      if (it >= dc.start && (it + 1) % dc.interval == 0) {
        std::vector<double> mean_grad(n);
        for (std::size_t i = 0; i < n; ++i)
          mean_grad[i] = grad_count[i] > 0 ? grad_accum[i] / grad_count[i] : 0.0;
        const auto d = densify_and_prune(raw.to_splats(), mean_grad, dc, extent, rng);
        if (d.splats.empty()) throw Error("train: pruning removed every splat");
        adam.remap(d);
        raw = RawParams::from(d.splats);
        grad_accum.assign(raw.mean.size(), 0.0);
        grad_count.assign(raw.mean.size(), 0.0);
      }
    }
  }

  result.splats = raw.to_splats();
  result.report.final_views = evaluate_views(result.splats, ds, eval_set, cfg.background,
                                             result.report.final_psnr, &result.report.final_ssim);
  return result;
}

splat::SplatSet init_from_points(const std::vector<Vec3>& points, const std::vector<Vec3>& colors,
                                 double opacity) {
  if (points.empty()) throw InvalidParameter("init_from_points: no points");
  if (!colors.empty() && colors.size() != points.size())
    throw DimensionMismatch("init_from_points: color count differs from point count");
  Vec3 lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 span = (hi - lo).cwiseMax(1e-3);
  const double spacing = std::cbrt(span.prod() / static_cast<double>(points.size()));
  const double scale = std::max(1e-3, 0.5 * spacing);
  splat::SplatSet set;
  for (std::size_t i = 0; i < points.size(); ++i) {
    splat::Splat s;
    s.mean = points[i];
    s.scales = Vec3::Constant(scale);
    s.opacity = opacity;
    s.color = colors.empty() ? Vec3::Constant(0.5) : colors[i];
    set.splats.push_back(s);
  }
  return set;
}

splat::SplatSet init_random_box(std::size_t n, const Vec3& lo, const Vec3& hi, std::uint64_t seed) {
  if (n == 0) throw InvalidParameter("init_random_box: n must be positive");
  if ((hi.array() <= lo.array()).any()) throw InvalidParameter("init_random_box: empty box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts(n), cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = lo + Vec3(u(rng), u(rng), u(rng)).cwiseProduct(hi - lo);
    cols[i] = Vec3(u(rng), u(rng), u(rng));
  }
  return init_from_points(pts, cols);
}

}  // namespace splatsim::optim
