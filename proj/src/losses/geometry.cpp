#include <algorithm>
#include <cmath>
#include <limits>

#include "splatsim/losses/losses.hpp"

namespace splatsim::loss {
namespace {

Vec3 pixel3(const ImageD& img, std::size_t i) {
  return Vec3(img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]);
}

void add3(ImageD& img, std::size_t i, const Vec3& v) {
  img.data[3 * i] += v.x();
  img.data[3 * i + 1] += v.y();
  img.data[3 * i + 2] += v.z();
}

constexpr double kTinyNorm = 1e-12;

}  // namespace

PatchGrid PatchGrid::make(int width, int height, int size, int stride) {
  if (size < 3 || size % 2 == 0) throw InvalidParameter("patch size must be odd and >= 3");
  if (stride < 1) throw InvalidParameter("patch stride must be positive");
  PatchGrid g;
  g.size = size;
  g.stride = stride;
  for (int y = 0; y + size <= height; y += stride)
    for (int x = 0; x + size <= width; x += stride) g.origins.emplace_back(x, y);
  return g;
}

PixelGrads PixelGrads::zeros(int width, int height) {
  return {ImageD(width, height, 3), ImageD(width, height, 1), ImageD(width, height, 3),
          ImageD(width, height, 1)};
}

double ncc_depth_loss(const ImageD& rendered, const ImageD& predicted, const PatchGrid& patches,
                      const Mask* mask, ImageD* grad) {
  require_same_size(rendered, predicted, "ncc_depth_loss");
  if (mask) require_same_size(rendered, *mask, "ncc_depth_loss mask");
  if (grad) *grad = ImageD(rendered.width, rendered.height, 1);
  const int k = patches.size;
  const int kk = k * k;

  struct Used {
    int x, y;
    double r, nx, ny;
  };
  std::vector<Used> used;
  double sum_r = 0;
  for (const auto& [ox, oy] : patches.origins) {
    if (ox + k > rendered.width || oy + k > rendered.height) continue;
    bool masked = false;
    double mx = 0, my = 0;
    for (int j = 0; j < k && !masked; ++j)
      for (int i = 0; i < k; ++i) {
        if (mask && mask->at(ox + i, oy + j)) {
          masked = true;
          break;
        }
        mx += rendered.at(ox + i, oy + j);
        my += predicted.at(ox + i, oy + j);
      }
    if (masked) continue;
    mx /= kk;
    my /= kk;
    double sxx = 0, syy = 0, sxy = 0;
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) {
        const double a = rendered.at(ox + i, oy + j) - mx, b = predicted.at(ox + i, oy + j) - my;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
      }
    const double nx = std::sqrt(sxx), ny = std::sqrt(syy);
    // population std = norm / K
    if (nx / k < kNccStdFloor || ny / k < kNccStdFloor || !std::isfinite(sxy)) continue;
    const double r = sxy / (nx * ny);
    sum_r += r;
    used.push_back({ox, oy, r, nx, ny});
  }
  if (used.empty()) throw EmptySupport("ncc_depth_loss: no usable patches");
  const double inv = 1.0 / static_cast<double>(used.size());
  if (grad) {
    for (const auto& p : used) {
      double mx = 0, my = 0;
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) {
          mx += rendered.at(p.x + i, p.y + j);
          my += predicted.at(p.x + i, p.y + j);
        }
      mx /= kk;
      my /= kk;
      for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) {
          const double a = rendered.at(p.x + i, p.y + j) - mx;
          const double b = predicted.at(p.x + i, p.y + j) - my;
          const double dr = b / (p.nx * p.ny) - p.r * a / (p.nx * p.nx);
          grad->at(p.x + i, p.y + j) -= inv * dr;
        }
    }
  }
  return 1.0 - sum_r * inv;
}

double normal_loss(const ImageD& rendered, const ImageD& alpha, const PseudoNormals& pseudo,
                   ImageD* grad_normal, ImageD* grad_alpha) {
  require_same_size(rendered, pseudo.normal, "normal_loss");
  require_same_size(rendered, alpha, "normal_loss alpha");
  require_same_size(rendered, pseudo.valid, "normal_loss mask");
  const std::size_t n = rendered.pixels();
  if (grad_normal) *grad_normal = ImageD(rendered.width, rendered.height, 3);
  if (grad_alpha) *grad_alpha = ImageD(rendered.width, rendered.height, 1);

  std::vector<double> cosines(n, 0.0);
  double sum = 0, weight = 0;
  bool any_valid = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (!pseudo.valid.data[i]) continue;
    any_valid = true;
    const Vec3 nr = pixel3(rendered, i);
    const Vec3 m = pixel3(pseudo.normal, i).normalized();
    const double len = nr.norm();
    cosines[i] = len > kTinyNorm ? nr.dot(m) / len : 0.0;
    sum += alpha.data[i] * cosines[i];
    weight += alpha.data[i];
  }
  if (!any_valid) throw EmptySupport("normal_loss: no valid pseudo-normal pixels");
  if (weight <= kTinyNorm) throw EmptySupport("normal_loss: no rendered coverage on valid pixels");
  const double mean = sum / weight;
  if (grad_normal || grad_alpha) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!pseudo.valid.data[i]) continue;
      if (grad_alpha) grad_alpha->data[i] = -(cosines[i] - mean) / weight;
      const Vec3 nr = pixel3(rendered, i);
      const double len = nr.norm();
      if (grad_normal && len > kTinyNorm) {
        const Vec3 m = pixel3(pseudo.normal, i).normalized();
        const Vec3 dcos = (m - cosines[i] * nr / len) / len;
        add3(*grad_normal, i, -(alpha.data[i] / weight) * dcos);
      }
    }
  }
  return 1.0 - mean;
}

double normal_loss(const ImageD& rendered, const PseudoNormals& pseudo) {
  return normal_loss(rendered, ImageD(rendered.width, rendered.height, 1, 1.0), pseudo);
}

ImageD geo_weights(const ImageD& depth) {
  const int w = depth.width, h = depth.height;
  if (w < 2 || h < 2) throw InvalidParameter("geo_weights: image smaller than 2x2");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const double d : depth.data)
    if (std::isfinite(d)) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  const double span = hi > lo ? hi - lo : 1.0;
  auto norm = [&](int x, int y) {
    const double d = depth.at(x, y);
    return std::isfinite(d) ? (d - lo) / span : 0.0;
  };
  ImageD weights(w, h, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = x + 1 < w ? norm(x + 1, y) - norm(x, y) : norm(x, y) - norm(x - 1, y);
      const double gy = y + 1 < h ? norm(x, y + 1) - norm(x, y) : norm(x, y) - norm(x, y - 1);
      weights.at(x, y) = std::clamp(1.0 - std::sqrt(gx * gx + gy * gy), 0.0, 1.0);
    }
  return weights;
}

double geo_consistency_loss(const ImageD& normal, const ImageD& alpha, const ImageD& weights,
                            ImageD* grad_normal, ImageD* grad_alpha) {
  require_same_size(normal, alpha, "geo_consistency_loss alpha");
  require_same_size(normal, weights, "geo_consistency_loss weights");
  const int w = normal.width, h = normal.height;
  if (w < 2 || h < 2) throw InvalidParameter("geo_consistency_loss: image smaller than 2x2");
  if (grad_normal) *grad_normal = ImageD(w, h, 3);
  if (grad_alpha) *grad_alpha = ImageD(w, h, 1);

  const std::size_t n = normal.pixels();
  std::vector<Vec3> unit(n);
  std::vector<double> len(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 v = pixel3(normal, i);
    len[i] = v.norm();
    unit[i] = len[i] > kTinyNorm ? Vec3(v / len[i]) : Vec3::Zero();
  }

  auto for_each_pair = [&](auto&& fn) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * w + x;
        if (x + 1 < w) fn(p, p + 1);
        if (y + 1 < h) fn(p, p + w);
      }
  };

  double num = 0, den = 0;
  for_each_pair([&](std::size_t p, std::size_t q) {
    const double pw = weights.data[p] * alpha.data[p] * alpha.data[q];
    num += pw * (1.0 - unit[p].dot(unit[q]));
    den += pw;
  });
  if (den <= kTinyNorm) return 0.0;
  const double loss = num / den;
  if (grad_normal || grad_alpha) {
    for_each_pair([&](std::size_t p, std::size_t q) {
      const double wp = weights.data[p];
      if (wp == 0) return;
      const double d = unit[p].dot(unit[q]);
      if (grad_alpha) {
        const double coef = wp * ((1.0 - d) - loss) / den;
        grad_alpha->data[p] += coef * alpha.data[q];
        grad_alpha->data[q] += coef * alpha.data[p];
      }
      if (grad_normal) {
        const double pw = wp * alpha.data[p] * alpha.data[q];
        if (len[p] > kTinyNorm) add3(*grad_normal, p, -pw / den * (unit[q] - d * unit[p]) / len[p]);
        if (len[q] > kTinyNorm) add3(*grad_normal, q, -pw / den * (unit[p] - d * unit[q]) / len[q]);
      }
    });
  }
  return loss;
}

double geo_consistency_loss(const ImageD& normal, const ImageD& predicted_depth) {
  return geo_consistency_loss(normal, ImageD(normal.width, normal.height, 1, 1.0),
                              geo_weights(predicted_depth));
}

double scale_loss(const splat::SplatSet& splats, std::vector<Vec3>* grad) {
  if (grad) grad->assign(splats.size(), Vec3::Zero());
  if (splats.empty()) return 0.0;
  const double inv = 1.0 / static_cast<double>(splats.size());
  double sum = 0;
  for (std::size_t i = 0; i < splats.size(); ++i) {
    int k = 0;
    sum += std::abs(splats[i].scales.minCoeff(&k));
    if (grad) (*grad)[i][k] = inv * (splats[i].scales[k] >= 0 ? 1.0 : -1.0);
  }
  return sum * inv;
}

TotalLoss total_loss(const LossBreakdown& parts, const LossWeights& w) {
  TotalLoss t;
  t.parts = parts;
  t.value = w.rgb * parts.rgb + w.depth * parts.depth + w.normal * parts.normal +
            w.geo * parts.geo + w.scale * parts.scale;
  return t;
}

}  // namespace splatsim::loss
