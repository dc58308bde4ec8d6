#include <array>
#include <cmath>

#include "splatsim/losses/losses.hpp"

namespace splatsim::loss {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_kernel() {
  std::array<double, kWindow> k{};
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    k[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    sum += k[i];
  }
  for (auto& v : k) v /= sum;
  return k;
}

/// Separable "same" filtering of a single-channel plane with zero padding. The kernel is
/// symmetric, so this is also its own adjoint.
std::vector<double> blur(const std::vector<double>& in, int w, int h) {
  static const auto k = gaussian_kernel();
  constexpr int r = kWindow / 2;
  std::vector<double> tmp(in.size(), 0.0), out(in.size(), 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i) {
        const int xx = x + i;
        if (xx >= 0 && xx < w) s += k[i + r] * in[static_cast<std::size_t>(y) * w + xx];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int i = -r; i <= r; ++i) {
        const int yy = y + i;
        if (yy >= 0 && yy < h) s += k[i + r] * tmp[static_cast<std::size_t>(yy) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const ImageD& x, const ImageD& y, const Mask* mask, ImageD* grad) {
  if (!x.same_shape(y)) throw DimensionMismatch("ssim: image shapes differ");
  if (mask) require_same_size(x, *mask, "ssim mask");
  const int w = x.width, h = x.height;
  const std::size_t n = x.pixels();
  std::vector<double> valid(n, 1.0);
  double count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && mask->data[i]) valid[i] = 0.0;
    count += valid[i];
  }
  if (grad) *grad = ImageD(w, h, x.channels);
  if (count == 0) return 1.0;
  const double norm = 1.0 / (count * x.channels);

  double total = 0;
  std::vector<double> xs(n), ys(n), xx(n), yy(n), xy(n);
  for (int c = 0; c < x.channels; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = x.data[i * x.channels + c];
      ys[i] = y.data[i * y.channels + c];
      xx[i] = xs[i] * xs[i];
      yy[i] = ys[i] * ys[i];
      xy[i] = xs[i] * ys[i];
    }
    const auto mx = blur(xs, w, h), my = blur(ys, w, h);
    const auto ex2 = blur(xx, w, h), ey2 = blur(yy, w, h), exy = blur(xy, w, h);
    std::vector<double> ga(grad ? n : 0), gb(grad ? n : 0), gc(grad ? n : 0);
    for (std::size_t i = 0; i < n; ++i) {
      const double sx = ex2[i] - mx[i] * mx[i];
      const double sy = ey2[i] - my[i] * my[i];
      const double sxy = exy[i] - mx[i] * my[i];
      const double a1 = 2 * mx[i] * my[i] + kC1, a2 = 2 * sxy + kC2;
      const double b1 = mx[i] * mx[i] + my[i] * my[i] + kC1, b2 = sx + sy + kC2;
      const double s = a1 * a2 / (b1 * b2);
      total += valid[i] * s;
      if (grad && valid[i] != 0) {
        const double d_mu = 2 * my[i] * a2 / (b1 * b2) - s * 2 * mx[i] / b1;
        const double d_var = -s / b2;
        const double d_cov = 2 * a1 / (b1 * b2);
        ga[i] = norm * (d_mu - 2 * mx[i] * d_var - my[i] * d_cov);
        gb[i] = norm * d_var;
        gc[i] = norm * d_cov;
      }
    }
    if (grad) {
      const auto ba = blur(ga, w, h), bb = blur(gb, w, h), bc = blur(gc, w, h);
      for (std::size_t i = 0; i < n; ++i)
        grad->data[i * x.channels + c] = ba[i] + 2 * xs[i] * bb[i] + ys[i] * bc[i];
    }
  }
  return total * norm;
}

RgbLoss rgb_loss(const ImageD& rendered, const ImageD& target, const Mask* mask, ImageD* grad) {
  if (!rendered.same_shape(target)) throw DimensionMismatch("rgb_loss: image shapes differ");
  if (mask) require_same_size(rendered, *mask, "rgb_loss mask");
  RgbLoss out;
  const std::size_t n = rendered.pixels();
  const int ch = rendered.channels;
  double count = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (!mask || !mask->data[i]) count += 1;
  if (grad) *grad = ImageD(rendered.width, rendered.height, ch);
  if (count == 0) {
    out.empty_support = true;
    return out;
  }
  const double norm = 1.0 / (count * ch);
  for (std::size_t i = 0; i < n; ++i) {
    if (mask && mask->data[i]) continue;
    for (int c = 0; c < ch; ++c) {
      const double d = rendered.data[i * ch + c] - target.data[i * ch + c];
      out.l1 += std::abs(d);
      if (grad) grad->data[i * ch + c] = 0.8 * norm * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
    }
  }
  out.l1 /= count * ch;
  ImageD gssim;
  out.ssim = ssim(rendered, target, mask, grad ? &gssim : nullptr);
  out.value = 0.8 * out.l1 + 0.2 * (1.0 - out.ssim);
  if (grad)
    for (std::size_t i = 0; i < grad->data.size(); ++i) grad->data[i] -= 0.2 * gssim.data[i];
  return out;
}

}  // namespace splatsim::loss
