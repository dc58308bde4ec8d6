#include <cmath>

#include <Eigen/Eigenvalues>

#include "splatsim/losses/losses.hpp"

namespace splatsim::loss {

PseudoNormals pseudo_normals_from_depth(const ImageD& depth, const splat::Camera& cam, int k) {
  if (k < 1) throw InvalidParameter("pseudo_normals_from_depth: k must be >= 1");
  if (depth.channels != 1) throw DimensionMismatch("pseudo_normals_from_depth: depth must be 1 channel");
  const int w = depth.width, h = depth.height;
  PseudoNormals out{ImageD(w, h, 3), Mask(w, h, 1)};

  std::vector<Vec3> points(depth.pixels());
  std::vector<uint8_t> ok(depth.pixels(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double z = depth.at(x, y);
      if (!std::isfinite(z) || z <= 0) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      points[i] = Vec3((x + 0.5 - cam.cx) / cam.fx * z, (y + 0.5 - cam.cy) / cam.fy * z, z);
      ok[i] = 1;
    }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const std::size_t center = static_cast<std::size_t>(y) * w + x;
      if (!ok[center]) continue;
      Vec3 mean = Vec3::Zero();
      int count = 0;
      for (int dy = -k; dy <= k; ++dy)
        for (int dx = -k; dx <= k; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
          if (!ok[i]) continue;
          mean += points[i];
          ++count;
        }
      if (count < 3) continue;
      mean /= count;
      Mat3 cov = Mat3::Zero();
      for (int dy = -k; dy <= k; ++dy)
        for (int dx = -k; dx <= k; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          const std::size_t i = static_cast<std::size_t>(yy) * w + xx;
          if (!ok[i]) continue;
          const Vec3 d = points[i] - mean;
          cov += d * d.transpose();
        }
      const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
      const Vec3 ev = eig.eigenvalues();  // ascending
      // Collinear or coincident neighborhoods do not define a plane.
      if (ev[1] <= 1e-12 * std::max(1.0, ev[2])) continue;
      Vec3 n = eig.eigenvectors().col(0).normalized();
      if (n.dot(points[center]) > 0) n = -n;
      for (int c = 0; c < 3; ++c) out.normal.at(x, y, c) = n[c];
      out.valid.at(x, y) = 1;
    }
  return out;
}

}  // namespace splatsim::loss
