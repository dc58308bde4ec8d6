#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>

#include "splatsim/common/error.hpp"
#include "splatsim/splat/projection.hpp"
#include "splatsim/splat/rasterizer.hpp"
#include "support/scenes.hpp"

namespace splatsim::splat {
namespace {

using testing::brute_force_composite;
using testing::front_camera;
using testing::max_abs_diff;
using testing::random_scene;

TEST(BuildCovariance, IdentityAndDiagonal) {
  EXPECT_TRUE(build_covariance(Vec4(1, 0, 0, 0), Vec3(1, 1, 1)).isApprox(Mat3::Identity(), 1e-15));
  const Mat3 d = build_covariance(Vec4(1, 0, 0, 0), Vec3(2, 1, 1));
  EXPECT_TRUE(d.isApprox(Vec3(4, 1, 1).asDiagonal().toDenseMatrix(), 1e-15));
}

TEST(BuildCovariance, QuarterTurnAboutZSwapsAxes) {
  // R = [[0,-1,0],[1,0,0],[0,0,1]]; R diag(4,1,1) R^T = diag(1,4,1).
  const double h = std::sqrt(0.5);
  const Mat3 c = build_covariance(Vec4(h, 0, 0, h), Vec3(2, 1, 1));
  Mat3 expected = Mat3::Zero();
  expected.diagonal() << 1, 4, 1;
  EXPECT_LT((c - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildCovariance, RejectsNonFinite) {
  EXPECT_THROW(build_covariance(Vec4(NAN, 0, 0, 0), Vec3(1, 1, 1)), InvalidParameter);
  EXPECT_THROW(build_covariance(Vec4(1, 0, 0, 0), Vec3(1, INFINITY, 1)), InvalidParameter);
}

TEST(BuildCovariance, EigenvaluesAreSquaredScales) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.01, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 s(u(rng), u(rng), u(rng));
    const Mat3 c = build_covariance(testing::random_quaternion(rng), s);
    EXPECT_LT((c - c.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat3> es(c);
    Vec3 sq = s.cwiseProduct(s);
    std::sort(sq.data(), sq.data() + 3);
    EXPECT_LT((es.eigenvalues() - sq).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(ProjectCovariance, OnAxisIsotropic) {
  const auto cam = front_camera(64, 64, 50);
  Splat s;
  s.mean = Vec3(0, 0, 4);
  s.scales = Vec3::Constant(0.2);
  const auto cov = project_covariance(s, cam);
  ASSERT_TRUE(cov.has_value());
  const double expected = std::pow(50.0 / 4.0, 2) * 0.04;
  EXPECT_NEAR((*cov)(0, 0), expected, 1e-9);
  EXPECT_NEAR((*cov)(1, 1), expected, 1e-9);
  EXPECT_NEAR((*cov)(0, 1), 0, 1e-12);
}

TEST(ProjectCovariance, BehindNearPlaneIsSkipped) {
  const auto cam = front_camera(64, 64, 50);
  Splat s;
  s.mean = Vec3(0, 0, 0.005);
  EXPECT_FALSE(project_covariance(s, cam).has_value());
  s.mean = Vec3(0, 0, -3);
  EXPECT_FALSE(project_covariance(s, cam).has_value());
}

TEST(ProjectCovariance, FocalScalesFirstAxis) {
  auto cam = front_camera(64, 64, 50);
  Splat s;
  s.mean = Vec3(0, 0, 3);
  s.scales = Vec3(0.3, 0.1, 0.2);
  s.rotation = Vec4(0.9, 0.1, 0.2, 0.3);
  const Mat2 a = *project_covariance(s, cam);
  cam.fx *= 2;
  const Mat2 b = *project_covariance(s, cam);
  EXPECT_NEAR(b(0, 0), 4 * a(0, 0), 1e-9);
  EXPECT_NEAR(b(0, 1), 2 * a(0, 1), 1e-9);
  EXPECT_NEAR(b(1, 1), a(1, 1), 1e-9);
}

TEST(ProjectCovariance, SymmetricForRandomSplats) {
  std::mt19937_64 rng(11);
  const auto cam = front_camera(64, 48, 40);
  const auto scene = random_scene(rng, 100, false);
  for (const auto& s : scene.splats) {
    const auto cov = project_covariance(s, cam);
    ASSERT_TRUE(cov);
    EXPECT_LT(std::abs((*cov)(0, 1) - (*cov)(1, 0)), 1e-9);
    EXPECT_GE(cov->determinant(), -1e-9);
  }
}

TEST(GaussianWeight, KnownValues) {
  const Vec2 m(10, 10);
  EXPECT_DOUBLE_EQ(gaussian_weight(m, Mat2::Identity(), m), 1.0);
  EXPECT_NEAR(gaussian_weight(m, Mat2::Identity(), m + Vec2(1, 0)), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(gaussian_weight(m, Mat2::Identity(), m + Vec2(3, 3)), std::exp(-9.0), 1e-18);
  EXPECT_THROW(gaussian_weight(m, Mat2::Zero(), m), DegenerateSplat);
}

TEST(GaussianWeight, MonotoneAlongRays) {
  Mat2 cov;
  cov << 4, 1.5, 1.5, 2;
  for (int k = 0; k < 16; ++k) {
    const Vec2 dir(std::cos(k * 0.4), std::sin(k * 0.4));
    double prev = 1.0;
    for (int step = 1; step < 20; ++step) {
      const double w = gaussian_weight(Vec2::Zero(), cov, dir * step * 0.3);
      EXPECT_LT(w, prev);
      prev = w;
    }
  }
}

TEST(Rasterize, SingleOpaqueSplatIdentity) {
  const auto cam = front_camera(32, 32, 30);
  SplatSet set;
  Splat s;
  s.mean = Vec3(0.5 * 2.5 / 30, 0.5 * 2.5 / 30, 2.5);  // center of pixel (16, 16)
  s.scales = Vec3(0.5, 0.5, 0.5);
  s.opacity = 1 - 1e-12;
  s.color = Vec3(0.2, 0.6, 0.9);
  set.splats.push_back(s);
  const auto out = rasterize(set, cam);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(out.color.at(16, 16, c), s.color[c], 1e-9);
  EXPECT_NEAR(out.depth.at(16, 16), 2.5, 1e-9);
  EXPECT_NEAR(out.alpha.at(16, 16), 1.0, 1e-9);
}

TEST(Rasterize, TwoCoincidentSplatsBlend) {
  const auto cam = front_camera(32, 32, 30);
  SplatSet set;
  Splat front, back;
  const double off = 0.5 / 30;
  front.mean = Vec3(off * 2, off * 2, 2.0);
  front.scales = Vec3(1, 1, 0.01);
  front.opacity = 0.5;
  front.color = Vec3(1, 0, 0);
  back = front;
  back.mean = Vec3(off * 3, off * 3, 3.0);
  back.opacity = 1 - 1e-12;
  back.color = Vec3(0, 0, 1);
  set.splats = {back, front};  // input order must not matter
  const auto out = rasterize(set, cam);
  EXPECT_NEAR(out.color.at(16, 16, 0), 0.5, 1e-6);
  EXPECT_NEAR(out.color.at(16, 16, 1), 0.0, 1e-12);
  EXPECT_NEAR(out.color.at(16, 16, 2), 0.5, 1e-6);
}

TEST(Rasterize, EmptyPixelIsBackground) {
  const auto cam = front_camera(64, 64, 30);
  SplatSet set;
  Splat s;
  s.mean = Vec3(-1.5, -1.5, 2.0);
  s.scales = Vec3::Constant(0.02);
  set.splats.push_back(s);
  const auto out = rasterize(set, cam);
  EXPECT_EQ(out.alpha.at(60, 60), 0.0);
  EXPECT_EQ(out.depth.at(60, 60), 0.0);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out.color.at(60, 60, c), 0.0);
}

TEST(Rasterize, EmptySetRejected) {
  EXPECT_THROW(rasterize(SplatSet{}, front_camera(8, 8, 8)), InvalidParameter);
}

TEST(Rasterize, NormalFacesCameraAlongShortAxis) {
  const auto cam = front_camera(32, 32, 30);
  SplatSet set;
  Splat s;
  s.mean = Vec3(0.5 * 2.0 / 30, 0.5 * 2.0 / 30, 2);  // center of pixel (16, 16)
  s.scales = Vec3(0.5, 0.5, 0.01);  // shortest axis is world z, pointing away from camera
  s.opacity = 1 - 1e-9;
  set.splats.push_back(s);
  const auto out = rasterize(set, cam);
  EXPECT_NEAR(out.normal.at(16, 16, 2), -1.0, 1e-6);
  const auto ps = project_splat(s, cam);
  EXPECT_LE(ps.normal.dot(ps.p_cam), 0.0);
}

TEST(DepthSortAndTile, WholeImageSplatInEveryTile) {
  const auto cam = front_camera(64, 48, 30);
  SplatSet set;
  Splat s;
  s.mean = Vec3(0, 0, 2);
  s.scales = Vec3(5, 5, 0.1);
  set.splats.push_back(s);
  const auto out = rasterize(set, cam);
  for (const auto& l : out.bins.lists) {
    ASSERT_EQ(l.size(), 1u);
    EXPECT_EQ(l[0], 0u);
  }
}

TEST(DepthSortAndTile, NearBeforeFar) {
  const auto cam = front_camera(32, 32, 30);
  SplatSet set;
  Splat far, near;
  far.mean = Vec3(0, 0, 2);
  near.mean = Vec3(0, 0, 1);
  far.scales = near.scales = Vec3(0.3, 0.3, 0.3);
  set.splats = {far, near};
  const auto out = rasterize(set, cam);
  for (const auto& l : out.bins.lists) {
    if (l.size() == 2) {
      EXPECT_EQ(l[0], 1u);
      EXPECT_EQ(l[1], 0u);
    }
  }
}

TEST(DepthSortAndTile, TiledMatchesBruteForce) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = trial < 3 ? 50 : 100;
    const auto scene = random_scene(rng, n - 2);
    const auto cam = front_camera(48 + 8 * trial, 40, 36);
    const auto out = rasterize(scene, cam);
    const auto ref = brute_force_composite(scene, cam);
    EXPECT_LT(max_abs_diff(out.color, ref.color), 1e-6);
    EXPECT_LT(max_abs_diff(out.depth, ref.depth), 1e-6);
    EXPECT_LT(max_abs_diff(out.normal, ref.normal), 1e-6);
    EXPECT_LT(max_abs_diff(out.alpha, ref.alpha), 1e-6);
  }
}

TEST(Rasterize, PermutationInvariant) {
  std::mt19937_64 rng(99);
  const auto scene = random_scene(rng, 40);
  const auto cam = front_camera(48, 48, 36);
  const auto base = rasterize(scene, cam);
  for (int k = 0; k < 5; ++k) {
    auto shuffled = scene;
    std::shuffle(shuffled.splats.begin(), shuffled.splats.end(), rng);
    const auto out = rasterize(shuffled, cam);
    EXPECT_LT(max_abs_diff(out.color, base.color), 1e-6);
    EXPECT_LT(max_abs_diff(out.depth, base.depth), 1e-6);
  }
}

TEST(Rasterize, AlphaAndNormalBounds) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const auto scene = random_scene(rng, 60);
    const auto cam = front_camera(40, 40, 30);
    const auto out = rasterize(scene, cam, {.cull = std::nullopt, .keep_records = true});
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const double a = out.alpha.at(x, y);
        EXPECT_GE(a, 0.0);
        EXPECT_LE(a, 1.0);
        const Vec3 n(out.normal.at(x, y, 0), out.normal.at(x, y, 1), out.normal.at(x, y, 2));
        if (a > 0.5) {
          EXPECT_LE(n.norm(), 1 + 1e-6);
        }
      }
    }
  }
}

TEST(Rasterize, RecordsReproduceComposite) {
  std::mt19937_64 rng(3);
  const auto scene = random_scene(rng, 30);
  const auto cam = front_camera(40, 24, 30);
  const auto out = rasterize(scene, cam, {.cull = std::nullopt, .keep_records = true});
  for (int ty = 0; ty < out.bins.tiles_y; ++ty) {
    for (int tx = 0; tx < out.bins.tiles_x; ++tx) {
      const auto& tr = out.tiles[ty * out.bins.tiles_x + tx];
      for (int local = 0; local < kTileSize * kTileSize; ++local) {
        const int x = tx * kTileSize + local % kTileSize, y = ty * kTileSize + local / kTileSize;
        if (x >= cam.width || y >= cam.height) {
          EXPECT_EQ(tr.offsets[local], tr.offsets[local + 1]);
          continue;
        }
        double d = 0;
        for (auto r = tr.offsets[local]; r < tr.offsets[local + 1]; ++r)
          d += tr.records[r].transmittance * tr.records[r].alpha * out.projected[tr.records[r].splat].depth;
        EXPECT_NEAR(d, out.depth.at(x, y), 1e-12);
      }
    }
  }
}

}  // namespace
}  // namespace splatsim::splat
