#include <gtest/gtest.h>

#include "splatsim/optim/backward.hpp"
#include "support/gradcheck.hpp"

using namespace splatsim;
using namespace splatsim::testing;

TEST(Backward, SingleAxisAlignedSplatRgbL1) {
  Camera cam = front_camera(32, 32, 35);
  SplatSet set;
  Splat s;
  s.mean = Vec3(0.05, -0.03, 3);
  s.scales = Vec3(0.4, 0.25, 0.05);
  s.opacity = 0.7;
  s.color = Vec3(0.8, 0.3, 0.1);
  set.splats = {s};
  data::Frame frame;
  frame.camera = cam;
  frame.image = ImageD(32, 32, 3, 0.5);
  const auto targets = optim::prepare_targets(frame);
  optim::LossConfig cfg;
  cfg.scale = false;
  const auto r = check_gradients(set, cam, targets, cfg);
  EXPECT_EQ(r.failed, 0u) << r.first_failure;
}

TEST(Backward, UncoveredSplatHasZeroGradient) {
  auto scene = make_grad_scene(3, 6);
  Splat off;
  off.mean = Vec3(50, 0, 3);  // far outside the frustum
  off.scales = Vec3(0.1, 0.1, 0.01);
  scene.splats.splats.push_back(off);
  optim::LossConfig cfg;
  cfg.scale = false;
  const auto res = optim::backward(scene.splats, scene.camera, scene.targets, cfg);
  const std::size_t i = scene.splats.size() - 1;
  EXPECT_EQ(res.grads.mean[i], Vec3::Zero());
  EXPECT_EQ(res.grads.rotation[i], Vec4::Zero());
  EXPECT_EQ(res.grads.scales[i], Vec3::Zero());
  EXPECT_EQ(res.grads.opacity[i], 0.0);
  EXPECT_EQ(res.grads.color[i], Vec3::Zero());
  EXPECT_EQ(res.grads.screen_abs[i], 0.0);
}

class PerTerm : public ::testing::TestWithParam<int> {};

TEST_P(PerTerm, MatchesCentralDifferences) {
  const int term = GetParam();
  for (std::uint64_t seed : {11u, 12u}) {
    const auto scene = make_grad_scene(seed, 10);
    const auto cfg = single_term(term);
    const auto r = check_gradients(scene.splats, scene.camera, scene.targets, cfg);
    EXPECT_EQ(r.failed, 0u) << term_name(term) << " seed " << seed << ": " << r.first_failure;
  }
}

INSTANTIATE_TEST_SUITE_P(Losses, PerTerm, ::testing::Range(0, 5),
                         [](const auto& info) { return std::string(term_name(info.param)); });

TEST(Backward, FullLossTenSplats) {
  const auto scene = make_grad_scene(21, 10);
  const auto r = check_gradients(scene.splats, scene.camera, scene.targets, optim::LossConfig{});
  EXPECT_EQ(r.failed, 0u) << r.first_failure;
  EXPECT_EQ(r.checked, 12u * kParamsPerSplat);
}

TEST(Backward, AllTermsActiveOnGradScenes) {
  const auto scene = make_grad_scene(5, 10);
  const auto res = optim::backward(scene.splats, scene.camera, scene.targets, optim::LossConfig{});
  EXPECT_TRUE(res.loss.active.rgb);
  EXPECT_TRUE(res.loss.active.depth);
  EXPECT_TRUE(res.loss.active.normal);
  EXPECT_TRUE(res.loss.active.geo);
  EXPECT_TRUE(res.loss.active.scale);
  EXPECT_GT(res.loss.total.parts.depth, 0.0);
  EXPECT_GT(res.loss.total.parts.geo, 0.0);
}

TEST(Backward, GeometryDisabledMatchesRgbPlusScale) {
  const auto scene = make_grad_scene(6, 8);
  optim::LossConfig cfg;
  cfg.geometry = false;
  const auto res = optim::backward(scene.splats, scene.camera, scene.targets, cfg);
  EXPECT_FALSE(res.loss.active.depth);
  EXPECT_NEAR(res.loss.total.value, res.loss.total.parts.rgb + 10 * res.loss.total.parts.scale,
              1e-12);
}

TEST(Backward, Deterministic) {
  const auto scene = make_grad_scene(7, 12);
  const auto a = optim::backward(scene.splats, scene.camera, scene.targets, optim::LossConfig{});
  const auto b = optim::backward(scene.splats, scene.camera, scene.targets, optim::LossConfig{});
  for (std::size_t i = 0; i < scene.splats.size(); ++i) {
    EXPECT_EQ(a.grads.mean[i], b.grads.mean[i]);
    EXPECT_EQ(a.grads.rotation[i], b.grads.rotation[i]);
    EXPECT_EQ(a.grads.opacity[i], b.grads.opacity[i]);
  }
}
