#include <gtest/gtest.h>

#include <random>

#include "splatsim/common/error.hpp"
#include "splatsim/sim/assets.hpp"
#include "splatsim/sim/collision.hpp"
#include "splatsim/sim/dynamics.hpp"
#include "splatsim/sim/geometry.hpp"
#include "splatsim/sim/grid.hpp"
#include "splatsim/sim/render.hpp"
#include "support/sim_oracles.hpp"

using namespace splatsim;
using namespace splatsim::sim;

namespace {

Vec3 random_vec(std::mt19937_64& rng, const Vec3& lo, const Vec3& hi) {
  return Vec3(uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y()), uniform(rng, lo.z(), hi.z()));
}

}  // namespace

// ---- dynamics ----

TEST(Dynamics, StraightAdvance) {
  VehicleParams p;
  p.max_speed = 1.0;
  AgentState s;
  s.heading = 0.3;
  const auto n = step_dynamics(s, {0, 1}, p);
  EXPECT_NEAR((n.position - s.position).norm(), 0.02, 1e-15);
  EXPECT_NEAR(n.position.x(), 0.02 * std::cos(0.3), 1e-15);
  EXPECT_DOUBLE_EQ(n.heading, 0.3);
}

TEST(Dynamics, ZeroSpeedIsStationary) {
  AgentState s;
  s.position = Vec2(1, 2);
  s.heading = -1.0;
  const auto n = step_dynamics(s, {1, 0}, VehicleParams{});
  EXPECT_EQ(n.position, s.position);
  EXPECT_EQ(n.heading, s.heading);
  EXPECT_DOUBLE_EQ(n.steer, deg2rad(30));
}

TEST(Dynamics, FullSteerRadiusMatchesBicycleGeometry) {
  VehicleParams p;
  const double expected = 0.8 / std::tan(deg2rad(30));
  EXPECT_NEAR(turning_radius(p.wheelbase, p.max_steer), 1.3856, 1e-4);
  for (const double steer : {1.0, -1.0}) {
    AgentState s;
    std::vector<Vec2> pts;
    for (int i = 0; i < 2000; ++i) {
      s = step_dynamics(s, {steer, 1}, p);
      pts.push_back(s.position);
    }
    Vec2 center;
    const double r = splatsim::testing::fit_circle_radius(pts, &center);
    EXPECT_LT(std::abs(r - expected) / expected, 0.01) << r;
    EXPECT_NEAR(center.y(), steer * expected, 0.01 * expected);  // left turn for positive steer
  }
}

TEST(Dynamics, ActionsAreClampedOnIngest) {
  const VehicleParams p;
  std::mt19937_64 rng(3);
  AgentState s;
  for (int i = 0; i < 500; ++i) {
    const Action a{uniform(rng, -5, 5), uniform(rng, -5, 5)};
    s = step_dynamics(s, a, p);
    EXPECT_LE(std::abs(s.steer), p.max_steer + 1e-15);
    EXPECT_LE(std::abs(s.speed), p.max_speed + 1e-15);
    EXPECT_GT(s.heading, -kPi);
    EXPECT_LE(s.heading, kPi);
  }
  const auto nan_action = Action{std::nan(""), std::numeric_limits<double>::infinity()}.clamped();
  EXPECT_EQ(nan_action.steer, 0.0);
  EXPECT_EQ(nan_action.speed, 0.0);
  EXPECT_EQ((Action{3, -3}.clamped().steer), 1.0);
  EXPECT_EQ((Action{3, -3}.clamped().speed), -1.0);
}

TEST(Dynamics, RejectsInvalidParams) {
  VehicleParams p;
  p.wheelbase = 0;
  EXPECT_THROW(validate(p), InvalidParameter);
  p = VehicleParams{};
  p.max_steer = deg2rad(95);
  EXPECT_THROW(validate(p), InvalidParameter);
  EXPECT_NO_THROW(validate(VehicleParams{}));
}

// ---- planar geometry ----

TEST(Polygon, ContainmentAndValidation) {
  Polygon square{{Vec2(0, 0), Vec2(2, 0), Vec2(2, 2), Vec2(0, 2)}};
  EXPECT_NO_THROW(validate(square));
  EXPECT_TRUE(square.contains(Vec2(1, 1)));
  EXPECT_TRUE(square.contains(Vec2(2, 1)));  // boundary
  EXPECT_FALSE(square.contains(Vec2(2.01, 1)));
  EXPECT_DOUBLE_EQ(square.area(), 4.0);
  EXPECT_NEAR(square.diameter(), std::sqrt(8.0), 1e-15);
  EXPECT_NEAR(square.distance_to_boundary(Vec2(0.5, 1.0)), 0.5, 1e-15);

  Polygon bowtie{{Vec2(0, 0), Vec2(2, 2), Vec2(2, 0), Vec2(0, 2)}};
  EXPECT_FALSE(bowtie.is_simple());
  EXPECT_THROW(validate(bowtie), InvalidParameter);
  EXPECT_THROW(validate(Polygon{{Vec2(0, 0), Vec2(1, 1)}}), InvalidParameter);
  EXPECT_THROW(validate(Polygon{{Vec2(0, 0), Vec2(1, 1), Vec2(2, 2)}}), InvalidParameter);

  // L shape: the notch is outside.
  Polygon ell{{Vec2(0, 0), Vec2(3, 0), Vec2(3, 1), Vec2(1, 1), Vec2(1, 3), Vec2(0, 3)}};
  EXPECT_TRUE(ell.is_simple());
  EXPECT_TRUE(ell.contains(Vec2(0.5, 2.5)));
  EXPECT_FALSE(ell.contains(Vec2(2, 2)));
}

TEST(Distance, SegmentTriangleAgainstSampling) {
  std::mt19937_64 rng(11);
  const int n = 40;
  for (int trial = 0; trial < 150; ++trial) {
    const Vec3 lo(-1, -1, -1), hi(1, 1, 1);
    const Vec3 a = random_vec(rng, lo, hi), b = random_vec(rng, lo, hi), c = random_vec(rng, lo, hi);
    const Vec3 p0 = random_vec(rng, lo, hi), p1 = random_vec(rng, lo, hi);
    const double exact = segment_triangle_distance(p0, p1, a, b, c);
    const double sampled = splatsim::testing::sampled_segment_triangle_distance(p0, p1, a, b, c, n);
    const double spacing = ((p1 - p0).norm() + std::sqrt(2.0) * std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()})) / n;
    EXPECT_LE(exact, sampled + 1e-12);
    EXPECT_LE(sampled - exact, spacing);
  }
}

TEST(Distance, PiercingSegmentIsZero) {
  EXPECT_EQ(segment_triangle_distance(Vec3(0.2, 0.2, -1), Vec3(0.2, 0.2, 1), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)), 0.0);
  EXPECT_NEAR(segment_triangle_distance(Vec3(2, 0, -1), Vec3(2, 0, 1), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)), 1.0, 1e-15);
}

// ---- collision ----

TEST(Collision, FarAndOnWall) {
  auto wall = make_box(Vec3(2, 0.1, 1));  // x in [-2,2], y in [-0.1,0.1], z in [0,2]
  const CollisionIndex index(wall);
  BodySweep far{Vec2(0, 5), Vec2(0, 5), 0.3, 0.45, 0.8};
  EXPECT_FALSE(index.touches(far));
  EXPECT_TRUE(index.contacts(far).empty());
  BodySweep on{Vec2(0, 0.1), Vec2(0, 0.1), 0.3, 0.45, 0.8};
  EXPECT_TRUE(index.touches(on));
  // Sweep that tunnels through the wall within one step.
  BodySweep through{Vec2(0, -1), Vec2(0, 1), 0.3, 0.45, 0.8};
  EXPECT_TRUE(index.touches(through));
  EXPECT_FALSE(index.touches(BodySweep{Vec2(0, 0.45), Vec2(1, 0.45), 0.3, 0.45, 0.8}));
  EXPECT_TRUE(index.touches(BodySweep{Vec2(0, 0.39), Vec2(1, 0.39), 0.3, 0.45, 0.8}));
}

TEST(Collision, IndexMatchesBruteForceOnRandomPoses) {
  std::mt19937_64 rng(21);
  mesh::TriangleMesh scene;
  for (int i = 0; i < 1200; ++i) {
    const Vec3 c = random_vec(rng, Vec3(-10, -10, 0), Vec3(10, 10, 2));
    const double s = uniform(rng, 0.05, 0.8);
    const auto base = static_cast<std::uint32_t>(scene.vertices.size());
    for (int k = 0; k < 3; ++k) scene.vertices.push_back(c + s * random_vec(rng, Vec3::Constant(-1), Vec3::Constant(1)));
    scene.faces.push_back({base, base + 1, base + 2});
  }
  for (int k = 0; k < 12; ++k) {
    auto obstacle = builtin_obstacles()[k % 4].mesh;
    obstacle.transform(Mat3::Identity(), random_vec(rng, Vec3(-9, -9, 0), Vec3(9, 9, 0)));
    scene.append(obstacle);
  }
  ASSERT_LE(scene.faces.size(), 5000u);
  const CollisionIndex index(scene);
  int disagreements = 0, with_hits = 0;
  for (int pose = 0; pose < 1000; ++pose) {
    const Vec2 from(uniform(rng, -10, 10), uniform(rng, -10, 10));
    const double len = uniform(rng, 0, 0.5), dir = uniform(rng, -kPi, kPi);
    BodySweep sweep{from, from + len * Vec2(std::cos(dir), std::sin(dir)), uniform(rng, 0.1, 0.5), 0.3, uniform(rng, 0.3, 1.2)};
    const auto fast = index.contacts(sweep);
    const auto slow = sweep_contacts_brute_force(scene, sweep);
    if (fast != slow) ++disagreements;
    if (index.touches(sweep) != !slow.empty()) ++disagreements;
    with_hits += !slow.empty();
  }
  EXPECT_EQ(disagreements, 0);
  EXPECT_GT(with_hits, 100);
  EXPECT_LT(with_hits, 900);
}

// ---- grid planning ----

TEST(Grid, StraightCorridorCostIsGridDistance) {
  WalkableGrid grid(Vec2::Zero(), 40, 3, 0.25);
  const auto path = astar(grid, {0, 1}, {39, 1});
  ASSERT_TRUE(path.has_value());
  EXPECT_EQ(path->size(), 40u);
  EXPECT_NEAR(path_cost(grid, *path), 39 * 0.25, 1e-12);
  for (const auto& c : *path) EXPECT_EQ(c.y, 1);
}

TEST(Grid, GoalEqualsStartAndUnreachable) {
  WalkableGrid grid(Vec2::Zero(), 10, 10, 0.25);
  const auto same = astar(grid, {3, 3}, {3, 3});
  ASSERT_TRUE(same.has_value());
  EXPECT_TRUE(same->empty());
  for (int y = 0; y < 10; ++y) grid.set_walkable({5, y}, false);
  EXPECT_FALSE(astar(grid, {0, 0}, {9, 9}).has_value());
  EXPECT_FALSE(astar(grid, {5, 0}, {9, 9}).has_value());  // blocked start
}

TEST(Grid, WallWithGapRoutesThroughGap) {
  WalkableGrid grid(Vec2::Zero(), 20, 20, 0.25);
  for (int y = 0; y < 20; ++y)
    if (y != 15) grid.set_walkable({10, y}, false);
  const auto path = astar(grid, {2, 2}, {18, 2});
  ASSERT_TRUE(path.has_value());
  EXPECT_TRUE(std::find(path->begin(), path->end(), Cell{10, 15}) != path->end());
  EXPECT_NEAR(path_cost(grid, *path), *splatsim::testing::dijkstra_cost(grid, {2, 2}, {18, 2}), 1e-9);
}

TEST(Grid, AStarMatchesDijkstraOnRandomGrids) {
  std::mt19937_64 rng(31);
  int compared = 0, unreachable = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int nx = uniform_int(rng, 10, 30), ny = uniform_int(rng, 10, 30);
    WalkableGrid grid(Vec2(-1, 2), nx, ny, 0.25);
    const double density = uniform(rng, 0.1, 0.4);
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) grid.set_walkable({x, y}, uniform01(rng) >= density);
    const auto cells = grid.walkable_cells();
    ASSERT_GE(cells.size(), 2u);
    const Cell s = cells[uniform_int(rng, 0, static_cast<int>(cells.size()) - 1)];
    const Cell g = cells[uniform_int(rng, 0, static_cast<int>(cells.size()) - 1)];
    const auto path = astar(grid, s, g);
    const auto oracle = splatsim::testing::dijkstra_cost(grid, s, g);
    ASSERT_EQ(path.has_value(), oracle.has_value()) << "trial " << trial;
    if (!path) {
      ++unreachable;
      continue;
    }
    ++compared;
    EXPECT_NEAR(path_cost(grid, *path), *oracle, 1e-9) << "trial " << trial;
    if (s == g) continue;
    EXPECT_EQ(path->front(), s);
    EXPECT_EQ(path->back(), g);
    for (std::size_t i = 1; i < path->size(); ++i) {
      const int dx = (*path)[i].x - (*path)[i - 1].x, dy = (*path)[i].y - (*path)[i - 1].y;
      ASSERT_LE(std::max(std::abs(dx), std::abs(dy)), 1);
      EXPECT_TRUE(move_allowed(grid, (*path)[i - 1], dx, dy));
    }
  }
  EXPECT_GT(compared, 25);
}

TEST(Grid, FromPolygonRespectsClearanceAndBlocking) {
  Polygon rect{{Vec2(0, 0), Vec2(4, 0), Vec2(4, 2), Vec2(0, 2)}};
  const auto grid = WalkableGrid::from_polygon(rect, 0.25, 0.3, [](const Vec2& p) { return (p - Vec2(2, 1)).norm() < 0.5; });
  for (int y = 0; y < grid.ny(); ++y)
    for (int x = 0; x < grid.nx(); ++x) {
      const Vec2 c = grid.center({x, y});
      const bool expected = rect.contains(c) && rect.distance_to_boundary(c) >= 0.3 && (c - Vec2(2, 1)).norm() >= 0.5;
      EXPECT_EQ(grid.walkable({x, y}), expected);
    }
  const auto path = plan_path(grid, Vec2(0.5, 1.0), Vec2(3.5, 1.0));
  ASSERT_TRUE(path.has_value());
  EXPECT_EQ(path->front(), Vec2(0.5, 1.0));
  EXPECT_EQ(path->back(), Vec2(3.5, 1.0));
  EXPECT_GT(polyline_length(*path), 3.0);
}

// ---- composition ----

TEST(Compose, MatchesPerPixelMinDepthOracle) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 17, h = 11;
    ImageD sc(w, h, 3), sd(w, h, 1), sa(w, h, 1), fc(w, h, 3), fd(w, h, 1);
    for (auto& v : sc.data) v = uniform01(rng);
    for (auto& v : fc.data) v = uniform01(rng);
    for (std::size_t i = 0; i < sa.data.size(); ++i) {
      sa.data[i] = uniform01(rng) < 0.2 ? 0.0 : uniform01(rng);
      sd.data[i] = sa.data[i] * uniform(rng, 0.5, 10);
      fd.data[i] = uniform01(rng) < 0.4 ? 0.0 : uniform(rng, 0.5, 10);
    }
    const auto out = compose_frame(sc, sd, sa, fc, fd);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        // Candidates as (depth, source); empty layers are infinitely far.
        const double inf = std::numeric_limits<double>::infinity();
        const double splat_z = sa.at(x, y) >= 0.5 ? sd.at(x, y) / sa.at(x, y) : inf;
        const double fg_z = fd.at(x, y) > 0 ? fd.at(x, y) : inf;
        const bool fg = fg_z < splat_z;
        const double z = std::min(splat_z, fg_z);
        ASSERT_EQ(out.depth.at(x, y), std::isfinite(z) ? z : 0.0);
        for (int c = 0; c < 3; ++c) ASSERT_EQ(out.color.at(x, y, c), fg ? fc.at(x, y, c) : sc.at(x, y, c));
      }
  }
}

TEST(Compose, NoForegroundIsIdentityAndMismatchThrows) {
  ImageD sc(4, 3, 3, 0.3), sd(4, 3, 1, 2.0), sa(4, 3, 1, 1.0), fc(4, 3, 3, 0.9), fd(4, 3, 1, 0.0);
  const auto out = compose_frame(sc, sd, sa, fc, fd);
  EXPECT_EQ(out.color.data, sc.data);
  EXPECT_EQ(out.depth.data, sd.data);
  ImageD near(4, 3, 1, 1.0);
  EXPECT_EQ(compose_frame(sc, sd, sa, fc, near).color.data, fc.data);
  EXPECT_THROW(compose_frame(sc, sd, sa, fc, ImageD(5, 3, 1)), DimensionMismatch);
}

TEST(Compose, ObstacleInFrontOfSplatsWins) {
  CameraRig rig;
  rig.perturb_position = rig.perturb_rotation_deg = 0;
  const auto cam = mount_camera(rig, Vec2::Zero(), 0.0, 0.0);
  ColoredMesh layer;
  auto box = make_box(Vec3(0.2, 0.2, 0.4));
  box.transform(Mat3::Identity(), Vec3(2, 0, 0.2));
  layer.append(box, Vec3(1, 0, 0));
  ImageD fc, fd;
  render_colored(layer, cam, fc, fd);
  const ImageD sc(cam.width, cam.height, 3, 0.5), sa(cam.width, cam.height, 1, 1.0);
  const ImageD sd(cam.width, cam.height, 1, 5.0);
  const auto out = compose_frame(sc, sd, sa, fc, fd);
  int covered = 0;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      if (fd.at(x, y) <= 0) continue;
      ++covered;
      EXPECT_LT(out.depth.at(x, y), 5.0);
      EXPECT_GT(out.color.at(x, y, 0), out.color.at(x, y, 1));
    }
  EXPECT_GT(covered, 20);
}

// ---- camera rig ----

TEST(CameraRig, MountGeometry) {
  CameraRig rig;
  rig.pitch_deg = 10;
  const double heading = 0.7;
  const auto cam = mount_camera(rig, Vec2(1, 2), heading, 0.5);
  EXPECT_NO_THROW(splat::validate(cam));
  const Vec3 expected_eye = Vec3(1, 2, 1.1) + rig.mount_forward * Vec3(std::cos(heading), std::sin(heading), 0);
  EXPECT_NEAR((cam.center() - expected_eye).norm(), 0, 1e-12);
  // Optical axis points along the heading, tilted down by the pitch.
  const Vec3 axis = cam.rotation.transpose() * Vec3::UnitZ();
  const double p = deg2rad(10);
  EXPECT_NEAR((axis - Vec3(std::cos(heading) * std::cos(p), std::sin(heading) * std::cos(p), -std::sin(p))).norm(), 0, 1e-12);
  // Image x grows to the agent's right.
  const Vec3 right = cam.rotation.transpose() * Vec3::UnitX();
  EXPECT_NEAR(right.dot(Vec3(std::sin(heading), -std::cos(heading), 0)), 1.0, 1e-12);
}

TEST(CameraRig, PerturbationBoundsAndReproducibility) {
  CameraRig rig;
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const auto pa = sample_perturbation(rig, a);
    const auto pb = sample_perturbation(rig, b);
    EXPECT_EQ(pa.offset, pb.offset);
    EXPECT_EQ(pa.angles, pb.angles);
    EXPECT_LE(pa.offset.cwiseAbs().maxCoeff(), 0.01);
    EXPECT_LE(pa.angles.cwiseAbs().maxCoeff(), deg2rad(1.0));
  }
  rig.perturb_position = rig.perturb_rotation_deg = 0;
  const auto zero = sample_perturbation(rig, a);
  EXPECT_EQ(zero.offset, Vec3::Zero());
  EXPECT_EQ(zero.angles, Vec3::Zero());
  const auto plain = mount_camera(rig, Vec2(3, 1), 1.0, 0.0);
  const auto perturbed = mount_camera(rig, Vec2(3, 1), 1.0, 0.0, zero);
  EXPECT_EQ(plain.rotation, perturbed.rotation);
  EXPECT_EQ(plain.translation, perturbed.translation);
}

TEST(CameraRig, PerturbedPoseStaysWithinMagnitudes) {
  CameraRig rig;
  std::mt19937_64 rng(9);
  const auto base = mount_camera(rig, Vec2::Zero(), 0.0, 0.0);
  for (int i = 0; i < 200; ++i) {
    const auto cam = mount_camera(rig, Vec2::Zero(), 0.0, 0.0, sample_perturbation(rig, rng));
    EXPECT_LE((cam.center() - base.center()).norm(), std::sqrt(3.0) * 0.01 + 1e-12);
    const Eigen::AngleAxisd delta(cam.rotation * base.rotation.transpose());
    EXPECT_LE(std::abs(delta.angle()), std::sqrt(3.0) * deg2rad(1.0) + 1e-9);
  }
}

// ---- assets ----

TEST(Assets, PrimitivesAreClosedAndOutward) {
  for (const auto& asset : builtin_obstacles()) {
    const auto& m = asset.mesh;
    EXPECT_EQ(m.euler_characteristic(), 2) << asset.name;
    Vec3 c = Vec3::Zero();
    for (const auto& v : m.vertices) c += v;
    c /= static_cast<double>(m.vertices.size());
    for (std::size_t f = 0; f < m.faces.size(); ++f) EXPECT_GT(m.face_normal(f).dot(m.centroid(f) - c), 0) << asset.name;
    EXPECT_GT(asset.footprint_radius(), 0.05);
  }
}
