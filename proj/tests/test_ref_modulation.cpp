#include <gtest/gtest.h>

#include <chrono>

#include "lipnav/ref_modulation.hpp"
#include "oracles.hpp"

using namespace lipnav;

namespace {

double pose_diff(const Pose3& a, const Pose3& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.z - b.z), std::abs(a.roll - b.roll),
                   std::abs(a.pitch - b.pitch), std::abs(wrap_angle(a.yaw - b.yaw))});
}

Se2Velocity random_cmd(std::mt19937_64& g) {
  return {oracle::uniform(g, -0.3, 0.8), oracle::uniform(g, -0.2, 0.2), oracle::uniform(g, -0.8, 0.8)};
}

}  // namespace

TEST(ModulateFootstep, FlatTerrainIsIdentity) {
  const Terrain t = generate_terrain({FlatSpec{}, {}});
  const Pose3 stance = Pose3::planar(0.3, -0.1, 0.0, 0.4);
  const FootholdTarget r = modulate_footstep(Vec2(0.2, 0.1), stance, t);
  const Vec2 world = frame_to_world(Vec2(0.2, 0.1), stance);
  EXPECT_EQ(r.position.x(), world.x());
  EXPECT_EQ(r.position.y(), world.y());
  EXPECT_EQ(r.position.z(), 0.0);
  EXPECT_EQ(r.projection_distance, 0.0);
}

TEST(ModulateFootstep, StanceYawRotatesStep) {
  const Terrain t = generate_terrain({FlatSpec{}, {}});
  const Pose3 stance = Pose3::planar(1.0, 0.5, 0.0, kPi / 2);
  const FootholdTarget r = modulate_footstep(Vec2(0.2, 0.0), stance, t);
  EXPECT_NEAR(r.position.x(), 1.0, 1e-15);
  EXPECT_NEAR(r.position.y(), 0.7, 1e-15);
}

TEST(ModulateFootstep, GapStepLandsOnNearestTreadAndRoundTrips) {
  const Terrain t = generate_terrain({StairsSpec{}, {}});
  const Pose3 stance = Pose3::planar(1.1, -0.1, 0.17, 0.0);
  // Nominal step ends 0.01 m past the riser at x = 1.29.
  const FootholdTarget r = modulate_footstep(Vec2(0.2, 0.2), stance, t);
  const auto brute = oracle::brute_force_projection(t.polygons, Vec2(1.3, 0.1));
  EXPECT_EQ(r.polygon_id, brute.id);
  EXPECT_NEAR(r.position.x(), 1.32, 1e-12);
  EXPECT_NEAR(r.position.z(), 0.34, 1e-12);

  auto g = oracle::rng(3);
  for (int i = 0; i < 200; ++i) {
    const Pose3 s = Pose3::planar(oracle::uniform(g, -1, 1), oracle::uniform(g, -1, 1), 0.0,
                                  oracle::uniform(g, -kPi, kPi));
    const Vec2 u(oracle::uniform(g, -0.5, 0.5), oracle::uniform(g, -0.5, 0.5));
    EXPECT_NEAR((footstep_in_stance_frame(Vec3(frame_to_world(u, s).x(), frame_to_world(u, s).y(), 0), s) - u).norm(),
                0.0, 1e-12);
  }
}

TEST(FootInclination, AlignedAndRotatedFeet) {
  const double pitch = std::atan(0.2);
  auto [r0, p0] = foot_inclination(0.0, pitch, 0.0);
  EXPECT_NEAR(r0, 0.0, 1e-15);
  EXPECT_NEAR(p0, pitch, 1e-15);
  // Foot turned 90 degrees: the uphill direction is now to its right.
  auto [r1, p1] = foot_inclination(0.0, pitch, kPi / 2);
  EXPECT_NEAR(r1, -pitch, 1e-15);
  EXPECT_NEAR(p1, 0.0, 1e-15);
  auto [r2, p2] = foot_inclination(0.0, 0.0, 1.0);
  EXPECT_EQ(r2, 0.0);
  EXPECT_EQ(p2, 0.0);
}

TEST(ModulateCom, LineLiftExamples) {
  auto nominal = [](double t) { return 0.6 + 0.01 * t; };
  const double T = 0.4;
  auto unchanged = modulate_com(nominal, 0.0, 0.0, T);
  auto up = modulate_com(nominal, 0.0, 0.17, T);
  auto mid = modulate_com(nominal, 0.34, 0.51, T);
  for (double t : {0.0, 0.1, 0.3}) EXPECT_EQ(unchanged(t), nominal(t));
  EXPECT_NEAR(up(T / 2) - nominal(T / 2), 0.085, 1e-15);
  EXPECT_NEAR(mid(0.0) - nominal(0.0), 0.34, 1e-15);
  EXPECT_NEAR(mid(T - 1e-12) - nominal(T - 1e-12), 0.51, 1e-10);
}

TEST(GenerateStepReference, FlatGroundIdentityAcrossChannels) {
  const Terrain t = generate_terrain({FlatSpec{}, {}});
  GaitParams params;
  auto g = oracle::rng(42);
  for (int i = 0; i < 100; ++i) {
    const Pose3 base = Pose3::planar(oracle::uniform(g, -1, 1), oracle::uniform(g, -1, 1), 0.0,
                                     oracle::uniform(g, -kPi, kPi));
    const StepContext ctx = standing_context(base, params, 1 + i % 2, t, random_cmd(g));
    const StepReference nom = assemble_nominal_step(ctx, params);
    const StepReference mod = generate_step_reference(ctx, t, params);
    EXPECT_TRUE(mod.modulated);
    EXPECT_LE(pose_diff(mod.footstep_target, nom.footstep_target), 1e-12);
    for (int k = 0; k <= 40; ++k) {
      const double s = params.T * k / 40;
      ASSERT_LE(pose_diff(mod.swing(s), nom.swing(s)), 1e-12);
      ASSERT_LE(pose_diff(mod.com(s), nom.com(s)), 1e-12);
      ASSERT_EQ(mod.arms(s).left, nom.arms(s).left);
      ASSERT_EQ(mod.arms(s).right, nom.arms(s).right);
    }
  }
}

TEST(GenerateStepReference, SlopeOrientsSwingFoot) {
  const Terrain t = generate_terrain({SlopeSpec{}, {}});
  GaitParams params;
  const StepContext ctx = standing_context(Pose3::planar(0, 0, 0, 0), params, 1, t, {0.5, 0, 0});
  const StepReference ref = generate_step_reference(ctx, t, params);
  const Pose3 end = ref.swing(params.T);
  EXPECT_NEAR(end.roll, 0.0, 1e-12);
  EXPECT_NEAR(end.pitch, std::atan(0.2), 1e-12);
  EXPECT_NEAR(end.z, t.height_at(end.x, end.y), 1e-9);
  EXPECT_NEAR(pose_diff(end, ref.footstep_target), 0.0, 1e-6);
  EXPECT_NEAR(ref.com(0.0).z - com_height_nominal(0.0, ctx.cmd, params), ctx.stance_pose.z, 1e-12);
}

TEST(GenerateStepReference, SingleAscendingStepClearsTerrain) {
  const Terrain t = generate_terrain({StairsSpec{}, {}});
  GaitParams params;
  StepContext ctx;
  ctx.stance_pose = Pose3::planar(0.9, -0.1, 0.0, 0.0);
  ctx.swing_start = Pose3::planar(0.85, 0.1, 0.0, 0.0);
  ctx.stance_parity = 1;
  ctx.cmd = {0.5, 0.0, 0.0};  // u_x = 0.2 lands on tread 1 at x = 1.1
  const StepReference ref = generate_step_reference(ctx, t, params);
  EXPECT_NEAR(ref.swing(params.T).z, 0.17, 1e-12);
  EXPECT_EQ(swing_penetrations(t, ref, 201), 0);
  for (int k = 0; k <= 20; ++k) {
    const double s = params.T * k / 20;
    const Pose3 p = ref.swing(s);
    EXPECT_GE(p.z, t.height_at(p.x, p.y) - 1e-9);
  }
}

TEST(GenerateStepReference, ZeroEndpointVelocityAndContinuity) {
  const Terrain t = generate_terrain({StairsSpec{}, {}});
  GaitParams params;
  const auto refs = rollout_references(standing_context(Pose3::planar(0, 0, 0, 0), params, 1, t, {0.4, 0.05, 0.1}),
                                       t, params, 10, true);
  const double h = 1e-7;
  for (std::size_t k = 0; k < refs.size(); ++k) {
    const auto& r = refs[k];
    for (auto [a, b] : {std::pair{0.0, h}, std::pair{params.T - h, params.T}}) {
      const Pose3 p = r.swing(a), q = r.swing(b);
      EXPECT_NEAR((q.x - p.x) / h, 0.0, 1e-5);
      EXPECT_NEAR((q.y - p.y) / h, 0.0, 1e-5);
      EXPECT_NEAR((q.yaw - p.yaw) / h, 0.0, 1e-5);
    }
    if (k + 1 < refs.size()) {
      EXPECT_LE((refs[k].swing(params.T).position() - refs[k + 1].stance_pose.position()).norm(), 1e-9);
      EXPECT_LE((refs[k + 1].swing(0.0).position() - refs[k].stance_pose.position()).norm(), 1e-9);
    }
  }
}

TEST(Rollout, StairsModulatedValidNominalNot) {
  const Terrain t = generate_terrain({StairsSpec{}, {}});
  GaitParams params;
  const StepContext start = standing_context(Pose3::planar(0, 0, 0, 0), params, 1, t, {0.4, 0, 0});
  const auto mod = rollout_references(start, t, params, 10, true);
  const auto nom = rollout_references(start, t, params, 10, false);
  int invalid_mod = 0, pen_mod = 0, invalid_nom = 0, pen_nom = 0;
  for (const auto& r : mod) {
    invalid_mod += !footstep_valid(t, r.footstep_target.xy());
    pen_mod += swing_penetrations(t, r);
  }
  for (const auto& r : nom) {
    invalid_nom += !footstep_valid(t, r.footstep_target.xy());
    pen_nom += swing_penetrations(t, r);
  }
  EXPECT_EQ(invalid_mod, 0);
  EXPECT_EQ(pen_mod, 0);
  EXPECT_GE(invalid_nom, 1);
  EXPECT_GE(pen_nom, 1);
  EXPECT_GT(mod.back().footstep_target.z, 0.3);
}

TEST(Rollout, ClearanceAndValidityOnEveryTerrain) {
  GaitParams params;
  auto g = oracle::rng(17);
  const std::vector<TerrainSpec> specs{{FlatSpec{}, {}}, {SlopeSpec{}, {}}, {StairsSpec{}, {}}, {BlocksSpec{}, {}}};
  for (const auto& spec : specs) {
    const Terrain t = generate_terrain(spec);
    for (int trial = 0; trial < 10; ++trial) {
      const Pose3 base = Pose3::planar(oracle::uniform(g, 0.0, 1.0), oracle::uniform(g, -0.3, 0.3), 0.0,
                                       oracle::uniform(g, -0.3, 0.3));
      const Se2Velocity cmd{oracle::uniform(g, 0.0, 0.6), oracle::uniform(g, -0.1, 0.1), oracle::uniform(g, -0.2, 0.2)};
      std::vector<StepReference> refs;
      try {
        refs = rollout_references(standing_context(base, params, 1, t, cmd), t, params, 8, true);
      } catch (const NoFoothold&) {
        continue;
      }
      for (const auto& r : refs) {
        EXPECT_TRUE(footstep_valid(t, r.footstep_target.xy())) << terrain_kind(spec);
        EXPECT_EQ(swing_penetrations(t, r), 0) << terrain_kind(spec);
      }
    }
  }
}

TEST(GenerateStepReference, DeterministicAndFast) {
  const Terrain t = generate_terrain({StairsSpec{}, {}});
  GaitParams params;
  const StepContext ctx = standing_context(Pose3::planar(0.8, 0, 0, 0), params, 1, t, {0.4, 0, 0});
  const StepReference a = generate_step_reference(ctx, t, params);
  const StepReference b = generate_step_reference(ctx, t, params);
  for (double s : {0.0, 0.13, 0.4}) {
    EXPECT_EQ(a.swing(s), b.swing(s));
    EXPECT_EQ(a.com(s), b.com(s));
  }
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 200;
  for (int i = 0; i < n; ++i) (void)generate_step_reference(ctx, t, params);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / n;
  EXPECT_LT(ms, 1.0);
}
