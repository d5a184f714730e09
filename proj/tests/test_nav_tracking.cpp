#include <gtest/gtest.h>

#include "lipnav/nav_tracking.hpp"
#include "oracles.hpp"

using namespace lipnav;

namespace {

Plan toy_plan() {
  Plan p;
  p.dt = 0.4;
  p.inputs = {{0.5, 0.0, 0.2}, {0.8, 0.1, -0.3}, {0.0, 0.0, 0.0}};
  p.states = rollout({1.0, -1.0, 0.3}, p.inputs, p.dt);
  return p;
}

}  // namespace

TEST(InterpolatePlan, KnotsAndMidpoints) {
  const Plan p = toy_plan();
  for (int k = 0; k < 3; ++k) {
    const PlanSample s = interpolate_plan(p, k * p.dt);
    EXPECT_NEAR(s.z_ref.x, p.states[k].x, 1e-15);
    EXPECT_NEAR(s.z_ref.y, p.states[k].y, 1e-15);
    EXPECT_NEAR(s.z_ref.theta, p.states[k].theta, 1e-15);
    EXPECT_EQ(s.v_ff, p.inputs[k]);
    const PlanSample m = interpolate_plan(p, (k + 0.5) * p.dt);
    EXPECT_NEAR(m.z_ref.x, 0.5 * (p.states[k].x + p.states[k + 1].x), 1e-15);
    EXPECT_NEAR(m.z_ref.y, 0.5 * (p.states[k].y + p.states[k + 1].y), 1e-15);
    EXPECT_EQ(m.v_ff, p.inputs[k]);
  }
  EXPECT_THROW(interpolate_plan(p, 1.2), PlanExpired);
  EXPECT_THROW(interpolate_plan(p, -0.1), PlanExpired);
}

TEST(InterpolatePlan, HeadingTakesShortestArc) {
  Plan p;
  p.dt = 1.0;
  p.inputs = {{}};
  p.states = {{0, 0, 3.1}, {0, 0, -3.1}};
  const double mid = interpolate_plan(p, 0.5).z_ref.theta;
  EXPECT_NEAR(std::abs(mid), kPi, 1e-12);
}

TEST(VelocityFeedback, Examples) {
  const TrackerConfig cfg;
  const Se2Velocity a = velocity_feedback({0, 0, 0.1}, {}, {0, 0, 0}, cfg);
  EXPECT_NEAR(a.vx, 0.0, 1e-15);
  EXPECT_NEAR(a.vy, 0.0, 1e-15);
  EXPECT_NEAR(a.wz, 0.1, 1e-15);

  // Zero error passes feedforward through unchanged in the shared body frame.
  const NavState z{2, 3, 1.1};
  const Se2Velocity b = velocity_feedback(z, {0.4, -0.1, 0.3}, z, cfg);
  EXPECT_NEAR(b.vx, 0.4, 1e-15);
  EXPECT_NEAR(b.vy, -0.1, 1e-15);
  EXPECT_NEAR(b.wz, 0.3, 1e-15);

  // World x error seen from a robot facing +y is a rightward (negative vy) correction.
  const Se2Velocity c = velocity_feedback({0.1, 0, kPi / 2}, {}, {0, 0, kPi / 2}, cfg);
  EXPECT_NEAR(c.vx, 0.0, 1e-15);
  EXPECT_NEAR(c.vy, -0.1, 1e-15);

  const Se2Velocity sat = velocity_feedback({100, -100, 3.0}, {}, {0, 0, 0}, cfg);
  EXPECT_EQ(sat.vx, cfg.box.hi.v_par);
  EXPECT_EQ(sat.vy, cfg.box.lo.v_perp);
  EXPECT_EQ(sat.wz, cfg.box.hi.omega);
}

TEST(VelocityFeedback, BoxWrappingAndZeroGain) {
  auto g = oracle::rng(31);
  TrackerConfig zero;
  zero.K.setZero();
  const TrackerConfig cfg;
  for (int i = 0; i < 1000; ++i) {
    const NavState ref{oracle::uniform(g, -2, 2), oracle::uniform(g, -2, 2), oracle::uniform(g, -kPi, kPi)};
    const NavState meas{oracle::uniform(g, -2, 2), oracle::uniform(g, -2, 2), oracle::uniform(g, -kPi, kPi)};
    const NavInput v{oracle::uniform(g, -0.3, 0.8), oracle::uniform(g, -0.2, 0.2), oracle::uniform(g, -0.8, 0.8)};
    const Se2Velocity out = velocity_feedback(ref, v, meas, cfg);
    EXPECT_GE(out.vx, cfg.box.lo.v_par);
    EXPECT_LE(out.vx, cfg.box.hi.v_par);
    EXPECT_GE(out.vy, cfg.box.lo.v_perp);
    EXPECT_LE(out.vy, cfg.box.hi.v_perp);
    EXPECT_GE(out.wz, cfg.box.lo.omega);
    EXPECT_LE(out.wz, cfg.box.hi.omega);

    NavState spun = meas;
    spun.theta += 2 * kPi;
    const Se2Velocity w = velocity_feedback(ref, v, spun, cfg);
    EXPECT_NEAR(w.vx, out.vx, 1e-12);
    EXPECT_NEAR(w.vy, out.vy, 1e-12);
    EXPECT_NEAR(w.wz, out.wz, 1e-12);

    const Se2Velocity ff = velocity_feedback(ref, v, meas, zero);
    const Vec2 expect = rot2(meas.theta - ref.theta).transpose() * Vec2(v.v_par, v.v_perp);
    EXPECT_NEAR(ff.vx, std::clamp(expect.x(), -0.3, 0.8), 1e-12);
    EXPECT_NEAR(ff.vy, std::clamp(expect.y(), -0.2, 0.2), 1e-12);
    EXPECT_EQ(ff.wz, v.omega);
  }
}
