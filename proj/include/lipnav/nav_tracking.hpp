#pragma once

// Continuous reference from a discrete plan, and the feedforward + feedback
// velocity command sent to the gait at 10 Hz.

#include "lipnav/nav_mpc.hpp"

namespace lipnav {

struct TrackerConfig {
  Vec3 K = Vec3::Ones();  // diagonal gain on (x, y, theta) error
  double rate = 10.0;
  InputBox box;

  bool operator==(const TrackerConfig&) const = default;

  void validate() const {
    if (!(K.minCoeff() >= 0)) throw ValidationError("TrackerConfig: gains must be >= 0");
    if (!(rate > 0)) throw ValidationError("TrackerConfig: rate must be > 0");
  }
};

struct PlanSample {
  NavState z_ref;
  NavInput v_ff;
};

inline PlanSample interpolate_plan(const Plan& plan, double t) {
  const int n = static_cast<int>(plan.inputs.size());
  if (!(t >= 0.0) || t >= n * plan.dt - 1e-12) throw PlanExpired("plan queried outside [0, N dt)");
  const int k = std::min(static_cast<int>(std::floor(t / plan.dt + 1e-9)), n - 1);
  const double s = std::max(0.0, t / plan.dt - k);
  const NavState& a = plan.states[k];
  const NavState& b = plan.states[k + 1];
  const double dth = wrap_angle(b.theta - a.theta);
  return {{a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), wrap_angle(a.theta + s * dth)}, plan.inputs[k]};
}

inline Se2Velocity velocity_feedback(const NavState& z_ref, const NavInput& v_ff, const NavState& z_meas,
                                     const TrackerConfig& cfg) {
  // Feedforward lives in the planning body frame; express it in world coordinates first.
  const Vec2 ff_world = rot2(z_ref.theta) * Vec2(v_ff.v_par, v_ff.v_perp);
  const Vec2 e_xy(z_ref.x - z_meas.x, z_ref.y - z_meas.y);
  const double e_th = wrap_angle(z_ref.theta - z_meas.theta);
  const Vec2 world = ff_world + Vec2(cfg.K.x() * e_xy.x(), cfg.K.y() * e_xy.y());
  const Vec2 body = rot2(-z_meas.theta) * world;
  const NavInput cmd = cfg.box.clamp({body.x(), body.y(), v_ff.omega + cfg.K.z() * e_th});
  return {cmd.v_par, cmd.v_perp, cmd.omega};
}

}  // namespace lipnav
