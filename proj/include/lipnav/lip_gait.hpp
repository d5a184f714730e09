#pragma once

// Linear inverted pendulum gait synthesis: closed-form in-step flow, the
// step-to-step map with stance-foot reset, and fixed-point gaits for the
// sagittal (period-1) and lateral (period-2) planes.

#include <cmath>
#include <string>

#include "lipnav/common.hpp"

namespace lipnav {

struct GaitParams {
  double T = 0.4;          // step period, s
  double z0 = 0.62;        // nominal CoM height, m
  double w = 0.20;         // nominal lateral step width, m
  double z_sw_max = 0.12;  // swing apex height, m
  double z_a = 0.02;       // CoM-z oscillation amplitude at v_x_max, m
  double theta_a = 0.3;    // arm swing amplitude at v_x_max, rad
  double theta_0_left = 0.0;
  double theta_0_right = kPi;
  double v_x_max = 0.8;    // m/s

  double lambda() const { return std::sqrt(kGravity / z0); }

  void validate() const {
    if (!(T > 0.0)) throw ValidationError("gait.T must be > 0");
    if (!(z0 > 0.0)) throw ValidationError("gait.z0 must be > 0");
    if (!(w > 0.0)) throw ValidationError("gait.w must be > 0");
    if (!(v_x_max > 0.0)) throw ValidationError("gait.v_x_max must be > 0");
    if (!all_finite({z_sw_max, z_a, theta_a, theta_0_left, theta_0_right}))
      throw ValidationError("gait parameters must be finite");
    const double phase_gap = wrap_angle(theta_0_left - theta_0_right);
    if (std::abs(std::abs(phase_gap) - kPi) > 1e-9)
      throw ValidationError("gait.theta_0_left - gait.theta_0_right must equal pi (mod 2pi)");
  }

  bool operator==(const GaitParams&) const = default;
};

/// Pendulum state in one plane: CoM position relative to the stance foot and its velocity.
struct LipState {
  double p = 0.0;
  double v = 0.0;

  Vec2 vec() const { return {p, v}; }
  static LipState from(const Vec2& x) { return {x(0), x(1)}; }
  bool operator==(const LipState&) const = default;
};

/// Step lengths realizing a commanded planar velocity. u_y1 is the wider step.
struct StepTargets {
  double u_x = 0.0;
  double u_y1 = 0.0;
  double u_y2 = 0.0;
};

struct GaitFixedPoints {
  LipState x_sag;
  LipState x_lat_1;
  LipState x_lat_2;

  const LipState& lateral(int parity) const { return parity == 1 ? x_lat_1 : x_lat_2; }
};

/// State-transition matrix exp(A t) of the pendulum.
inline Mat2 lip_transition(double t, double lambda) {
  const double c = std::cosh(lambda * t), s = std::sinh(lambda * t);
  Mat2 m;
  m << c, s / lambda, lambda * s, c;
  return m;
}

inline LipState lip_flow(const LipState& x, double t, double lambda) {
  const double c = std::cosh(lambda * t), s = std::sinh(lambda * t);
  return {c * x.p + s * x.v / lambda, lambda * s * x.p + c * x.v};
}

/// Flow over one period, then re-express p relative to the new stance foot placed u ahead.
inline LipState step_to_step(const LipState& x, double u, const GaitParams& params) {
  LipState next = lip_flow(x, params.T, params.lambda());
  next.p -= u;
  return next;
}

inline StepTargets desired_step_lengths(const Se2Velocity& cmd, const GaitParams& params) {
  return {cmd.vx * params.T, cmd.vy * params.T + params.w, cmd.vy * params.T - params.w};
}

inline GaitFixedPoints gait_fixed_points(const StepTargets& targets, const GaitParams& params) {
  const double lambda = params.lambda();
  if (!(lambda * params.T > 1e-9))
    throw DegenerateGait("lambda*T too small: step-to-step map is numerically singular");

  const Mat2 Ad = lip_transition(params.T, lambda);
  const Vec2 Bd(-1.0, 0.0);
  const Mat2 I = Mat2::Identity();

  GaitFixedPoints fp;
  fp.x_sag = LipState::from((I - Ad).partialPivLu().solve(Bd * targets.u_x));
  const Vec2 lat1 = (I - Ad * Ad).partialPivLu().solve(Ad * Bd * targets.u_y1 + Bd * targets.u_y2);
  fp.x_lat_1 = LipState::from(lat1);
  fp.x_lat_2 = LipState::from(Ad * lat1 + Bd * targets.u_y1);
  return fp;
}

}  // namespace lipnav
