#pragma once

// Flat-ground, SE(2)-controllable whole-body reference for a single step:
// CoM pose from the pendulum fixed points, a cubic-bezier swing foot, and
// velocity-scaled CoM-height and arm sinusoids.

#include <cmath>
#include <optional>
#include <utility>

#include "lipnav/common.hpp"
#include "lipnav/lip_gait.hpp"
#include "lipnav/piecewise.hpp"

namespace lipnav {

struct BezierValue {
  double b = 0.0;
  double b_dot = 0.0;
};

inline void check_phase(double t, double T) {
  if (!(t >= 0.0 && t <= T)) throw OutOfPhase("phase " + std::to_string(t) + " outside [0, T]");
}

/// Cubic with b(0)=0, b'(0)=0, b(T)=1, b'(T)=0.
inline BezierValue bezier_profile(double t, double T) {
  check_phase(t, T);
  const double s = t / T;
  return {s * s * (3.0 - 2.0 * s), 6.0 * s * (1.0 - s) / T};
}

/// Up-and-down apex profile: z_max * b(2t) on the first half, z_max * b(2(T - t)) on the second.
inline double swing_height_profile(double t, double T, double z_max) {
  check_phase(t, T);
  return t < 0.5 * T ? z_max * bezier_profile(2.0 * t, T).b : z_max * bezier_profile(2.0 * (T - t), T).b;
}

struct ArmAngles {
  double left = 0.0;
  double right = 0.0;
};

inline ArmAngles arm_angles(double t, const Se2Velocity& cmd, const GaitParams& params) {
  check_phase(t, params.T);
  const double amp = params.theta_a * cmd.vx / params.v_x_max;
  const double w = 2.0 * kPi / params.T;
  return {amp * std::sin(w * t + params.theta_0_left), amp * std::sin(w * t + params.theta_0_right)};
}

/// CoM height relative to the stance surface.
inline double com_height_nominal(double t, const Se2Velocity& cmd, const GaitParams& params) {
  const double w = 2.0 * kPi / params.T;
  return params.z0 + params.z_a * (cmd.vx / params.v_x_max) * (std::sin(w * t + kPi) - 1.0);
}

/// Per-step inputs. Parity 1: the swing foot steps toward +y (right-foot stance, u_y1);
/// parity 2: the swing foot steps toward -y (left-foot stance, u_y2).
struct StepContext {
  Pose3 stance_pose;
  Pose3 swing_start;
  int stance_parity = 1;
  Se2Velocity cmd;
};

inline int next_parity(int parity) { return parity == 1 ? 2 : 1; }

/// Swing-foot pose over one step. Planar position, yaw, roll and pitch follow the
/// bezier blend from the start pose to the end pose; z is the apex profile on top
/// of either a bezier blend of start/end heights or a terrain envelope.
class SwingTrajectory {
 public:
  SwingTrajectory() = default;

  SwingTrajectory(const Pose3& stance, const Pose3& start, const Pose3& end, double apex, double period,
                  std::optional<PhaseEnvelope> lift = std::nullopt)
      : stance_(stance),
        start_(start),
        end_(end),
        start_xy_(world_to_frame(start.xy(), stance)),
        end_xy_(world_to_frame(end.xy(), stance)),
        start_yaw_(wrap_angle(start.yaw - stance.yaw)),
        end_yaw_(wrap_angle(end.yaw - stance.yaw)),
        apex_(apex),
        period_(period),
        lift_(std::move(lift)) {}

  /// Stance-frame yaw target can be set past +-pi (yaw integration over a step).
  void set_end_relative_yaw(double yaw) { end_yaw_ = yaw; }

  Pose3 at(double t) const {
    const double b = bezier_profile(t, period_).b;
    const Vec2 xy = frame_to_world(b * end_xy_ + (1.0 - b) * start_xy_, stance_);
    const double base = lift_ ? (*lift_)(t) : b * end_.z + (1.0 - b) * start_.z;
    const double z = swing_height_profile(t, period_, apex_) + base;
    const double yaw = stance_.yaw + b * end_yaw_ + (1.0 - b) * start_yaw_;
    return {xy.x(), xy.y(), z, b * end_.roll + (1.0 - b) * start_.roll,
            b * end_.pitch + (1.0 - b) * start_.pitch, yaw};
  }

  Vec2 xy_at(double t) const {
    const double b = bezier_profile(t, period_).b;
    return frame_to_world(b * end_xy_ + (1.0 - b) * start_xy_, stance_);
  }

  const Pose3& start() const { return start_; }
  const Pose3& end() const { return end_; }
  double period() const { return period_; }
  double apex() const { return apex_; }
  const std::optional<PhaseEnvelope>& lift() const { return lift_; }

 private:
  Pose3 stance_;
  Pose3 start_;
  Pose3 end_;
  Vec2 start_xy_ = Vec2::Zero();
  Vec2 end_xy_ = Vec2::Zero();
  double start_yaw_ = 0.0;
  double end_yaw_ = 0.0;
  double apex_ = 0.0;
  double period_ = 1.0;
  std::optional<PhaseEnvelope> lift_;
};

/// Raises the CoM by the line joining stance height to target height, linear in phase.
inline double stance_line_lift(double t, double stance_z, double target_z, double T) {
  return stance_z + (target_z - stance_z) * (t / T);
}

class ComTrajectory {
 public:
  ComTrajectory() = default;

  ComTrajectory(const Pose3& stance, const GaitFixedPoints& fp, int parity, const Se2Velocity& cmd,
                const GaitParams& params, double stance_z, double target_z)
      : stance_(stance),
        sag_(fp.x_sag),
        lat_(fp.lateral(parity)),
        cmd_(cmd),
        params_(params),
        stance_z_(stance_z),
        target_z_(target_z) {}

  /// Pendulum states (sagittal, lateral) at phase t, relative to the stance foot.
  std::pair<LipState, LipState> plane_states(double t) const {
    check_phase(t, params_.T);
    const double lambda = params_.lambda();
    return {lip_flow(sag_, t, lambda), lip_flow(lat_, t, lambda)};
  }

  Pose3 at(double t) const {
    const auto [sag, lat] = plane_states(t);
    const Vec2 xy = frame_to_world(Vec2(sag.p, lat.p), stance_);
    const double z = com_height_nominal(t, cmd_, params_) + stance_line_lift(t, stance_z_, target_z_, params_.T);
    return {xy.x(), xy.y(), z, 0.0, 0.0, stance_.yaw + cmd_.wz * (t - 0.5 * params_.T)};
  }

  double stance_z() const { return stance_z_; }
  double target_z() const { return target_z_; }

 private:
  Pose3 stance_;
  LipState sag_;
  LipState lat_;
  Se2Velocity cmd_;
  GaitParams params_;
  double stance_z_ = 0.0;
  double target_z_ = 0.0;
};

struct StepReference {
  double duration = 0.0;
  Pose3 stance_pose;
  int stance_parity = 1;
  Se2Velocity cmd;
  GaitParams params;
  StepTargets targets;
  GaitFixedPoints fixed_points;
  ComTrajectory com_traj;
  SwingTrajectory swing_traj;
  Pose3 footstep_target;
  bool modulated = false;

  Pose3 com(double t) const { return com_traj.at(t); }
  Pose3 swing(double t) const { return swing_traj.at(t); }
  ArmAngles arms(double t) const { return arm_angles(t, cmd, params); }
};

/// Stance-frame planar step for the given parity.
inline Vec2 nominal_step(const StepTargets& targets, int parity) {
  return {targets.u_x, parity == 1 ? targets.u_y1 : targets.u_y2};
}

inline Pose3 swing_pose_nominal(double t, const StepContext& ctx, const Vec2& target_xy, const GaitParams& params) {
  check_phase(t, params.T);
  const Vec2 world = frame_to_world(target_xy, ctx.stance_pose);
  const Pose3 end(world.x(), world.y(), ctx.stance_pose.z, 0.0, 0.0, ctx.stance_pose.yaw + ctx.cmd.wz * params.T);
  SwingTrajectory swing(ctx.stance_pose, ctx.swing_start, end, params.z_sw_max, params.T);
  swing.set_end_relative_yaw(ctx.cmd.wz * params.T);
  return swing.at(t);
}

inline Pose3 com_pose_nominal(double t, const GaitFixedPoints& fp, const StepContext& ctx, const GaitParams& params) {
  const ComTrajectory com(ctx.stance_pose, fp, ctx.stance_parity, ctx.cmd, params, ctx.stance_pose.z,
                          ctx.stance_pose.z);
  return com.at(t);
}

inline void validate_context(const StepContext& ctx) {
  if (ctx.stance_parity != 1 && ctx.stance_parity != 2) throw ValidationError("stance_parity must be 1 or 2");
  if (!all_finite({ctx.cmd.vx, ctx.cmd.vy, ctx.cmd.wz})) throw ValidationError("command must be finite");
}

inline StepReference assemble_nominal_step(const StepContext& ctx, const GaitParams& params) {
  validate_context(ctx);
  StepReference ref;
  ref.duration = params.T;
  ref.stance_pose = ctx.stance_pose;
  ref.stance_parity = ctx.stance_parity;
  ref.cmd = ctx.cmd;
  ref.params = params;
  ref.targets = desired_step_lengths(ctx.cmd, params);
  ref.fixed_points = gait_fixed_points(ref.targets, params);

  const double yaw_advance = ctx.cmd.wz * params.T;
  const Vec2 target = frame_to_world(nominal_step(ref.targets, ctx.stance_parity), ctx.stance_pose);
  ref.footstep_target = Pose3(target.x(), target.y(), ctx.stance_pose.z, 0.0, 0.0, ctx.stance_pose.yaw + yaw_advance);

  ref.com_traj = ComTrajectory(ctx.stance_pose, ref.fixed_points, ctx.stance_parity, ctx.cmd, params,
                               ctx.stance_pose.z, ctx.stance_pose.z);
  ref.swing_traj = SwingTrajectory(ctx.stance_pose, ctx.swing_start, ref.footstep_target, params.z_sw_max, params.T);
  ref.swing_traj.set_end_relative_yaw(yaw_advance);
  ref.modulated = false;
  return ref;
}

}  // namespace lipnav
