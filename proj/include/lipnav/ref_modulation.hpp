#pragma once

// Terrain-consistent step references. The nominal flat-ground step is modified
// in four stages: project the footstep onto the nearest valid foothold, retarget
// the swing beziers to the projected pose (including terrain roll/pitch), lift
// the swing height by the upper convex hull of the terrain along the corridor,
// and lift the CoM by the line joining stance and target heights.

#include <vector>

#include "lipnav/ref_nominal.hpp"
#include "lipnav/terrain.hpp"

namespace lipnav {

struct ModulationOptions {
  int corridor_samples = 21;
  double clearance_margin = 0.0;  // optional additive hull offset, m
};

/// G^{-1}: world planar point into the stance frame.
inline Vec2 footstep_in_stance_frame(const Vec3& world, const Pose3& stance_pose) {
  return world_to_frame(world.head<2>(), stance_pose);
}

/// Stance-frame step -> world -> nearest foothold.
inline FootholdTarget modulate_footstep(const Vec2& nominal_u, const Pose3& stance_pose, const Terrain& terrain) {
  return project_footstep(terrain, frame_to_world(nominal_u, stance_pose));
}

/// Terrain inclination (world roll/pitch) re-expressed along the axes of a foot with the given yaw.
inline std::pair<double, double> foot_inclination(double world_roll, double world_pitch, double foot_yaw) {
  const Vec3 n(-std::tan(world_pitch), -std::tan(world_roll), 1.0);
  const Vec3 local = Eigen::AngleAxisd(-foot_yaw, Vec3::UnitZ()) * n;
  return {std::atan2(-local.y(), local.z()), std::atan2(-local.x(), local.z())};
}

inline SwingTrajectory modulate_swing(const StepReference& nominal, const FootholdTarget& target,
                                      const Terrain& terrain, const GaitParams& params,
                                      const ModulationOptions& options = {}) {
  const Pose3& nominal_end = nominal.footstep_target;
  const auto [roll, pitch] = foot_inclination(target.roll, target.pitch, nominal_end.yaw);
  const Pose3 end(target.position.x(), target.position.y(), target.position.z(), roll, pitch, nominal_end.yaw);
  const double yaw_advance = nominal.cmd.wz * params.T;

  SwingTrajectory planar(nominal.stance_pose, nominal.swing_traj.start(), end, params.z_sw_max, params.T);
  planar.set_end_relative_yaw(yaw_advance);
  PhaseEnvelope lift = swing_corridor_hull(
      terrain, [&](double t) { return planar.xy_at(t); }, params.T, options.corridor_samples,
      options.clearance_margin);

  SwingTrajectory swing(nominal.stance_pose, nominal.swing_traj.start(), end, params.z_sw_max, params.T,
                        std::move(lift));
  swing.set_end_relative_yaw(yaw_advance);
  return swing;
}

template <class NominalZ>
auto modulate_com(NominalZ nominal_z, double stance_z, double target_z, double T) {
  return [=](double t) { return nominal_z(t) + stance_line_lift(t, stance_z, target_z, T); };
}

inline StepReference generate_step_reference(const StepContext& ctx, const Terrain& terrain, const GaitParams& params,
                                             const ModulationOptions& options = {}) {
  StepReference ref = assemble_nominal_step(ctx, params);
  const FootholdTarget target =
      modulate_footstep(nominal_step(ref.targets, ctx.stance_parity), ctx.stance_pose, terrain);
  ref.swing_traj = modulate_swing(ref, target, terrain, params, options);
  ref.footstep_target = ref.swing_traj.end();
  ref.com_traj = ComTrajectory(ctx.stance_pose, ref.fixed_points, ctx.stance_parity, ctx.cmd, params,
                               ctx.stance_pose.z, target.position.z());
  ref.modulated = true;
  return ref;
}

// ---------------------------------------------------------------------------
// Rollouts and geometric checks

/// Feet placed either side of a base pose, heights taken from the terrain.
/// Parity 1 stands on the right foot (y = -w/2 in the base frame).
inline StepContext standing_context(const Pose3& base, const GaitParams& params, int parity, const Terrain& terrain,
                                    const Se2Velocity& cmd = {}) {
  const double side = parity == 1 ? -0.5 : 0.5;
  const Vec2 stance = frame_to_world(Vec2(0.0, side * params.w), base);
  const Vec2 swing = frame_to_world(Vec2(0.0, -side * params.w), base);
  StepContext ctx;
  ctx.stance_pose = Pose3::planar(stance.x(), stance.y(), terrain.height_at(stance.x(), stance.y()), base.yaw);
  ctx.swing_start = Pose3::planar(swing.x(), swing.y(), terrain.height_at(swing.x(), swing.y()), base.yaw);
  ctx.stance_parity = parity;
  ctx.cmd = cmd;
  return ctx;
}

inline StepContext next_context(const StepReference& ref, const Se2Velocity& cmd) {
  StepContext ctx;
  ctx.stance_pose = ref.footstep_target;
  ctx.swing_start = ref.stance_pose;
  ctx.stance_parity = next_parity(ref.stance_parity);
  ctx.cmd = cmd;
  return ctx;
}

/// Chains `steps` references at a constant command, each next stance at the previous footstep target.
inline std::vector<StepReference> rollout_references(const StepContext& start, const Terrain& terrain,
                                                     const GaitParams& params, int steps, bool modulate,
                                                     const ModulationOptions& options = {}) {
  std::vector<StepReference> out;
  StepContext ctx = start;
  for (int k = 0; k < steps; ++k) {
    out.push_back(modulate ? generate_step_reference(ctx, terrain, params, options) : assemble_nominal_step(ctx, params));
    ctx = next_context(out.back(), ctx.cmd);
  }
  return out;
}

/// Plan-view validity: the point lies inside some foothold polygon footprint.
inline bool footstep_valid(const Terrain& terrain, const Vec2& xy, double tol = 1e-9) {
  for (const FootholdPolygon& poly : terrain.polygons)
    if (convex_contains(poly.footprint(), xy, tol)) return true;
  return false;
}

/// Number of corridor sample phases at which the swing foot is below the terrain.
inline int swing_penetrations(const Terrain& terrain, const StepReference& ref, int n_samples = 21,
                              double tol = 1e-6) {
  int count = 0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = (i == n_samples - 1) ? ref.duration : ref.duration * i / (n_samples - 1);
    const Pose3 p = ref.swing(t);
    if (p.z < terrain.height_at(p.x, p.y) - tol) ++count;
  }
  return count;
}

}  // namespace lipnav
