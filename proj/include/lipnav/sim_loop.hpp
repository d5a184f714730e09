#pragma once

// Deterministic closed-loop runner. A reduced-order robot realizes velocity
// commands through a first-order lag plus Gaussian noise, while per-step gait
// references are synthesized on the terrain. Three rates: integration at
// 1/dt, tracking at tracker.rate, MPC replanning every `replan_steps` steps.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lipnav/clf_reward.hpp"
#include "lipnav/nav_tracking.hpp"
#include "lipnav/ref_modulation.hpp"

namespace lipnav {

struct Scenario {
  TerrainSpec terrain;
  NavState start;
  NavState goal{5.0, 0.0, 0.0};
  std::vector<Obstacle> obstacles;
  GaitParams gait;
  MpcConfig mpc;
  TrackerConfig tracker;
  double lag_tau = 0.3;
  Vec3 noise_std = Vec3::Constant(0.02);
  std::uint64_t seed = 0;
  double max_time = 30.0;
  double goal_tol_pos = 0.15;
  double goal_tol_yaw = 0.2;
  double sim_dt = 0.01;
  int replan_steps = 2;
  bool modulate = true;

  bool operator==(const Scenario&) const = default;

  int ticks_per_tracker() const { return static_cast<int>(std::lround(1.0 / (tracker.rate * sim_dt))); }
  int ticks_per_replan() const { return static_cast<int>(std::lround(replan_steps * gait.T / sim_dt)); }

  void validate() const {
    gait.validate();
    mpc.validate();
    tracker.validate();
    for (const auto& o : obstacles) validate_obstacle(o);
    if (!(max_time > 0)) throw ValidationError("max_time must be > 0");
    if (!(goal_tol_pos > 0 && goal_tol_yaw > 0)) throw ValidationError("goal tolerances must be > 0");
    if (!(sim_dt > 0)) throw ValidationError("sim_dt must be > 0");
    if (!(lag_tau > 0)) throw ValidationError("lag_tau must be > 0");
    if (!(noise_std.minCoeff() >= 0)) throw ValidationError("noise_std must be >= 0");
    if (replan_steps < 1) throw ValidationError("replan_steps must be >= 1");
    auto multiple = [&](double period) {
      const double n = period / sim_dt;
      return n >= 1.0 && std::abs(n - std::round(n)) < 1e-9;
    };
    if (!multiple(gait.T)) throw ValidationError("gait.T must be an integer multiple of sim_dt");
    if (!multiple(1.0 / tracker.rate)) throw ValidationError("tracker period must be an integer multiple of sim_dt");
    if (ticks_per_replan() % ticks_per_tracker() != 0)
      throw ValidationError("replan period must be an integer multiple of the tracker period");
    if (!all_finite({start.x, start.y, start.theta, goal.x, goal.y, goal.theta}))
      throw ValidationError("start and goal must be finite");
  }
};

struct RobotState {
  NavState nav;
  Se2Velocity velocity;      // realized (lagged + noise), body frame
  Se2Velocity lag_velocity;  // lag filter state
  Pose3 stance_foot;
  Pose3 swing_foot;
  int stance_parity = 1;
  double phase = 0.0;
  double com_z = 0.0;
  StepReference ref;
};

struct RobotModel {
  double lag_tau = 0.3;
  Vec3 noise_std = Vec3::Zero();
  bool modulate = true;
};

/// Command used to build the next step: the lagged velocity plus a correction that pulls the
/// midpoint of the feet toward where the navigation state will be at the end of the step.
inline Se2Velocity step_command(const RobotState& s, const Pose3& stance, const GaitParams& params) {
  const Vec2 v_world = rot2(s.nav.theta) * Vec2(s.lag_velocity.vx, s.lag_velocity.vy);
  const Vec2 base_end = Vec2(s.nav.x, s.nav.y) + params.T * v_world;
  const StepTargets nom = desired_step_lengths(s.lag_velocity, params);
  const Vec2 target = frame_to_world(nominal_step(nom, s.stance_parity), stance);
  const Vec2 err = world_to_frame(base_end, stance) - world_to_frame(0.5 * (stance.xy() + target), stance);
  return {s.lag_velocity.vx + err.x() / params.T, s.lag_velocity.vy + err.y() / params.T, s.lag_velocity.wz};
}

inline StepReference build_step(const RobotState& s, const Terrain& terrain, const GaitParams& params, bool modulate) {
  // The stance frame yaw follows the navigation heading so the gait cannot drift in orientation.
  StepContext ctx;
  ctx.stance_pose = s.stance_foot;
  ctx.stance_pose.yaw = wrap_angle(s.nav.theta);
  ctx.swing_start = s.swing_foot;
  ctx.stance_parity = s.stance_parity;
  const Se2Velocity c = step_command(s, ctx.stance_pose, params);
  ctx.cmd = {std::clamp(c.vx, -params.v_x_max, params.v_x_max), std::clamp(c.vy, -0.5, 0.5), c.wz};
  return modulate ? generate_step_reference(ctx, terrain, params) : assemble_nominal_step(ctx, params);
}

inline RobotState initial_robot_state(const NavState& start, const Terrain& terrain, const GaitParams& params,
                                      bool modulate) {
  RobotState s;
  s.nav = start;
  const Pose3 base = Pose3::planar(start.x, start.y, 0.0, start.theta);
  const StepContext ctx = standing_context(base, params, 1, terrain);
  s.stance_foot = ctx.stance_pose;
  s.swing_foot = ctx.swing_start;
  s.stance_parity = 1;
  s.ref = build_step(s, terrain, params, modulate);
  s.com_z = s.ref.com(0.0).z;
  return s;
}

inline void check_in_bounds(const Terrain& terrain, double x, double y) {
  if (!terrain.heightfield.contains(x, y))
    throw OutOfBounds("robot left the terrain at (" + std::to_string(x) + ", " + std::to_string(y) + ")");
}

/// One integration tick. Returns true when a step event (touchdown) happened.
inline bool advance_robot(RobotState& s, const Se2Velocity& cmd, const Terrain& terrain, const GaitParams& params,
                          const RobotModel& model, double dt, std::mt19937_64& rng) {
  if (!(dt > 0)) throw ValidationError("dt must be > 0");
  const double a = 1.0 - std::exp(-dt / model.lag_tau);
  s.lag_velocity = {s.lag_velocity.vx + a * (cmd.vx - s.lag_velocity.vx),
                    s.lag_velocity.vy + a * (cmd.vy - s.lag_velocity.vy),
                    s.lag_velocity.wz + a * (cmd.wz - s.lag_velocity.wz)};
  std::normal_distribution<double> n01(0.0, 1.0);
  const double nx = n01(rng), ny = n01(rng), nw = n01(rng);
  s.velocity = {s.lag_velocity.vx + model.noise_std.x() * nx, s.lag_velocity.vy + model.noise_std.y() * ny,
                s.lag_velocity.wz + model.noise_std.z() * nw};
  s.nav = nav_step(s.nav, {s.velocity.vx, s.velocity.vy, s.velocity.wz}, dt);
  check_in_bounds(terrain, s.nav.x, s.nav.y);

  s.phase += dt;
  bool stepped = false;
  if (s.phase >= params.T - 1e-9) {
    s.phase = std::max(0.0, s.phase - params.T);
    const Pose3 landed = s.ref.footstep_target;
    check_in_bounds(terrain, landed.x, landed.y);
    s.swing_foot = s.stance_foot;
    s.stance_foot = landed;
    s.stance_parity = next_parity(s.stance_parity);
    s.ref = build_step(s, terrain, params, model.modulate);
    stepped = true;
  }
  s.swing_foot = s.ref.swing(std::min(s.phase, params.T));
  s.com_z = s.ref.com(std::min(s.phase, params.T)).z;
  return stepped;
}

// ---------------------------------------------------------------------------
// Trace

enum class RunStatus { Running, GoalReached, TimeLimit, Fault };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "Running";
    case RunStatus::GoalReached: return "GoalReached";
    case RunStatus::TimeLimit: return "TimeLimit";
    case RunStatus::Fault: return "Fault";
  }
  return "Unknown";
}

struct TraceRow {
  double t = 0.0;
  NavState nav;
  Se2Velocity velocity;
  Se2Velocity cmd;
  int plan_id = -1;
  int stance_parity = 1;
  double phase = 0.0;
  Vec3 stance_foot = Vec3::Zero();
  Vec3 swing_foot = Vec3::Zero();
  Vec3 swing_ref = Vec3::Zero();
  Vec3 com = Vec3::Zero();
  Vec3 com_ref = Vec3::Zero();
  std::vector<double> h;
  std::string events;
};

struct Footfall {
  double t = 0.0;
  Pose3 pose;
  int parity = 1;
  bool valid = false;
  int penetrations = 0;
};

struct PlanRecord {
  int id = 0;
  double t = 0.0;
  Plan plan;
};

struct Trace {
  std::vector<TraceRow> rows;
  std::vector<Footfall> footfalls;
  std::vector<PlanRecord> plans;
  RunStatus status = RunStatus::Running;
  std::string fault;
  double time_to_goal = -1.0;
  int tracker_ticks = 0;
};

struct RunSummary {
  RunStatus status = RunStatus::Running;
  double time_to_goal = -1.0;
  double sim_time = 0.0;
  double min_barrier = std::numeric_limits<double>::infinity();
  double foothold_validity = 1.0;
  int steps = 0;
  int replans = 0;
  int penetrations = 0;
  double mean_reward_foot = 0.0;
  double mean_reward_com = 0.0;
  std::string fault;
};

inline std::vector<ChannelSample> trace_channels(const Trace& trace, bool reference) {
  std::vector<ChannelSample> out;
  out.reserve(trace.rows.size());
  for (const auto& r : trace.rows)
    out.push_back({r.t, reference ? r.swing_ref : r.swing_foot, reference ? r.com_ref : r.com});
  return out;
}

inline RunSummary summarize(const Trace& trace) {
  RunSummary s;
  s.status = trace.status;
  s.time_to_goal = trace.time_to_goal;
  s.fault = trace.fault;
  s.sim_time = trace.rows.empty() ? 0.0 : trace.rows.back().t;
  for (const auto& r : trace.rows)
    for (double h : r.h) s.min_barrier = std::min(s.min_barrier, h);
  s.steps = static_cast<int>(trace.footfalls.size());
  s.replans = static_cast<int>(trace.plans.size());
  int valid = 0;
  for (const auto& f : trace.footfalls) {
    valid += f.valid ? 1 : 0;
    s.penetrations += f.penetrations;
  }
  s.foothold_validity = trace.footfalls.empty() ? 1.0 : double(valid) / trace.footfalls.size();
  if (!trace.rows.empty()) {
    const auto eval = evaluate_trace(trace_channels(trace, false), trace_channels(trace, true), default_objectives());
    auto mean = [](const std::vector<RewardSample>& v) {
      double acc = 0.0;
      for (const auto& r : v) acc += r.r_total;
      return acc / v.size();
    };
    s.mean_reward_foot = mean(eval.rewards[0]);
    s.mean_reward_com = mean(eval.rewards[1]);
  }
  return s;
}

inline bool goal_reached(const NavState& z, const Scenario& scn) {
  return std::hypot(z.x - scn.goal.x, z.y - scn.goal.y) <= scn.goal_tol_pos &&
         std::abs(wrap_angle(z.theta - scn.goal.theta)) <= scn.goal_tol_yaw;
}

inline void append_event(std::string& events, const std::string& e) {
  if (!events.empty()) events += ';';
  events += e;
}

inline Trace run_scenario(const Scenario& scn) {
  scn.validate();
  Trace trace;
  const Terrain terrain = generate_terrain(scn.terrain);
  const RobotModel model{scn.lag_tau, scn.noise_std, scn.modulate};
  std::mt19937_64 rng(scn.seed);
  const int tracker_every = scn.ticks_per_tracker();
  const int replan_every = scn.ticks_per_replan();
  const int max_ticks = static_cast<int>(std::floor(scn.max_time / scn.sim_dt + 1e-9));

  auto fault = [&](const std::string& what, TraceRow* row) {
    trace.status = RunStatus::Fault;
    trace.fault = what;
    if (row) append_event(row->events, "fault:" + what);
  };

  RobotState s;
  try {
    check_in_bounds(terrain, scn.start.x, scn.start.y);
    s = initial_robot_state(scn.start, terrain, scn.gait, scn.modulate);
  } catch (const std::exception& e) {
    fault(e.what(), nullptr);
    return trace;
  }

  std::optional<Plan> plan;
  double plan_t0 = 0.0;
  Se2Velocity cmd;

  for (int tick = 0;; ++tick) {
    const double t = tick * scn.sim_dt;
    TraceRow row;
    row.t = t;
    try {
      if (goal_reached(s.nav, scn)) {
        trace.status = RunStatus::GoalReached;
        trace.time_to_goal = t;
        append_event(row.events, "goal");
      } else if (tick >= max_ticks) {
        trace.status = RunStatus::TimeLimit;
        append_event(row.events, "time_limit");
      } else {
        if (tick % replan_every == 0) {
          NavState z0 = s.nav;
          z0.theta = wrap_angle(z0.theta);
          std::optional<Plan> warm;
          if (plan) warm = shift_plan(*plan, static_cast<int>(std::lround((t - plan_t0) / scn.mpc.dt)));
          Plan next = solve_mpc(z0, scn.goal, scn.obstacles, scn.mpc, warm ? &*warm : nullptr);
          const int id = static_cast<int>(trace.plans.size());
          append_event(row.events, "replan:" + std::to_string(id) + ":" + to_string(next.status));
          trace.plans.push_back({id, t, next});
          if (next.status == SolveStatus::Infeasible) throw Error("Infeasible: MPC slack above threshold");
          plan = std::move(next);
          plan_t0 = t;
        }
        if (tick % tracker_every == 0) {
          ++trace.tracker_ticks;
          try {
            const PlanSample ref = interpolate_plan(*plan, t - plan_t0);
            cmd = velocity_feedback(ref.z_ref, ref.v_ff, s.nav, scn.tracker);
          } catch (const PlanExpired&) {
            cmd = {};
          }
        }
      }
    } catch (const std::exception& e) {
      fault(e.what(), &row);
    }

    row.nav = {s.nav.x, s.nav.y, wrap_angle(s.nav.theta)};
    row.velocity = s.velocity;
    row.cmd = cmd;
    row.plan_id = static_cast<int>(trace.plans.size()) - 1;
    row.stance_parity = s.stance_parity;
    row.phase = s.phase;
    row.stance_foot = s.stance_foot.position();
    row.swing_foot = s.swing_foot.position();
    row.swing_ref = s.ref.swing(std::min(s.phase, scn.gait.T)).position();
    row.com = Vec3(s.nav.x, s.nav.y, s.com_z);
    row.com_ref = s.ref.com(std::min(s.phase, scn.gait.T)).position();
    for (const auto& o : scn.obstacles) row.h.push_back(obstacle_h(o, s.nav));

    if (trace.status != RunStatus::Running) {
      trace.rows.push_back(std::move(row));
      break;
    }

    try {
      const Pose3 landing = s.ref.footstep_target;
      const int landing_parity = next_parity(s.stance_parity);
      const StepReference executed = s.ref;
      if (advance_robot(s, cmd, terrain, scn.gait, model, scn.sim_dt, rng)) {
        append_event(row.events, "step");
        trace.footfalls.push_back({t + scn.sim_dt, landing, landing_parity, footstep_valid(terrain, landing.xy()),
                                   swing_penetrations(terrain, executed)});
      }
    } catch (const std::exception& e) {
      fault(e.what(), &row);
    }
    trace.rows.push_back(std::move(row));
    if (trace.status != RunStatus::Running) break;
  }
  return trace;
}

}  // namespace lipnav
