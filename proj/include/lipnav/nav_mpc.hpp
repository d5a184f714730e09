#pragma once

// SE(2) navigation MPC: single integrator with heading, geometric goal cost,
// input box and discrete-time barrier constraints per obstacle. States are
// eliminated by forward simulation, so every returned plan satisfies the
// dynamics exactly; the remaining inequality NLP over the inputs is solved by
// the interior-point method with an exact Lagrangian Hessian.

#include <array>
#include <chrono>
#include <optional>
#include <variant>
#include <vector>

#include "lipnav/common.hpp"
#include "lipnav/interior_point.hpp"

namespace lipnav {

struct NavState {
  double x = 0.0, y = 0.0, theta = 0.0;
  bool operator==(const NavState&) const = default;
};

struct NavInput {
  double v_par = 0.0, v_perp = 0.0, omega = 0.0;
  bool operator==(const NavInput&) const = default;

  double operator[](int i) const { return i == 0 ? v_par : i == 1 ? v_perp : omega; }
};

inline NavState nav_step(const NavState& z, const NavInput& v, double dt) {
  const double c = std::cos(z.theta), s = std::sin(z.theta);
  return {z.x + dt * (v.v_par * c - v.v_perp * s), z.y + dt * (v.v_par * s + v.v_perp * c), z.theta + dt * v.omega};
}

inline double goal_cost(const NavState& z, const NavState& goal, double q_xy, double q_theta) {
  const double dx = z.x - goal.x, dy = z.y - goal.y, e = z.theta - goal.theta;
  const double s = std::sin(e), c = 1.0 - std::cos(e);
  return q_xy * (dx * dx + dy * dy) + q_theta * (s * s + c * c);
}

// ---------------------------------------------------------------------------
// Obstacles

struct EllipseObstacle {
  Vec2 center = Vec2::Zero();
  Vec2 semi_axes = Vec2::Ones();
  double rotation = 0.0;

  Mat2 shape() const {
    const Mat2 r = rot2(rotation);
    return r * Vec2(1.0 / (semi_axes.x() * semi_axes.x()), 1.0 / (semi_axes.y() * semi_axes.y())).asDiagonal() *
           r.transpose();
  }
  bool operator==(const EllipseObstacle&) const = default;
};

struct HalfplaneObstacle {
  Vec2 normal = Vec2::UnitX();  // points into the free side
  double offset = 0.0;
  bool operator==(const HalfplaneObstacle&) const = default;
};

using Obstacle = std::variant<EllipseObstacle, HalfplaneObstacle>;

inline void validate_obstacle(const Obstacle& obs) {
  if (const auto* e = std::get_if<EllipseObstacle>(&obs)) {
    if (!(e->semi_axes.x() > 0 && e->semi_axes.y() > 0)) throw ValidationError("ellipse semi-axes must be positive");
  } else {
    const auto& h = std::get<HalfplaneObstacle>(obs);
    if (std::abs(h.normal.norm() - 1.0) > 1e-9) throw ValidationError("halfplane normal must be unit length");
  }
}

/// Barrier value with planar gradient and Hessian.
struct BarrierValue {
  double h = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

inline BarrierValue obstacle_barrier(const Obstacle& obs, double x, double y) {
  BarrierValue out;
  if (const auto* e = std::get_if<EllipseObstacle>(&obs)) {
    const Mat2 E = e->shape();
    const Vec2 d = Vec2(x, y) - e->center;
    const Vec2 Ed = E * d;
    const double r = std::sqrt(std::max(d.dot(Ed), 0.0));
    out.h = r - 1.0;
    if (r > 1e-12) {
      out.grad = Ed / r;
      out.hess = (E - Ed * Ed.transpose() / (r * r)) / r;
    }
  } else {
    const auto& hp = std::get<HalfplaneObstacle>(obs);
    out.h = hp.normal.dot(Vec2(x, y)) - hp.offset;
    out.grad = hp.normal;
  }
  return out;
}

inline double obstacle_h(const Obstacle& obs, const NavState& z) { return obstacle_barrier(obs, z.x, z.y).h; }

inline double dcbf_constraint(double h_k, double h_k1, double alpha, double delta) {
  return h_k1 - (1.0 - alpha) * h_k - delta;
}

// ---------------------------------------------------------------------------
// Configuration and plans

struct InputBox {
  NavInput lo{-0.3, -0.2, -0.8};
  NavInput hi{0.8, 0.2, 0.8};
  bool operator==(const InputBox&) const = default;

  double lower(int i) const { return lo[i]; }
  double upper(int i) const { return hi[i]; }
  NavInput clamp(const NavInput& v) const {
    return {std::clamp(v.v_par, lo.v_par, hi.v_par), std::clamp(v.v_perp, lo.v_perp, hi.v_perp),
            std::clamp(v.omega, lo.omega, hi.omega)};
  }
};

struct MpcConfig {
  int N = 25;
  double dt = 0.4;
  double q_xy = 1.0;
  double q_theta = 0.5;
  Vec3 R = Vec3(0.1, 0.2, 0.05);  // diagonal input weight
  double alpha = 0.3;
  double delta = 0.1;
  InputBox box;
  double tol = 1e-8;
  int max_iterations = 200;
  double slack_weight = 1e4;       // quadratic slack penalty
  double slack_weight_l1 = 1e4;    // linear slack penalty
  double infeasible_slack = 1e-4;  // max slack accepted as feasible
  double symmetry_break = 0.05;    // cold-start yaw rate, rad/s

  bool operator==(const MpcConfig&) const = default;

  void validate() const {
    if (N < 1) throw ValidationError("MpcConfig: N must be >= 1");
    if (!(dt > 0)) throw ValidationError("MpcConfig: dt must be > 0");
    if (!(alpha > 0 && alpha < 1)) throw ValidationError("MpcConfig: alpha must lie in (0, 1)");
    if (!(delta >= 0)) throw ValidationError("MpcConfig: delta must be >= 0");
    if (!(R.minCoeff() > 0)) throw ValidationError("MpcConfig: R diagonal entries must be > 0");
    if (!(q_xy >= 0 && q_theta >= 0)) throw ValidationError("MpcConfig: cost weights must be >= 0");
    for (int i = 0; i < 3; ++i)
      if (!(box.lower(i) < 0 && box.upper(i) > 0)) throw ValidationError("MpcConfig: input box must contain zero");
    if (!(tol > 0) || max_iterations < 1) throw ValidationError("MpcConfig: tol > 0 and max_iterations >= 1");
  }
};

enum class SolveStatus { Optimal, MaxIterations, Infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct Plan {
  std::vector<NavState> states;  // z_0..z_N
  std::vector<NavInput> inputs;  // v_0..v_{N-1}
  double dt = 0.4;
  double objective = 0.0;
  double max_violation = 0.0;  // largest negative barrier residual or box excess, >= 0
  double max_slack = 0.0;
  SolveStatus status = SolveStatus::Optimal;
  int iterations = 0;
  double kkt_error = 0.0;
};

inline std::vector<NavState> rollout(const NavState& z0, const std::vector<NavInput>& inputs, double dt) {
  std::vector<NavState> z{z0};
  for (const auto& v : inputs) z.push_back(nav_step(z.back(), v, dt));
  return z;
}

/// J = c(z_N) + sum_k c(z_k) + v_k' R v_k.
inline double plan_objective(const std::vector<NavState>& z, const std::vector<NavInput>& v, const NavState& goal,
                             const MpcConfig& cfg) {
  double J = 0.0;
  for (const auto& s : z) J += goal_cost(s, goal, cfg.q_xy, cfg.q_theta);
  for (const auto& u : v)
    J += cfg.R.x() * u.v_par * u.v_par + cfg.R.y() * u.v_perp * u.v_perp + cfg.R.z() * u.omega * u.omega;
  return J;
}

/// Drops the first `steps` inputs and pads with zeros.
inline Plan shift_plan(const Plan& plan, int steps) {
  Plan out = plan;
  const int n = static_cast<int>(plan.inputs.size());
  out.inputs.assign(n, NavInput{});
  for (int k = 0; k + steps < n; ++k) out.inputs[k] = plan.inputs[k + steps];
  const NavState z0 = steps < static_cast<int>(plan.states.size()) ? plan.states[steps] : plan.states.back();
  out.states = rollout(z0, out.inputs, plan.dt);
  return out;
}

namespace detail {

/// The input NLP. Variables: u (3N) followed by one slack per barrier constraint.
/// Constraints: u - lo, hi - u, g + s, s (all >= 0).
class MpcProblem {
 public:
  MpcProblem(const NavState& z0, const NavState& goal, const std::vector<Obstacle>& obstacles, const MpcConfig& cfg)
      : z0_(z0), goal_(goal), obs_(obstacles), cfg_(cfg), N_(cfg.N), nu_(3 * cfg.N),
        ns_(static_cast<int>(obstacles.size()) * cfg.N) {}

  int num_vars() const { return nu_ + ns_; }
  int num_constraints() const { return 2 * nu_ + 2 * ns_; }
  int num_slacks() const { return ns_; }

  std::vector<NavInput> inputs(const Eigen::VectorXd& x) const {
    std::vector<NavInput> v(N_);
    for (int k = 0; k < N_; ++k) v[k] = {x(3 * k), x(3 * k + 1), x(3 * k + 2)};
    return v;
  }

  void evaluate(const Eigen::VectorXd& x, IpEval& out, bool derivatives) const {
    forward(x, derivatives);
    const int n = num_vars(), m = num_constraints();
    out.c.resize(m);
    if (derivatives) {
      out.grad.setZero(n);
      out.J.setZero(m, n);
    }
    // Objective.
    double f = 0.0;
    for (int k = 0; k <= N_; ++k) {
      const auto& z = z_[k];
      const double dx = z.x - goal_.x, dy = z.y - goal_.y, e = z.theta - goal_.theta;
      f += cfg_.q_xy * (dx * dx + dy * dy) + 2.0 * cfg_.q_theta * (1.0 - std::cos(e));
      if (derivatives && k > 0) {
        const Vec3 gz(2.0 * cfg_.q_xy * dx, 2.0 * cfg_.q_xy * dy, 2.0 * cfg_.q_theta * std::sin(e));
        out.grad.head(nu_).noalias() += Jz_[k].transpose() * gz;
      }
    }
    for (int k = 0; k < N_; ++k)
      for (int i = 0; i < 3; ++i) {
        const double u = x(3 * k + i);
        f += cfg_.R(i) * u * u;
        if (derivatives) out.grad(3 * k + i) += 2.0 * cfg_.R(i) * u;
      }
    for (int j = 0; j < ns_; ++j) {
      const double s = x(nu_ + j);
      f += cfg_.slack_weight_l1 * s + cfg_.slack_weight * s * s;
      if (derivatives) out.grad(nu_ + j) = cfg_.slack_weight_l1 + 2.0 * cfg_.slack_weight * s;
    }
    out.f = f;

    // Box.
    for (int j = 0; j < nu_; ++j) {
      out.c(j) = x(j) - cfg_.box.lower(j % 3);
      out.c(nu_ + j) = cfg_.box.upper(j % 3) - x(j);
      if (derivatives) {
        out.J(j, j) = 1.0;
        out.J(nu_ + j, j) = -1.0;
      }
    }
    // Barrier constraints g_{i,k} + s_{i,k} >= 0 and s >= 0.
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      for (int k = 0; k < N_; ++k) {
        const int j = static_cast<int>(i) * N_ + k;
        const BarrierValue& a = bar_[i][k];
        const BarrierValue& b = bar_[i][k + 1];
        const double s = x(nu_ + j);
        out.c(2 * nu_ + j) = dcbf_constraint(a.h, b.h, cfg_.alpha, cfg_.delta) + s;
        out.c(2 * nu_ + ns_ + j) = s;
        if (derivatives) {
          auto row = out.J.row(2 * nu_ + j);
          row.head(nu_) = Jz_[k + 1].topRows<2>().transpose() * b.grad;
          if (k > 0) row.head(nu_).noalias() -= (1.0 - cfg_.alpha) * (Jz_[k].topRows<2>().transpose() * a.grad);
          row(nu_ + j) = 1.0;
          out.J(2 * nu_ + ns_ + j, nu_ + j) = 1.0;
        }
      }
    }
  }

  /// Hessian of f - lambda' c.
  void lagrangian_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda, Eigen::MatrixXd& H) const {
    forward(x, true);
    const int n = num_vars();
    H.setZero(n, n);
    // Stage weights: d(phi_k)/dz and d2(phi_k)/dz2 for phi_k = c(z_k) - sum_i w_ik h_i(z_k).
    std::vector<Vec3> psi(N_ + 1, Vec3::Zero());
    for (int k = 1; k <= N_; ++k) {
      const auto& z = z_[k];
      const double e = z.theta - goal_.theta;
      Vec3 g(2.0 * cfg_.q_xy * (z.x - goal_.x), 2.0 * cfg_.q_xy * (z.y - goal_.y), 2.0 * cfg_.q_theta * std::sin(e));
      Mat3 W = Vec3(2.0 * cfg_.q_xy, 2.0 * cfg_.q_xy, 2.0 * cfg_.q_theta * std::cos(e)).asDiagonal();
      for (std::size_t i = 0; i < obs_.size(); ++i) {
        // h_i(z_k) appears in constraint (k-1) with +1 and in constraint k with -(1 - alpha).
        double w = lambda(2 * nu_ + static_cast<int>(i) * N_ + (k - 1));
        if (k < N_) w -= (1.0 - cfg_.alpha) * lambda(2 * nu_ + static_cast<int>(i) * N_ + k);
        const BarrierValue& b = bar_[i][k];
        g.head<2>() -= w * b.grad;
        W.topLeftCorner<2, 2>() -= w * b.hess;
      }
      psi[k] = g;
      H.topLeftCorner(nu_, nu_).noalias() += Jz_[k].transpose() * W * Jz_[k];
    }
    // Curvature of the dynamics through the adjoint (suffix sums of psi).
    Vec3 adj = Vec3::Zero();
    for (int j = N_ - 1; j >= 0; --j) {
      adj += psi[j + 1];
      const double th = z_[j].theta, c = std::cos(th), s = std::sin(th);
      const double a = x(3 * j), b = x(3 * j + 1);
      const double qx = a * c - b * s, qy = a * s + b * c;
      const double dt = cfg_.dt;
      const double A = dt * (-adj.x() * s + adj.y() * c);
      const double B = dt * (-adj.x() * c - adj.y() * s);
      const double C = dt * (-adj.x() * qx - adj.y() * qy);
      // d theta_j / d omega_i = dt for i < j.
      for (int i = 0; i < j; ++i) {
        const int w = 3 * i + 2;
        H(3 * j, w) += A * dt;
        H(w, 3 * j) += A * dt;
        H(3 * j + 1, w) += B * dt;
        H(w, 3 * j + 1) += B * dt;
        for (int l = 0; l < j; ++l) H(w, 3 * l + 2) += C * dt * dt;
      }
    }
    for (int k = 0; k < N_; ++k)
      for (int i = 0; i < 3; ++i) H(3 * k + i, 3 * k + i) += 2.0 * cfg_.R(i);
    for (int j = 0; j < ns_; ++j) H(nu_ + j, nu_ + j) += 2.0 * cfg_.slack_weight;
  }

  const std::vector<NavState>& states() const { return z_; }

 private:
  void forward(const Eigen::VectorXd& x, bool jacobians) const {
    z_.assign(1, z0_);
    if (jacobians) Jz_.assign(N_ + 1, Eigen::MatrixXd::Zero(3, nu_));
    for (int k = 0; k < N_; ++k) {
      const NavInput v{x(3 * k), x(3 * k + 1), x(3 * k + 2)};
      const NavState& z = z_.back();
      if (jacobians) {
        const double c = std::cos(z.theta), s = std::sin(z.theta), dt = cfg_.dt;
        Eigen::MatrixXd& Jn = Jz_[k + 1];
        Jn = Jz_[k];
        const double qx_th = -v.v_par * s - v.v_perp * c;
        const double qy_th = v.v_par * c - v.v_perp * s;
        Jn.row(0) += dt * qx_th * Jz_[k].row(2);
        Jn.row(1) += dt * qy_th * Jz_[k].row(2);
        Jn(0, 3 * k) += dt * c;
        Jn(0, 3 * k + 1) -= dt * s;
        Jn(1, 3 * k) += dt * s;
        Jn(1, 3 * k + 1) += dt * c;
        Jn(2, 3 * k + 2) += dt;
      }
      z_.push_back(nav_step(z, v, cfg_.dt));
    }
    bar_.assign(obs_.size(), {});
    for (std::size_t i = 0; i < obs_.size(); ++i)
      for (const auto& z : z_) bar_[i].push_back(obstacle_barrier(obs_[i], z.x, z.y));
  }

  NavState z0_, goal_;
  std::vector<Obstacle> obs_;
  MpcConfig cfg_;
  int N_, nu_, ns_;
  mutable std::vector<NavState> z_;
  mutable std::vector<Eigen::MatrixXd> Jz_;
  mutable std::vector<std::vector<BarrierValue>> bar_;
};

}  // namespace detail

/// Barrier residuals g_{i,k} of a state sequence, row i per obstacle.
inline std::vector<std::vector<double>> dcbf_residuals(const std::vector<NavState>& z,
                                                       const std::vector<Obstacle>& obstacles,
                                                       const MpcConfig& cfg) {
  std::vector<std::vector<double>> out;
  for (const auto& obs : obstacles) {
    std::vector<double> row;
    for (std::size_t k = 0; k + 1 < z.size(); ++k)
      row.push_back(dcbf_constraint(obstacle_h(obs, z[k]), obstacle_h(obs, z[k + 1]), cfg.alpha, cfg.delta));
    out.push_back(std::move(row));
  }
  return out;
}

inline Plan solve_mpc(const NavState& z0, const NavState& goal, const std::vector<Obstacle>& obstacles,
                      const MpcConfig& cfg, const Plan* warm_start = nullptr) {
  cfg.validate();
  for (const auto& o : obstacles) validate_obstacle(o);
  if (!all_finite({z0.x, z0.y, z0.theta, goal.x, goal.y, goal.theta}))
    throw ValidationError("MPC start and goal must be finite");

  detail::MpcProblem prob(z0, goal, obstacles, cfg);
  const int nu = 3 * cfg.N;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prob.num_vars());
  const bool warm = warm_start && static_cast<int>(warm_start->inputs.size()) == cfg.N;
  for (int k = 0; k < cfg.N; ++k) {
    const NavInput v = warm ? warm_start->inputs[k] : NavInput{0.0, 0.0, cfg.symmetry_break};
    for (int i = 0; i < 3; ++i) {
      const double lo = cfg.box.lower(i), hi = cfg.box.upper(i), push = 1e-2 * (hi - lo);
      x0(3 * k + i) = std::clamp(v[i], lo + push, hi - push);
    }
  }
  if (prob.num_slacks() > 0) {
    IpEval ev;
    prob.evaluate(x0, ev, false);
    for (int j = 0; j < prob.num_slacks(); ++j) {
      const double g = ev.c(2 * nu + j);  // slack currently zero
      x0(nu + j) = std::max(0.0, -g) + 1.0;
    }
  }

  IpOptions opt;
  opt.tol = cfg.tol;
  opt.max_iterations = cfg.max_iterations;
  const IpResult r = solve_interior_point(prob, x0, opt);

  Plan plan;
  plan.dt = cfg.dt;
  plan.inputs = prob.inputs(r.x);
  for (auto& v : plan.inputs) v = cfg.box.clamp(v);
  plan.states = rollout(z0, plan.inputs, cfg.dt);
  plan.objective = plan_objective(plan.states, plan.inputs, goal, cfg);
  plan.iterations = r.iterations;
  plan.kkt_error = r.kkt_error;
  for (int j = 0; j < prob.num_slacks(); ++j) plan.max_slack = std::max(plan.max_slack, r.x(nu + j));
  for (const auto& row : dcbf_residuals(plan.states, obstacles, cfg))
    for (double g : row) plan.max_violation = std::max(plan.max_violation, -g);
  if (plan.max_slack > cfg.infeasible_slack) plan.status = SolveStatus::Infeasible;
  else if (r.status != IpStatus::Converged) plan.status = SolveStatus::MaxIterations;
  else plan.status = SolveStatus::Optimal;
  return plan;
}

}  // namespace lipnav
