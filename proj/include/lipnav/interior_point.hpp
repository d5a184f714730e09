#pragma once

// Dense primal-dual interior-point method for
//   min f(x)  s.t.  c(x) >= 0
// with a log-barrier, inertia-corrected Newton steps on the condensed system
// (H + J' diag(lambda / c) J) dx = -(grad f - J' mu / c), and a backtracking
// line search on the barrier function.
//
// Problem interface:
//   int num_vars() const;
//   int num_constraints() const;
//   void evaluate(const Eigen::VectorXd& x, IpEval& out, bool derivatives) const;
//   void lagrangian_hessian(const Eigen::VectorXd& x, const Eigen::VectorXd& lambda, Eigen::MatrixXd& H) const;
// where the Hessian is that of f(x) - lambda' c(x).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lipnav {

struct IpEval {
  double f = 0.0;
  Eigen::VectorXd grad;
  Eigen::VectorXd c;
  Eigen::MatrixXd J;
};

struct IpOptions {
  double tol = 1e-8;
  int max_iterations = 200;
  double mu_init = 0.1;
  double kappa_mu = 0.2;
  double theta_mu = 1.5;
  double kappa_eps = 10.0;
  double armijo = 1e-4;
};

enum class IpStatus { Converged, MaxIterations, LineSearchFailed };

struct IpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  IpStatus status = IpStatus::MaxIterations;
  int iterations = 0;
  double kkt_error = std::numeric_limits<double>::infinity();
  double f = 0.0;
};

template <class Problem>
IpResult solve_interior_point(const Problem& prob, Eigen::VectorXd x, const IpOptions& opt = {}) {
  using Eigen::VectorXd;
  const int n = prob.num_vars();
  const int m = prob.num_constraints();
  IpEval ev;
  prob.evaluate(x, ev, true);
  if (m > 0 && !(ev.c.minCoeff() > 0.0)) throw std::invalid_argument("interior point start must be strictly feasible");

  double mu = opt.mu_init;
  VectorXd lambda = m > 0 ? VectorXd(mu * ev.c.cwiseInverse()) : VectorXd();
  Eigen::MatrixXd H(n, n);
  IpResult res;

  auto scale = [&](const VectorXd& l) { return m > 0 ? std::max(100.0, l.lpNorm<1>() / m) / 100.0 : 1.0; };
  auto barrier = [&](double f, const VectorXd& c) { return f - mu * (m > 0 ? c.array().log().sum() : 0.0); };

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    res.iterations = iter;
    const VectorXd grad_l = m > 0 ? VectorXd(ev.grad - ev.J.transpose() * lambda) : ev.grad;
    const double s = scale(lambda);
    const double dual = grad_l.lpNorm<Eigen::Infinity>() / s;
    const double comp = m > 0 ? (ev.c.cwiseProduct(lambda)).lpNorm<Eigen::Infinity>() / s : 0.0;
    res.kkt_error = std::max(dual, comp);
    if (res.kkt_error <= opt.tol) {
      res.status = IpStatus::Converged;
      break;
    }
    // Decrease the barrier parameter once the current subproblem is solved well enough.
    for (;;) {
      const double comp_mu =
          m > 0 ? (ev.c.cwiseProduct(lambda).array() - mu).matrix().lpNorm<Eigen::Infinity>() / s : 0.0;
      if (std::max(dual, comp_mu) > opt.kappa_eps * mu || mu <= opt.tol / 10.0) break;
      mu = std::max(opt.tol / 10.0, std::min(opt.kappa_mu * mu, std::pow(mu, opt.theta_mu)));
    }

    prob.lagrangian_hessian(x, lambda, H);
    Eigen::MatrixXd M = H;
    VectorXd rhs = -ev.grad;
    VectorXd sigma;
    if (m > 0) {
      sigma = lambda.cwiseQuotient(ev.c);
      M.noalias() += ev.J.transpose() * sigma.asDiagonal() * ev.J;
      rhs.noalias() += ev.J.transpose() * (mu * ev.c.cwiseInverse());
    }
    VectorXd dx;
    double delta = 0.0;
    for (;;) {
      Eigen::LLT<Eigen::MatrixXd> llt(M + delta * Eigen::MatrixXd::Identity(n, n));
      if (llt.info() == Eigen::Success) {
        dx = llt.solve(rhs);
        if (dx.allFinite()) break;
      }
      delta = delta == 0.0 ? 1e-4 : delta * 8.0;
      if (delta > 1e20) throw std::runtime_error("interior point: unable to regularize the Newton system");
    }

    const double tau = std::max(0.99, 1.0 - mu);
    VectorXd dlambda;
    double alpha_dual = 1.0;
    if (m > 0) {
      dlambda = mu * ev.c.cwiseInverse() - lambda - sigma.cwiseProduct(ev.J * dx);
      for (int j = 0; j < m; ++j)
        if (dlambda(j) < 0.0) alpha_dual = std::min(alpha_dual, -tau * lambda(j) / dlambda(j));
    }

    const double phi0 = barrier(ev.f, ev.c);
    const double dphi = -rhs.dot(dx);
    double alpha = 1.0;
    IpEval trial;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      const VectorXd xt = x + alpha * dx;
      prob.evaluate(xt, trial, false);
      bool interior = std::isfinite(trial.f);
      for (int j = 0; j < m && interior; ++j) interior = trial.c(j) >= (1.0 - tau) * ev.c(j);
      if (interior && barrier(trial.f, trial.c) <= phi0 + opt.armijo * alpha * std::min(dphi, 0.0)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.status = IpStatus::LineSearchFailed;
      break;
    }
    x += alpha * dx;
    prob.evaluate(x, ev, true);
    if (m > 0) {
      lambda += alpha_dual * dlambda;
      constexpr double kappa_sigma = 1e10;
      for (int j = 0; j < m; ++j) {
        const double base = mu / ev.c(j);
        lambda(j) = std::clamp(lambda(j), base / kappa_sigma, base * kappa_sigma);
      }
    }
    res.iterations = iter + 1;
    res.status = IpStatus::MaxIterations;
  }
  res.x = x;
  res.lambda = lambda;
  res.f = ev.f;
  return res;
}

}  // namespace lipnav
