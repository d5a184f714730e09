#pragma once

// Lyapunov-shaped tracking rewards evaluated over sampled traces.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "lipnav/common.hpp"
#include "lipnav/ref_nominal.hpp"

namespace lipnav {

enum class Channel { Foot, Com };

struct TrackingObjective {
  std::string name = "foot";
  Channel channel = Channel::Foot;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(3, 3);
  double alpha = 2.0;
  double sigma1 = 0.25;
  double sigma2 = 0.25;
  double w1 = 1.0;
  double w2 = 1.0;

  void validate() const {
    if (P.rows() != P.cols()) throw DimensionMismatch("objective " + name + ": P must be square");
    if (!P.isApprox(P.transpose(), 1e-12)) throw ValidationError("objective " + name + ": P must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P);
    if (eig.eigenvalues().minCoeff() <= 0.0) throw ValidationError("objective " + name + ": P must be positive definite");
    if (!(alpha > 0 && sigma1 > 0 && sigma2 > 0 && w1 > 0 && w2 > 0))
      throw ValidationError("objective " + name + ": alpha, sigmas and weights must be positive");
  }
};

inline std::vector<TrackingObjective> default_objectives() {
  TrackingObjective foot;
  TrackingObjective com;
  com.name = "com";
  com.channel = Channel::Com;
  return {foot, com};
}

struct RewardSample {
  double t = 0.0;
  double V = 0.0;
  double V_dot = 0.0;
  double r_V = 1.0;
  double r_Vdot = 1.0;
  double r_total = 0.0;
};

inline double lyapunov_value(const Eigen::VectorXd& e, const Eigen::MatrixXd& P) {
  if (P.rows() != e.size() || P.cols() != e.size())
    throw DimensionMismatch("error has dimension " + std::to_string(e.size()) + ", P is " +
                            std::to_string(P.rows()) + "x" + std::to_string(P.cols()));
  return e.dot(P * e);
}

inline RewardSample clf_reward_terms(double V, double V_dot, const TrackingObjective& obj) {
  RewardSample s;
  s.V = V;
  s.V_dot = V_dot;
  s.r_V = std::exp(-V / (obj.sigma1 * obj.sigma1));
  s.r_Vdot = std::exp(-std::max(V_dot + obj.alpha * V, 0.0) / (obj.sigma2 * obj.sigma2));
  s.r_total = obj.w1 * s.r_V + obj.w2 * s.r_Vdot;
  return s;
}

/// Task-space positions at one instant.
struct ChannelSample {
  double t = 0.0;
  Vec3 foot = Vec3::Zero();
  Vec3 com = Vec3::Zero();
};

struct TraceEvaluation {
  std::vector<std::vector<RewardSample>> rewards;  // [objective][sample]
  double mean_foot_error = 0.0;
  double mean_com_error = 0.0;
};

inline TraceEvaluation evaluate_trace(const std::vector<ChannelSample>& actual,
                                      const std::vector<ChannelSample>& reference,
                                      const std::vector<TrackingObjective>& objectives) {
  if (actual.empty()) throw EmptyTrace("trace has no samples");
  if (actual.size() != reference.size())
    throw DimensionMismatch("actual and reference traces differ in length");
  for (const auto& obj : objectives) obj.validate();

  TraceEvaluation out;
  out.rewards.resize(objectives.size());
  double foot_sum = 0.0, com_sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    foot_sum += (actual[i].foot - reference[i].foot).norm();
    com_sum += (actual[i].com - reference[i].com).norm();
  }
  out.mean_foot_error = foot_sum / actual.size();
  out.mean_com_error = com_sum / actual.size();

  for (std::size_t k = 0; k < objectives.size(); ++k) {
    const auto& obj = objectives[k];
    double prev_V = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
      const Vec3 e = obj.channel == Channel::Foot ? Vec3(actual[i].foot - reference[i].foot)
                                                  : Vec3(actual[i].com - reference[i].com);
      const double V = lyapunov_value(Eigen::VectorXd(e), obj.P);
      double V_dot = 0.0;
      if (i > 0) {
        const double dt = actual[i].t - actual[i - 1].t;
        if (!(dt > 0.0)) throw ValidationError("trace sample times must increase");
        V_dot = (V - prev_V) / dt;
      }
      RewardSample s = clf_reward_terms(V, V_dot, obj);
      s.t = actual[i].t;
      out.rewards[k].push_back(s);
      prev_V = V;
    }
  }
  return out;
}

/// Samples swing-foot and CoM positions of consecutive step references at a fixed interval.
inline std::vector<ChannelSample> sample_references(const std::vector<StepReference>& refs, double dt) {
  std::vector<ChannelSample> out;
  double t0 = 0.0;
  for (const auto& r : refs) {
    const int n = static_cast<int>(std::floor(r.duration / dt + 1e-9));
    for (int i = 0; i < n; ++i) {
      const double s = i * dt;
      out.push_back({t0 + s, r.swing(s).position(), r.com(s).position()});
    }
    t0 += r.duration;
  }
  return out;
}

}  // namespace lipnav
