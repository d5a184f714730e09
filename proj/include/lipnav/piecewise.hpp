#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "lipnav/common.hpp"

namespace lipnav {

/// Piecewise-linear function through knots with strictly increasing abscissae.
/// Evaluation clamps to the end values outside the knot range.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(std::vector<std::pair<double, double>> knots) : knots_(std::move(knots)) {}

  double operator()(double s) const {
    if (knots_.empty()) return 0.0;
    if (s <= knots_.front().first) return knots_.front().second;
    if (s >= knots_.back().first) return knots_.back().second;
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), s,
                               [](double v, const auto& k) { return v < k.first; });
    auto lo = hi - 1;
    const double a = (s - lo->first) / (hi->first - lo->first);
    return lo->second + a * (hi->second - lo->second);
  }

  const std::vector<std::pair<double, double>>& knots() const { return knots_; }
  bool empty() const { return knots_.empty(); }

 private:
  std::vector<std::pair<double, double>> knots_;
};

/// Height offset as a function of swing phase: an envelope over arc length
/// composed with the phase -> arc-length map of the sampled path.
struct PhaseEnvelope {
  PiecewiseLinear phase_to_abscissa;
  PiecewiseLinear envelope;
  double margin = 0.0;

  double operator()(double t) const { return envelope(phase_to_abscissa(t)) + margin; }
};

}  // namespace lipnav
