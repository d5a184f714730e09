#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lipnav {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

// Error hierarchy. Every recoverable failure in the library is one of these.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateGait : Error { using Error::Error; };
struct OutOfPhase : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct OutOfBounds : Error { using Error::Error; };
struct NoFoothold : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct EmptyTrace : Error { using Error::Error; };
struct PlanExpired : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

struct ParseError : Error {
  ParseError(const std::string& what, int line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  int line;
};

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

inline Mat2 rot2(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 rpy_to_matrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

/// 6-DoF pose, x forward / y left / z up. Yaw is wrapped to (-pi, pi] on construction.
struct Pose3 {
  double x = 0.0, y = 0.0, z = 0.0;
  double roll = 0.0, pitch = 0.0, yaw = 0.0;

  Pose3() = default;
  Pose3(double x_, double y_, double z_, double roll_, double pitch_, double yaw_)
      : x(x_), y(y_), z(z_), roll(roll_), pitch(pitch_), yaw(wrap_angle(yaw_)) {}

  static Pose3 planar(double x, double y, double z, double yaw) { return {x, y, z, 0.0, 0.0, yaw}; }

  Vec2 xy() const { return {x, y}; }
  Vec3 position() const { return {x, y, z}; }
  Mat3 rotation() const { return rpy_to_matrix(roll, pitch, yaw); }

  bool operator==(const Pose3&) const = default;
};

/// Planar point expressed in the yaw frame of `frame` -> world.
inline Vec2 frame_to_world(const Vec2& local, const Pose3& frame) {
  return frame.xy() + rot2(frame.yaw) * local;
}

inline Vec2 world_to_frame(const Vec2& world, const Pose3& frame) {
  return rot2(frame.yaw).transpose() * (world - frame.xy());
}

/// SE(2) velocity command: forward, lateral, yaw rate (body frame).
struct Se2Velocity {
  double vx = 0.0, vy = 0.0, wz = 0.0;
  bool operator==(const Se2Velocity&) const = default;
};

inline bool all_finite(std::initializer_list<double> values) {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace lipnav
