#pragma once

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace animgen {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

inline Quat axis_angle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis));
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

// 3t^2 - 2t^3, clamped outside [0,1]
inline double smoothstep01(double t) {
  t = clamp01(t);
  return t * t * (3.0 - 2.0 * t);
}

inline double lerp(double a, double b, double t) { return a * (1.0 - t) + b * t; }

// Angle of the relative rotation between two unit quaternions, in radians.
inline double quat_geodesic(const Quat& a, const Quat& b) {
  double d = std::abs(a.dot(b));
  if (d > 1.0) d = 1.0;
  return 2.0 * std::acos(d);
}

inline Quat normalized_w_positive(Quat q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

// Rotation taking one orthonormal frame to another. Columns are the frame axes;
// the third axis is derived so both triads are right-handed.
inline Quat frame_rotation(const Vec3& from_a, const Vec3& from_b,
                           const Vec3& to_a, const Vec3& to_b) {
  Eigen::Matrix3d from, to;
  from.col(0) = from_a.normalized();
  from.col(1) = from_b.normalized();
  from.col(2) = from.col(0).cross(from.col(1));
  to.col(0) = to_a.normalized();
  to.col(1) = to_b.normalized();
  to.col(2) = to.col(0).cross(to.col(1));
  return Quat(to * from.transpose());
}

}  // namespace animgen
