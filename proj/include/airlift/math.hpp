#pragma once

// Rotation, quaternion and S^2 helpers shared by every module.
//
// Conventions used throughout the library:
//   * Quaternions are Hamilton quaternions. Whenever a quaternion is written
//     out as four numbers (logs, derivatives, config files) the order is
//     w, x, y, z.
//   * Attitude quaternions map body-frame vectors to the world frame, and
//     angular velocities are expressed in the body frame, so the kinematics
//     read q_dot = 1/2 q (x) (0, omega).
//   * Gravity acts along -e3 with magnitude kGravity.

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace airlift {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Quat = Eigen::Quaterniond;

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;

/// Default tolerance for the skew-symmetry check in vee().
inline constexpr double kSkewTolerance = 1e-9;
/// Unit-norm tolerance for quaternions and S^2 vectors.
inline constexpr double kUnitTolerance = 1e-9;

inline Vec3 e3() { return Vec3::UnitZ(); }

/// Cross-product matrix: hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat(). Throws std::invalid_argument when m is not skew
/// symmetric within `tol` (max-abs of m + m^T).
Vec3 vee(const Mat3& m, double tol = kSkewTolerance);

/// Quaternion time derivative 1/2 q (x) (0, omega), returned w-first.
Vec4 quat_derivative(const Quat& q, const Vec3& omega);

/// q (x) exp(sigma / 2): perturbs q by the body-frame rotation vector sigma.
/// The result is renormalized.
Quat quat_boxplus(const Quat& q, const Vec3& sigma);

/// Quaternion exponential of a pure quaternion (0, v).
Quat quat_exp(const Vec3& v);

/// Rotation angle (rad, in [0, pi]) of the relative rotation between a and b.
double rotation_angle_between(const Quat& a, const Quat& b);

Vec4 to_wxyz(const Quat& q);
Quat from_wxyz(const Vec4& wxyz);
Quat from_wxyz(double w, double x, double y, double z);

/// Rotation matrix from a desired body z axis and a heading angle, built the
/// usual way for multirotors: b1 is the projection of (cos psi, sin psi, 0)
/// onto the plane orthogonal to b3.
Mat3 attitude_from_thrust_axis(const Vec3& b3, double yaw);

/// Z-Y-X Euler angles (roll, pitch, yaw) of R.
Vec3 euler_zyx(const Mat3& rot);

/// Yaw of a rotation in the Z-Y-X convention.
double yaw_of(const Mat3& rot);

/// True when every entry of v is finite.
template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

}  // namespace airlift
