#include "airlift/math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace airlift {

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m, double tol) {
  const double asym = (m + m.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    throw std::invalid_argument("vee: matrix is not skew-symmetric (|M + M^T|_max = " +
                                std::to_string(asym) + ")");
  }
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

Vec4 quat_derivative(const Quat& q, const Vec3& omega) {
  const Quat rate = q * Quat(0.0, omega.x(), omega.y(), omega.z());
  return 0.5 * Vec4(rate.w(), rate.x(), rate.y(), rate.z());
}

Quat quat_exp(const Vec3& v) {
  const double angle = v.norm();
  if (angle < 1e-12) {
    // second-order series keeps the result smooth near zero
    Quat q(1.0 - 0.5 * angle * angle, v.x(), v.y(), v.z());
    return q.normalized();
  }
  const Vec3 axis = std::sin(angle) / angle * v;
  return Quat(std::cos(angle), axis.x(), axis.y(), axis.z());
}

Quat quat_boxplus(const Quat& q, const Vec3& sigma) {
  return (q * quat_exp(0.5 * sigma)).normalized();
}

double rotation_angle_between(const Quat& a, const Quat& b) {
  const Quat rel = a.conjugate() * b;
  const double vnorm = rel.vec().norm();
  return 2.0 * std::atan2(vnorm, std::abs(rel.w()));
}

Vec4 to_wxyz(const Quat& q) { return Vec4(q.w(), q.x(), q.y(), q.z()); }

Quat from_wxyz(const Vec4& wxyz) { return Quat(wxyz[0], wxyz[1], wxyz[2], wxyz[3]); }

Quat from_wxyz(double w, double x, double y, double z) { return Quat(w, x, y, z); }

Mat3 attitude_from_thrust_axis(const Vec3& b3_in, double yaw) {
  const Vec3 b3 = b3_in.normalized();
  const Vec3 heading(std::cos(yaw), std::sin(yaw), 0.0);
  Vec3 b2 = b3.cross(heading);
  if (b2.norm() < 1e-9) {
    // thrust axis horizontal and aligned with the heading
    b2 = b3.cross(Vec3::UnitY());
  }
  b2.normalize();
  const Vec3 b1 = b2.cross(b3);
  Mat3 rot;
  rot.col(0) = b1;
  rot.col(1) = b2;
  rot.col(2) = b3;
  return rot;
}

Vec3 euler_zyx(const Mat3& rot) {
  const double pitch = std::asin(std::clamp(-rot(2, 0), -1.0, 1.0));
  const double roll = std::atan2(rot(2, 1), rot(2, 2));
  const double yaw = std::atan2(rot(1, 0), rot(0, 0));
  return Vec3(roll, pitch, yaw);
}

double yaw_of(const Mat3& rot) { return std::atan2(rot(1, 0), rot(0, 0)); }

}  // namespace airlift
