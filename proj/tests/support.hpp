#pragma once

// Fixtures and independent oracles shared by the unit tests and the
// acceptance binary.

#include <Eigen/Dense>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "airlift/config.hpp"
#include "airlift/dynamics.hpp"
#include "airlift/hybrid.hpp"
#include "airlift/math.hpp"
#include "airlift/types.hpp"

namespace airlift::fixtures {

inline std::string source_path(const std::string& rel) {
  return std::string(AIRLIFT_SOURCE_DIR) + "/" + rel;
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

struct Rng {
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine);
  }
  Vec3 vec(double lo, double hi) { return Vec3(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)); }
  Vec3 unit() {
    Vec3 v;
    do {
      v = vec(-1.0, 1.0);
    } while (v.norm() < 0.1 || v.norm() > 1.0);
    return v.normalized();
  }
  /// Unit vector with a negative z component at least `min_down`.
  Vec3 downward_unit(double min_down = 0.3) {
    Vec3 v;
    do {
      v = unit();
    } while (v.z() > -min_down);
    return v;
  }
  Quat quat() {
    Quat q(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
    return q.normalized();
  }
  std::mt19937_64 engine;
};

inline QuadrotorParams robot(double mass) {
  QuadrotorParams q = config::preset("dragonfly");
  q.mass = mass;
  return q;
}

inline SystemParams single_cable_params(double m = 0.25, double mL = 0.1, double l = 0.5) {
  SystemParams p;
  p.robots = {robot(m)};
  p.payload.kind = PayloadKind::PointMass;
  p.payload.mass = mL;
  p.payload.attach_points = {Vec3::Zero()};
  p.mechanism.kind = MechanismKind::Cable;
  p.mechanism.cable_lengths = {l};
  return p;
}

inline SystemParams rigid_payload_params(const std::vector<Vec3>& attach,
                                         const std::vector<double>& masses,
                                         const std::vector<double>& lengths, double mL,
                                         const Mat3& J) {
  SystemParams p;
  for (double m : masses) p.robots.push_back(robot(m));
  p.payload.kind = PayloadKind::RigidBody;
  p.payload.mass = mL;
  p.payload.inertia = J;
  p.payload.attach_points = attach;
  p.mechanism.kind = MechanismKind::Cable;
  p.mechanism.cable_lengths = lengths;
  return p;
}

/// Three robots 120 deg apart on radius r, vertical 1 m cables.
inline SystemParams triangle_params(double r = 0.3, double mL = 0.25) {
  std::vector<Vec3> attach;
  for (int k = 0; k < 3; ++k) {
    const double a = 2.0 * kPi * k / 3.0;
    attach.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
  }
  return rigid_payload_params(attach, {0.25, 0.25, 0.25}, {1.0, 1.0, 1.0}, mL,
                              Vec3(2.1e-3, 2.1e-3, 4.2e-3).asDiagonal());
}

/// Random rigid payload with n cables; masses, inertia, attach points and
/// lengths all randomized.
inline SystemParams random_multi_params(Rng& rng, std::size_t n) {
  std::vector<Vec3> attach;
  std::vector<double> masses, lengths;
  for (std::size_t k = 0; k < n; ++k) {
    attach.push_back(rng.vec(-0.5, 0.5));
    masses.push_back(rng.uniform(0.1, 1.0));
    lengths.push_back(rng.uniform(0.3, 1.5));
  }
  const Mat3 A = Eigen::Matrix3d::NullaryExpr([&]() { return rng.uniform(-0.1, 0.1); });
  const Mat3 J = A * A.transpose() + rng.uniform(1e-3, 1e-2) * Mat3::Identity();
  return rigid_payload_params(attach, masses, lengths, rng.uniform(0.1, 1.0), J);
}

/// Robots placed at p_k - l_k xi_k with the given directions; velocities and
/// rates randomized.
inline SystemState random_cable_state(Rng& rng, const SystemParams& p,
                                      const std::vector<Vec3>& directions) {
  SystemState x;
  x.payload.position = rng.vec(-1.0, 1.0);
  x.payload.velocity = rng.vec(-1.0, 1.0);
  if (p.payload.kind == PayloadKind::RigidBody) {
    x.payload.attitude = rng.quat();
    x.payload.angular_velocity = rng.vec(-1.0, 1.0);
  }
  const Mat3 R = x.payload.rotation();
  for (std::size_t k = 0; k < p.robot_count(); ++k) {
    BodyState r;
    r.position = x.payload.position + R * p.payload.attach_points[k] -
                 p.mechanism.cable_lengths[k] * directions[k];
    r.velocity = rng.vec(-1.0, 1.0);
    r.attitude = rng.quat();
    r.angular_velocity = rng.vec(-1.0, 1.0);
    x.robots.push_back(r);
  }
  return x;
}

/// Angular momentum about the world origin.
inline Vec3 angular_momentum(const SystemState& x, const SystemParams& p) {
  Vec3 h = p.payload.mass * x.payload.position.cross(x.payload.velocity);
  if (p.payload.kind == PayloadKind::RigidBody) {
    h += x.payload.rotation() * p.payload.inertia * x.payload.angular_velocity;
  }
  for (std::size_t k = 0; k < p.robot_count(); ++k) {
    h += p.robots[k].mass * x.robots[k].position.cross(x.robots[k].velocity);
  }
  return h;
}

/// Translational + payload rotational kinetic energy (robot spin excluded,
/// it is untouched by cable impulses).
inline double translational_kinetic_energy(const SystemState& x, const SystemParams& p) {
  double e = 0.5 * p.payload.mass * x.payload.velocity.squaredNorm();
  if (p.payload.kind == PayloadKind::RigidBody) {
    e += 0.5 * x.payload.angular_velocity.dot(p.payload.inertia * x.payload.angular_velocity);
  }
  for (std::size_t k = 0; k < p.robot_count(); ++k) {
    e += 0.5 * p.robots[k].mass * x.robots[k].velocity.squaredNorm();
  }
  return e;
}

/// Brute-force inelastic collision: minimize the kinetic energy of the
/// velocity change, 1/2 (v - v-)^T M (v - v-), subject to zero relative
/// along-cable velocity on every colliding cable. Solved as a dense
/// equality-constrained QP over the full generalized velocity
/// [v_L, Omega_L, v_1 .. v_n] with no reference to the coupling matrix.
inline SystemState constrained_impulse_reset(const SystemState& x, const SystemParams& p,
                                             const std::vector<std::size_t>& colliding) {
  const std::size_t n = p.robot_count();
  const bool rigid = p.payload.kind == PayloadKind::RigidBody;
  const int dof = 6 + 3 * static_cast<int>(n);
  const int c = static_cast<int>(colliding.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dof, dof);
  M.block<3, 3>(0, 0) = p.payload.mass * Mat3::Identity();
  M.block<3, 3>(3, 3) = rigid ? p.payload.inertia : Mat3::Identity();
  Eigen::VectorXd v(dof);
  v.segment<3>(0) = x.payload.velocity;
  v.segment<3>(3) = rigid ? x.payload.angular_velocity : Vec3::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    M.block<3, 3>(6 + 3 * k, 6 + 3 * k) = p.robots[k].mass * Mat3::Identity();
    v.segment<3>(6 + 3 * k) = x.robots[k].velocity;
  }
  const Mat3 R = x.payload.rotation();
  // Rows: xi^T (v_k - v_L - R (Omega x rho)) = 0, plus Omega = 0 for a point mass.
  const int rows = c + (rigid ? 0 : 3);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(rows, dof);
  for (int i = 0; i < c; ++i) {
    const std::size_t k = colliding[i];
    const Vec3& rho = p.payload.attach_points[k];
    const Vec3 xi = (x.payload.position + R * rho - x.robots[k].position).normalized();
    G.block<1, 3>(i, 0) = -xi.transpose();
    // R (Omega x rho) = -R hat(rho) Omega
    G.block<1, 3>(i, 3) = xi.transpose() * R * hat(rho);
    G.block<1, 3>(i, 6 + 3 * k) = xi.transpose();
  }
  if (!rigid) G.block<3, 3>(c, 3) = Mat3::Identity();

  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dof + rows, dof + rows);
  K.topLeftCorner(dof, dof) = M;
  K.topRightCorner(dof, rows) = G.transpose();
  K.bottomLeftCorner(rows, dof) = G;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dof + rows);
  rhs.head(dof) = M * v;
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);

  SystemState out = x;
  out.payload.velocity = sol.segment<3>(0);
  if (rigid) out.payload.angular_velocity = sol.segment<3>(3);
  for (std::size_t k = 0; k < n; ++k) out.robots[k].velocity = sol.segment<3>(6 + 3 * k);
  return out;
}

}  // namespace airlift::fixtures
