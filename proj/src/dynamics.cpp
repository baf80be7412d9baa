#include "airlift/dynamics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <sstream>

#include "airlift/errors.hpp"

namespace airlift::dynamics {

namespace {

BodyRate free_body_rate(const BodyState& b, const Vec3& accel, const Vec3& moment,
                        const Mat3& inertia) {
  BodyRate r;
  r.velocity = b.velocity;
  r.acceleration = accel;
  r.attitude_rate = quat_derivative(b.attitude, b.angular_velocity);
  const Vec3& w = b.angular_velocity;
  r.angular_acceleration = inertia.ldlt().solve(moment - w.cross(inertia * w));
  return r;
}

BodyRate robot_rate(const BodyState& b, const Vec3& accel, const RobotInput& in,
                    const QuadrotorParams& q) {
  const Vec3& w = b.angular_velocity;
  BodyRate r;
  r.velocity = b.velocity;
  r.acceleration = accel;
  r.attitude_rate = quat_derivative(b.attitude, w);
  r.angular_acceleration = (in.moment - w.cross(q.inertia() * w)).cwiseQuotient(q.inertia_diag);
  return r;
}

Vec3 thrust_vector(const BodyState& b, const RobotInput& in) {
  return in.thrust * (b.rotation() * e3());
}

void require_inputs(const SystemState& x, const ControlInput& u, const SystemParams& p) {
  if (x.robots.size() != p.robots.size() || u.robots.size() != p.robots.size()) {
    throw NumericError("robot count mismatch between state, input and parameters");
  }
}

void check_length(double d, double l, std::size_t k, double tol) {
  if (std::abs(d - l) > tol) {
    std::ostringstream os;
    os << "cable " << k << " declared taut but |d - l| = " << std::abs(d - l) << " m exceeds "
       << tol;
    throw NumericError(os.str());
  }
}

bool rigid_payload(const SystemParams& p) { return p.payload.kind == PayloadKind::RigidBody; }

struct MultiCableSolution {
  Vec3 payload_accel;      // x_L ddot
  Vec3 payload_ang_accel;  // Omega_L dot
  std::vector<Vec3> robot_accel;
  std::vector<double> tension;
};

MultiCableSolution solve_multi_cable(const SystemState& x, const ControlInput& u,
                                     const SystemParams& p, const CableStatus& status,
                                     double geometry_tol) {
  require_inputs(x, u, p);
  if (status.taut.size() != p.robots.size()) {
    throw NumericError("cable status size does not match robot count");
  }
  const std::size_t n = p.robots.size();
  const Mat3 R = x.payload.rotation();
  const Vec3& omega = x.payload.angular_velocity;
  const Vec3 g = kGravity * e3();
  const bool rigid = rigid_payload(p);

  std::vector<CableKinematics> kin(n);
  std::vector<Vec3> thrust(n);
  const auto taut = status.taut_indices();

  // Right-hand side of the coupled payload equations.
  Vec6 rhs = Vec6::Zero();
  rhs.head<3>() = -p.payload.mass * g;
  if (rigid) rhs.tail<3>() = -omega.cross(p.payload.inertia * omega);

  std::vector<Vec3> centripetal(n, Vec3::Zero());
  for (std::size_t k = 0; k < n; ++k) thrust[k] = thrust_vector(x.robots[k], u.robots[k]);
  for (std::size_t k : taut) {
    kin[k] = cable_kinematics(x, p, k);
    check_length(kin[k].distance, p.mechanism.cable_lengths[k], k, geometry_tol);
    const double m = p.robots[k].mass;
    const double l = p.mechanism.cable_lengths[k];
    const Vec3& xi = kin[k].direction;
    const Vec3 cable_rate = xi.cross(kin[k].direction_rate);
    const Mat3 P = xi * xi.transpose();
    const Vec3& rho = p.payload.attach_points[k];
    centripetal[k] = R * (omega.cross(omega.cross(rho)));
    const Vec3 known = P * thrust[k] - m * l * cable_rate.squaredNorm() * xi -
                       m * P * (g + centripetal[k]);
    rhs.head<3>() += known;
    if (rigid) rhs.tail<3>() += hat(rho) * R.transpose() * known;
  }

  const Mat6 J = payload_coupling_matrix(x, p, taut);
  Vec6 sol = Vec6::Zero();
  if (rigid) {
    Eigen::LDLT<Mat6> ldlt(J);
    const double rcond = ldlt.rcond();
    if (ldlt.info() != Eigen::Success || !(rcond > 1e-14) || !ldlt.isPositive()) {
      std::ostringstream os;
      os << "payload coupling system is singular (condition number ~ " << 1.0 / rcond << ")";
      throw NumericError(os.str());
    }
    sol = ldlt.solve(rhs);
  } else {
    const Mat3 J3 = J.topLeftCorner<3, 3>();
    Eigen::LDLT<Mat3> ldlt(J3);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
      throw NumericError("payload translational system is singular");
    }
    sol.head<3>() = ldlt.solve(rhs.head<3>());
  }

  MultiCableSolution out;
  out.payload_accel = sol.head<3>();
  out.payload_ang_accel = sol.tail<3>();
  out.robot_accel.assign(n, Vec3::Zero());
  out.tension.assign(n, 0.0);

  for (std::size_t k = 0; k < n; ++k) {
    const double m = p.robots[k].mass;
    if (!status.taut[k]) {
      out.robot_accel[k] = thrust[k] / m - g;
      continue;
    }
    const double l = p.mechanism.cable_lengths[k];
    const Vec3& xi = kin[k].direction;
    const Vec3& xi_dot = kin[k].direction_rate;
    const Vec3& rho = p.payload.attach_points[k];
    const Vec3 attach_accel_plus_g =
        out.payload_accel + g - R * hat(rho) * out.payload_ang_accel + centripetal[k];
    const Mat3 xi_hat = hat(xi);
    const Vec3 xi_ddot =
        xi_hat * xi_hat * (thrust[k] - m * attach_accel_plus_g) / (m * l) - xi_dot.squaredNorm() * xi;
    out.robot_accel[k] = attach_accel_plus_g - g - l * xi_ddot;
    // force on the payload is -T xi
    const Vec3 cable_rate = xi.cross(xi_dot);
    const Vec3 on_payload = xi * xi.dot(thrust[k]) - m * l * cable_rate.squaredNorm() * xi -
                            m * xi * xi.dot(attach_accel_plus_g);
    out.tension[k] = -xi.dot(on_payload);
  }
  return out;
}

}  // namespace

CableKinematics cable_kinematics(const SystemState& x, const SystemParams& p, std::size_t k) {
  const Mat3 R = x.payload.rotation();
  const Vec3& rho = p.payload.attach_points.at(k);
  CableKinematics c;
  c.attach_point = x.payload.position + R * rho;
  c.attach_velocity = x.payload.velocity + R * x.payload.angular_velocity.cross(rho);
  const Vec3 r = c.attach_point - x.robots[k].position;
  c.distance = r.norm();
  if (!(c.distance > 0.0)) {
    throw NumericError("robot " + std::to_string(k) + " coincides with its attach point");
  }
  c.direction = r / c.distance;
  c.direction_rate = (c.attach_velocity - x.robots[k].velocity) / p.mechanism.cable_lengths.at(k);
  return c;
}

Mat6 payload_coupling_matrix(const SystemState& x, const SystemParams& p,
                             std::span<const std::size_t> cables) {
  const Mat3 R = x.payload.rotation();
  Mat6 J = Mat6::Zero();
  J.topLeftCorner<3, 3>() = p.payload.mass * Mat3::Identity();
  J.bottomRightCorner<3, 3>() = p.payload.inertia;
  for (std::size_t i : cables) {
    const Vec3 r = x.payload.position + R * p.payload.attach_points[i] - x.robots[i].position;
    const Vec3 xi = r.normalized();
    const Mat3 P = xi * xi.transpose();
    const double m = p.robots[i].mass;
    const Mat3 rho_hat = hat(p.payload.attach_points[i]);
    J.topLeftCorner<3, 3>() += m * P;
    J.topRightCorner<3, 3>() -= m * P * R * rho_hat;
    J.bottomLeftCorner<3, 3>() += m * rho_hat * R.transpose() * P;
    J.bottomRightCorner<3, 3>() -= m * rho_hat * R.transpose() * P * R * rho_hat;
  }
  return J;
}

SystemRate single_taut_deriv(const SystemState& x, const ControlInput& u, const SystemParams& p,
                             double geometry_tol) {
  require_inputs(x, u, p);
  const double m = p.robots[0].mass;
  const double mL = p.payload.mass;
  const double l = p.mechanism.cable_lengths[0];
  const BodyState& robot = x.robots[0];
  const Vec3 g = kGravity * e3();

  const Vec3 r = x.payload.position - robot.position;
  const double d = r.norm();
  check_length(d, l, 0, geometry_tol);
  const Vec3 xi = r / d;
  const Vec3 xi_dot = (x.payload.velocity - robot.velocity) / l;
  const Vec3 F = thrust_vector(robot, u.robots[0]);

  const Vec3 payload_accel = (xi.dot(F) - m * l * xi_dot.squaredNorm()) * xi / (m + mL) - g;
  const Vec3 xi_ddot = xi.cross(xi.cross(F)) / (m * l) - xi_dot.squaredNorm() * xi;

  SystemRate out;
  out.payload.velocity = x.payload.velocity;
  out.payload.acceleration = payload_accel;
  out.robots.push_back(robot_rate(robot, payload_accel - l * xi_ddot, u.robots[0], p.robots[0]));
  return out;
}

SystemRate single_slack_deriv(const SystemState& x, const ControlInput& u, const SystemParams& p) {
  require_inputs(x, u, p);
  const Vec3 g = kGravity * e3();
  const BodyState& robot = x.robots[0];
  SystemRate out;
  out.payload.velocity = x.payload.velocity;
  out.payload.acceleration = -g;
  out.robots.push_back(robot_rate(robot, thrust_vector(robot, u.robots[0]) / p.robots[0].mass - g,
                                  u.robots[0], p.robots[0]));
  return out;
}

SystemRate multi_cable_deriv(const SystemState& x, const ControlInput& u, const SystemParams& p,
                             const CableStatus& status, double geometry_tol) {
  const MultiCableSolution s = solve_multi_cable(x, u, p, status, geometry_tol);
  SystemRate out;
  out.payload.velocity = x.payload.velocity;
  out.payload.acceleration = s.payload_accel;
  if (rigid_payload(p)) {
    out.payload.attitude_rate = quat_derivative(x.payload.attitude, x.payload.angular_velocity);
    out.payload.angular_acceleration = s.payload_ang_accel;
  }
  out.robots.reserve(p.robots.size());
  for (std::size_t k = 0; k < p.robots.size(); ++k)
    out.robots.push_back(robot_rate(x.robots[k], s.robot_accel[k], u.robots[k], p.robots[k]));
  return out;
}

SystemRate cable_system_deriv(const SystemState& x, const ControlInput& u,
                              const SystemParams& p, const CableStatus& status,
                              double geometry_tol) {
  if (p.kind() == SystemKind::SingleCable) {
    return status.taut.at(0) ? single_taut_deriv(x, u, p, geometry_tol)
                             : single_slack_deriv(x, u, p);
  }
  return multi_cable_deriv(x, u, p, status, geometry_tol);
}

std::vector<double> cable_tensions(const SystemState& x, const ControlInput& u,
                                   const SystemParams& p, const CableStatus& status) {
  if (p.kind() == SystemKind::SingleCable) {
    if (!status.taut.at(0)) return {0.0};
    const SystemRate r = single_taut_deriv(x, u, p, std::numeric_limits<double>::infinity());
    const Vec3 xi = (x.payload.position - x.robots[0].position).normalized();
    return {-p.payload.mass * xi.dot(r.payload.acceleration + kGravity * e3())};
  }
  return solve_multi_cable(x, u, p, status, std::numeric_limits<double>::infinity()).tension;
}

// ---------------------------------------------------------------------------
// Rigid links
// ---------------------------------------------------------------------------

WrenchMap default_wrench_map(const Vec3& r) {
  WrenchMap A = WrenchMap::Identity();
  // r x (f e3) = f (r_y, -r_x, 0)
  A(1, 0) = r.y();
  A(2, 0) = -r.x();
  return A;
}

StructureParams make_structure(const SystemParams& p) {
  if (p.payload.attach_points.size() != p.robots.size()) {
    throw ConfigError("rigid-link structure needs one offset per robot");
  }
  StructureParams s;
  s.mass = p.payload.mass;
  Vec3 moment = Vec3::Zero();
  for (std::size_t k = 0; k < p.robots.size(); ++k) {
    s.mass += p.robots[k].mass;
    moment += p.robots[k].mass * p.payload.attach_points[k];
  }
  const Vec3 com = moment / s.mass;
  auto parallel_axis = [](double m, const Vec3& r) {
    return Mat3(m * (r.squaredNorm() * Mat3::Identity() - r * r.transpose()));
  };
  s.payload_offset = -com;
  s.inertia = p.payload.inertia + parallel_axis(p.payload.mass, s.payload_offset);
  for (std::size_t k = 0; k < p.robots.size(); ++k) {
    const Vec3 r = p.payload.attach_points[k] - com;
    s.robot_offsets.push_back(r);
    s.inertia += p.robots[k].inertia() + parallel_axis(p.robots[k].mass, r);
  }
  if (!p.mechanism.wrench_maps.empty()) {
    if (p.mechanism.wrench_maps.size() != p.robots.size()) {
      throw ConfigError("wrench map count does not match robot count");
    }
    s.wrench_maps = p.mechanism.wrench_maps;
  } else {
    for (const Vec3& r : s.robot_offsets) s.wrench_maps.push_back(default_wrench_map(r));
  }
  return s;
}

Wrench wrench_map(std::span<const WrenchMap> maps, const ControlInput& u) {
  if (maps.size() != u.robots.size()) {
    throw NumericError("wrench map count does not match input count");
  }
  Vec4 total = Vec4::Zero();
  for (std::size_t k = 0; k < maps.size(); ++k) {
    Vec4 in;
    in << u.robots[k].thrust, u.robots[k].moment;
    total += maps[k] * in;
  }
  return {total[0], total.tail<3>()};
}

BodyRate rigid_structure_deriv(const StructureState& s, const ControlInput& u,
                               const StructureParams& structure) {
  const Wrench w = wrench_map(structure.wrench_maps, u);
  const Vec3 accel = w.thrust * (s.rotation() * e3()) / structure.mass - kGravity * e3();
  return free_body_rate(s, accel, w.moment, structure.inertia);
}

SystemState structure_to_members(const StructureState& s, const StructureParams& structure) {
  const Mat3 R = s.rotation();
  auto member = [&](const Vec3& r) {
    BodyState b;
    b.position = s.position + R * r;
    b.velocity = s.velocity + R * s.angular_velocity.cross(r);
    b.attitude = s.attitude;
    b.angular_velocity = s.angular_velocity;
    return b;
  };
  SystemState out;
  out.payload = member(structure.payload_offset);
  for (const Vec3& r : structure.robot_offsets) out.robots.push_back(member(r));
  return out;
}

StructureState structure_from_payload(const BodyState& payload, const StructureParams& structure) {
  const Mat3 R = payload.rotation();
  StructureState s;
  s.attitude = payload.attitude;
  s.angular_velocity = payload.angular_velocity;
  s.position = payload.position - R * structure.payload_offset;
  s.velocity = payload.velocity - R * payload.angular_velocity.cross(structure.payload_offset);
  return s;
}

Vec3 linear_momentum(const SystemState& x, const SystemParams& p) {
  Vec3 m = p.payload.mass * x.payload.velocity;
  for (std::size_t k = 0; k < p.robots.size(); ++k) m += p.robots[k].mass * x.robots[k].velocity;
  return m;
}

double kinetic_energy(const SystemState& x, const SystemParams& p) {
  double e = 0.5 * p.payload.mass * x.payload.velocity.squaredNorm();
  if (rigid_payload(p)) {
    const Vec3& w = x.payload.angular_velocity;
    e += 0.5 * w.dot(p.payload.inertia * w);
  }
  for (std::size_t k = 0; k < p.robots.size(); ++k) {
    const Vec3& w = x.robots[k].angular_velocity;
    e += 0.5 * p.robots[k].mass * x.robots[k].velocity.squaredNorm();
    e += 0.5 * w.dot(p.robots[k].inertia() * w);
  }
  return e;
}

double total_energy(const SystemState& x, const SystemParams& p) {
  double potential = p.payload.mass * x.payload.position.z();
  for (std::size_t k = 0; k < p.robots.size(); ++k)
    potential += p.robots[k].mass * x.robots[k].position.z();
  return kinetic_energy(x, p) + kGravity * potential;
}

}  // namespace airlift::dynamics
