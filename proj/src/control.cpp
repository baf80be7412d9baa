#include "airlift/control.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "airlift/errors.hpp"

namespace airlift::control {

namespace {

Vec3 gravity() { return kGravity * e3(); }

// Feedforward moment for tracking a desired angular velocity/acceleration:
// J R^T R_d dOmega_d + (R^T R_d Omega_d)^ J R^T R_d Omega_d.
Vec3 tracking_feedforward(const Mat3& R, const Mat3& R_des, const Vec3& omega_des,
                          const Vec3& alpha_des, const Mat3& J) {
  const Mat3 rel = R.transpose() * R_des;
  const Vec3 w = rel * omega_des;
  return J * rel * alpha_des + w.cross(J * w);
}

Vec3 clamp_abs(const Vec3& v, double limit) {
  return v.cwiseMax(Vec3::Constant(-limit)).cwiseMin(Vec3::Constant(limit));
}

}  // namespace

Vec3 attitude_error(const Mat3& R, const Mat3& R_des) {
  return 0.5 * vee(R.transpose() * R_des - R_des.transpose() * R, 1e-6);
}

RobotInput robot_attitude_control(const BodyState& robot, const Vec3& force, double yaw,
                                  const ControllerGains& g, const QuadrotorParams& quad) {
  const Mat3 R = robot.rotation();
  const double norm = force.norm();
  const Vec3 b3 = norm > 1e-9 ? Vec3(force / norm) : e3();
  const Mat3 R_des = attitude_from_thrust_axis(b3, yaw);
  const Mat3 J = quad.inertia();
  const Vec3& w = robot.angular_velocity;

  RobotInput u;
  u.thrust = force.dot(R * e3());
  u.moment = g.kR.cwiseProduct(attitude_error(R, R_des)) - g.kOmega.cwiseProduct(w) +
             w.cross(J * w);
  return u;
}

SingleCableOutput single_cable_control(const SystemState& x, const planner::FlatOutputs& des,
                                       const ControllerGains& g, const SystemParams& p,
                                       const Vec3& integral, const CableReference& ref) {
  const double m = p.robots.at(0).mass;
  const double mL = p.payload.mass;
  const double l = p.mechanism.cable_lengths.at(0);
  const dynamics::CableKinematics c = dynamics::cable_kinematics(x, p, 0);
  const Vec3& xi = c.direction;
  const Vec3& xi_dot = c.direction_rate;

  const Vec3 ex = des.position - x.payload.position;
  const Vec3 ev = des.velocity - x.payload.velocity;

  SingleCableOutput out;
  out.force_des = (m + mL) * (g.kp.cwiseProduct(ex) + g.kd.cwiseProduct(ev) +
                              g.ki.cwiseProduct(integral)) +
                  (m + mL) * (des.acceleration + gravity()) + m * l * xi_dot.squaredNorm() * xi;
  const double fnorm = out.force_des.norm();
  if (!(fnorm > 1e-9)) {
    throw NumericError("desired payload force vanishes; cable direction is undefined");
  }
  out.xi_des = -out.force_des / fnorm;

  const Vec3 omega = xi.cross(xi_dot);
  const Vec3 omega_des = out.xi_des.cross(ref.xi_dot);
  const Vec3 alpha_des = out.xi_des.cross(ref.xi_ddot);
  const Vec3 e_xi = out.xi_des.cross(xi);
  const Vec3 e_w = omega + xi.cross(xi.cross(omega_des));

  out.robot_force = xi * xi.dot(out.force_des) -
                    m * l * xi.cross(g.kXi.cwiseProduct(e_xi) + g.kw.cwiseProduct(e_w) +
                                     xi.dot(omega_des) * xi_dot) +
                    m * l * xi.cross(alpha_des);
  out.input = robot_attitude_control(x.robots[0], out.robot_force, des.yaw, g, p.robots[0]);
  return out;
}

RobotInput slack_robot_control(const BodyState& robot, const Vec3& target,
                               const Vec3& target_velocity, const Vec3& target_acceleration,
                               double yaw, const ControllerGains& g, const QuadrotorParams& quad) {
  const Vec3 force = quad.mass * (g.robot_kp.cwiseProduct(target - robot.position) +
                                  g.robot_kd.cwiseProduct(target_velocity - robot.velocity) +
                                  target_acceleration + gravity());
  return robot_attitude_control(robot, force, yaw, g, quad);
}

TensionCommand tension_distribution(const Vec3& force, const Vec3& moment, const Mat3& R_L,
                                    std::span<const Vec3> attach_points) {
  const std::size_t n = attach_points.size();
  Eigen::MatrixXd P(6, 3 * n);
  for (std::size_t k = 0; k < n; ++k) {
    P.block<3, 3>(0, 3 * k) = Mat3::Identity();
    P.block<3, 3>(3, 3 * k) = hat(attach_points[k]);
  }
  const Mat6 PPt = P * P.transpose();
  Eigen::FullPivLU<Mat6> lu(PPt);
  lu.setThreshold(1e-10);
  if (lu.rank() < 6) {
    std::ostringstream os;
    os << "attach points cannot realize an arbitrary payload wrench: P P^T has rank "
       << lu.rank() << " < 6";
    throw NumericError(os.str());
  }
  Vec6 w;
  w << R_L.transpose() * force, moment;
  const Eigen::VectorXd mu_body = P.transpose() * lu.solve(w);
  TensionCommand mu(n);
  for (std::size_t k = 0; k < n; ++k) mu[k] = R_L * mu_body.segment<3>(3 * k);
  return mu;
}

MultiCableOutput multi_cable_control(const SystemState& x, const planner::FlatOutputs& des,
                                     const ControllerGains& g, const SystemParams& p,
                                     const CableStatus& status, const Vec3& integral,
                                     std::span<const CableReference> refs) {
  const std::size_t n = p.robots.size();
  const bool rigid = p.payload.kind == PayloadKind::RigidBody;
  const double mL = p.payload.mass;
  const Mat3 R = x.payload.rotation();
  const Mat3 R_des = des.attitude.normalized().toRotationMatrix();
  const Vec3& Omega = x.payload.angular_velocity;

  const Vec3 ex = des.position - x.payload.position;
  const Vec3 ev = des.velocity - x.payload.velocity;
  const Vec3 accel_cmd = g.kp.cwiseProduct(ex) + g.kd.cwiseProduct(ev) +
                         g.ki.cwiseProduct(integral) + des.acceleration;

  MultiCableOutput out;
  out.force_des = mL * (accel_cmd + gravity());
  Vec3 alpha_cmd = Vec3::Zero();
  if (rigid) {
    const Vec3 eR = attitude_error(R, R_des);
    const Vec3 eOmega = R.transpose() * R_des * des.angular_velocity - Omega;
    out.moment_des = g.kRL.cwiseProduct(eR) + g.kOmegaL.cwiseProduct(eOmega) +
                     tracking_feedforward(R, R_des, des.angular_velocity,
                                          des.angular_acceleration, p.payload.inertia);
    alpha_cmd = R.transpose() * R_des * des.angular_acceleration;
    out.tensions = tension_distribution(out.force_des, out.moment_des, R, p.payload.attach_points);
  } else {
    out.tensions.assign(n, out.force_des / static_cast<double>(n));
  }

  out.input.robots.resize(n);
  out.xi_des.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3& mu = out.tensions[k];
    const double mu_norm = mu.norm();
    if (!(mu_norm > 1e-9)) {
      throw NumericError("desired tension of cable " + std::to_string(k) +
                         " vanishes; its direction is undefined");
    }
    out.xi_des[k] = -mu / mu_norm;
    const Vec3& rho = p.payload.attach_points[k];
    const double m = p.robots[k].mass;
    const double l = p.mechanism.cable_lengths[k];

    if (!status.taut.at(k)) {
      const Vec3 target = des.position + R_des * rho - l * out.xi_des[k];
      out.input.robots[k] = slack_robot_control(x.robots[k], target, des.velocity,
                                                des.acceleration, des.yaw, g, p.robots[k]);
      continue;
    }

    const CableReference ref = k < refs.size() ? refs[k] : CableReference{};
    const dynamics::CableKinematics c = dynamics::cable_kinematics(x, p, k);
    const Vec3& xi = c.direction;
    const Vec3& xi_dot = c.direction_rate;
    const Vec3 omega = xi.cross(xi_dot);
    const Vec3 omega_des = out.xi_des[k].cross(ref.xi_dot);
    const Vec3 alpha_des = out.xi_des[k].cross(ref.xi_ddot);
    const Vec3 e_xi = out.xi_des[k].cross(xi);
    const Vec3 e_w = omega + xi.cross(xi.cross(omega_des));

    const Vec3 a_attach = accel_cmd + gravity() + R * Omega.cross(Omega.cross(rho)) -
                          R * hat(rho) * alpha_cmd;
    const Mat3 P = xi * xi.transpose();
    const Vec3 u_par = P * mu + m * l * omega.squaredNorm() * xi + m * P * a_attach;
    const Vec3 u_perp =
        m * l * xi.cross(-g.kXi.cwiseProduct(e_xi) - g.kw.cwiseProduct(e_w) -
                         xi.dot(omega_des) * xi_dot) -
        m * l * xi.cross(xi.cross(xi.cross(alpha_des))) - m * xi.cross(xi.cross(a_attach));
    out.input.robots[k] =
        robot_attitude_control(x.robots[k], u_par + u_perp, des.yaw, g, p.robots[k]);
  }
  return out;
}

StructureCommand rigid_link_control(const StructureState& s, const planner::FlatOutputs& des,
                                    const ControllerGains& g,
                                    const dynamics::StructureParams& structure,
                                    const Vec3& integral) {
  const Mat3 R = s.rotation();
  StructureCommand out;
  out.position_des = des.position - R * structure.payload_offset;
  const Vec3 ex = out.position_des - s.position;
  const Vec3 ev = des.velocity - s.velocity;
  const Vec3 force = structure.mass * (g.kp.cwiseProduct(ex) + g.kd.cwiseProduct(ev) +
                                       g.ki.cwiseProduct(integral) + des.acceleration +
                                       gravity());
  out.wrench.thrust = force.dot(R * e3());
  const double norm = force.norm();
  const Vec3 b3 = norm > 1e-9 ? Vec3(force / norm) : e3();
  const Mat3 R_payload_des = des.attitude.normalized().toRotationMatrix();
  out.attitude_des = attitude_from_thrust_axis(b3, yaw_of(R_payload_des));

  const Vec3 eR = attitude_error(R, out.attitude_des);
  const Vec3 eOmega = R.transpose() * out.attitude_des * des.angular_velocity - s.angular_velocity;
  out.wrench.moment = g.kRL.cwiseProduct(eR) + g.kOmegaL.cwiseProduct(eOmega) +
                      tracking_feedforward(R, out.attitude_des, des.angular_velocity,
                                           des.angular_acceleration, structure.inertia);
  return out;
}

bool saturate(RobotInput& u, const QuadrotorParams& quad) {
  bool clipped = false;
  const double f_max = quad.max_thrust();
  if (u.thrust < 0.0) {
    u.thrust = 0.0;
    clipped = true;
  } else if (u.thrust > f_max) {
    u.thrust = f_max;
    clipped = true;
  }
  const double m_max = quad.max_moment();
  const double m_norm = u.moment.norm();
  if (m_norm > m_max) {
    u.moment *= m_max / m_norm;
    clipped = true;
  }
  return clipped;
}

bool saturate(ControlInput& u, std::span<const QuadrotorParams> robots) {
  bool clipped = false;
  for (std::size_t k = 0; k < u.robots.size(); ++k) {
    clipped = saturate(u.robots[k], robots[k]) || clipped;
  }
  return clipped;
}

Allocation allocate(const dynamics::Wrench& wrench, std::span<const WrenchMap> maps,
                    std::span<const QuadrotorParams> robots) {
  const std::size_t n = maps.size();
  Eigen::MatrixXd A(4, 4 * n);
  for (std::size_t k = 0; k < n; ++k) A.block<4, 4>(0, 4 * k) = maps[k];
  const Eigen::Matrix4d AAt = A * A.transpose();
  Eigen::FullPivLU<Eigen::Matrix4d> lu(AAt);
  lu.setThreshold(1e-12);
  if (lu.rank() < 4) {
    throw NumericError("stacked wrench map has rank " + std::to_string(lu.rank()) + " < 4");
  }
  Vec4 w;
  w << wrench.thrust, wrench.moment;
  const Eigen::VectorXd sol = A.transpose() * lu.solve(w);

  Allocation out;
  out.input.robots.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.input.robots[k].thrust = sol(4 * k);
    out.input.robots[k].moment = sol.segment<3>(4 * k + 1);
  }
  if (!robots.empty()) out.saturated = saturate(out.input, robots);
  return out;
}

Controller::Controller(const SystemParams& params, ControllerGains gains,
                       ControllerOptions options, double dt)
    : params_(params), gains_(gains), options_(options), dt_(dt) {
  if (!(dt > 0.0)) throw ConfigError("controller period must be positive");
  if (params_.kind() == SystemKind::RigidLink) structure_ = dynamics::make_structure(params_);
  refs_.assign(params_.robot_count(), CableReference{});
}

void Controller::accumulate(const Vec3& error) {
  integral_ = clamp_abs(integral_ + dt_ * error, options_.integral_limit);
}

void Controller::update_references(const std::vector<Vec3>& xi_des) {
  const std::size_t n = xi_des.size();
  if (!options_.cable_feedforward) return;
  if (!have_prev_) {
    prev_xi_des_ = xi_des;
    prev_xi_dot_.assign(n, Vec3::Zero());
    refs_.assign(n, CableReference{});
    have_prev_ = true;
    return;
  }
  const double alpha = dt_ / (options_.feedforward_filter + dt_);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec3 raw_dot = (xi_des[k] - prev_xi_des_[k]) / dt_;
    refs_[k].xi_dot += alpha * (raw_dot - refs_[k].xi_dot);
    const Vec3 raw_ddot = (refs_[k].xi_dot - prev_xi_dot_[k]) / dt_;
    refs_[k].xi_ddot += alpha * (raw_ddot - refs_[k].xi_ddot);
    prev_xi_dot_[k] = refs_[k].xi_dot;
  }
  prev_xi_des_ = xi_des;
}

ControlInput Controller::compute(const SystemState& x, const CableStatus& status,
                                 const planner::FlatOutputs& des) {
  accumulate(des.position - x.payload.position);
  if (params_.kind() == SystemKind::SingleCable) {
    const SingleCableOutput probe = single_cable_control(x, des, gains_, params_, integral_);
    update_references({probe.xi_des});
    if (status.taut.at(0)) {
      return {{single_cable_control(x, des, gains_, params_, integral_, refs_[0]).input}};
    }
    const double l = params_.mechanism.cable_lengths[0];
    return {{slack_robot_control(x.robots[0], des.position - l * probe.xi_des, des.velocity,
                                 des.acceleration, des.yaw, gains_, params_.robots[0])}};
  }
  const MultiCableOutput probe = multi_cable_control(x, des, gains_, params_, status, integral_);
  update_references(probe.xi_des);
  return multi_cable_control(x, des, gains_, params_, status, integral_, refs_).input;
}

Allocation Controller::compute_structure(const StructureState& s, const planner::FlatOutputs& des) {
  const StructureCommand cmd = rigid_link_control(s, des, gains_, structure_, integral_);
  accumulate(cmd.position_des - s.position);
  return allocate(cmd.wrench, structure_.wrench_maps, params_.robots);
}

}  // namespace airlift::control
