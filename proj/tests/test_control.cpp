#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "airlift/control.hpp"
#include "airlift/errors.hpp"
#include "support.hpp"

using namespace airlift;
using namespace airlift::control;
using airlift::fixtures::Rng;

namespace {

ControllerGains test_gains() {
  ControllerGains g;
  g.kp = Vec3(4, 5, 6);
  g.kd = Vec3(3, 3, 4);
  g.ki = Vec3(0.5, 0.5, 0.5);
  g.kR = Vec3(0.5, 0.5, 0.1);
  g.kOmega = Vec3(0.03, 0.03, 0.02);
  g.kXi = Vec3(12, 12, 12);
  g.kw = Vec3(4, 4, 4);
  g.kRL = Vec3(0.1, 0.2, 0.3);
  g.kOmegaL = Vec3(0.05, 0.05, 0.05);
  g.robot_kp = Vec3(6, 6, 8);
  g.robot_kd = Vec3(4, 4, 5);
  return g;
}

SystemState hanging(const SystemParams& p, const Vec3& payload_position) {
  SystemState x;
  x.payload.position = payload_position;
  const Mat3 R = x.payload.rotation();
  for (std::size_t k = 0; k < p.robot_count(); ++k) {
    BodyState r;
    r.position = payload_position + R * p.payload.attach_points[k] +
                 p.mechanism.cable_lengths[k] * e3();
    x.robots.push_back(r);
  }
  return x;
}

planner::FlatOutputs hover_at(const Vec3& p) {
  planner::FlatOutputs d;
  d.position = p;
  return d;
}

SystemParams rigid_link_params() {
  SystemParams p = fixtures::rigid_payload_params(
      {{0.3, 0.3, 0}, {-0.3, 0.3, 0}, {-0.3, -0.3, 0}, {0.3, -0.3, 0}}, {0.25, 0.25, 0.25, 0.25},
      {}, 0.3, Vec3(4e-3, 4e-3, 8e-3).asDiagonal());
  p.mechanism.kind = MechanismKind::RigidLink;
  return p;
}

}  // namespace

TEST(SingleCableControl, HoverAtSetpoint) {
  const SystemParams p = fixtures::single_cable_params(0.25, 0.1);
  const SystemState x = hanging(p, Vec3(0, 0, 1));
  const SingleCableOutput out = single_cable_control(x, hover_at(Vec3(0, 0, 1)), test_gains(), p);
  EXPECT_NEAR(out.input.thrust, 0.35 * kGravity, 1e-12);
  EXPECT_LE(out.input.moment.norm(), 1e-15);
  EXPECT_LE((out.xi_des + e3()).norm(), 1e-15);
}

TEST(SingleCableControl, PositionErrorEntersDesiredForce) {
  const SystemParams p = fixtures::single_cable_params(0.25, 0.1);
  const SystemState x = hanging(p, Vec3(0, 0, 1));
  const double eps = 0.05;
  const ControllerGains g = test_gains();
  const SingleCableOutput out = single_cable_control(x, hover_at(Vec3(eps, 0, 1)), g, p);
  EXPECT_NEAR(out.force_des.x(), 0.35 * g.kp.x() * eps, 1e-14);
  EXPECT_NEAR(out.force_des.z(), 0.35 * kGravity, 1e-14);
  // The robot should move over the error: its target -l xi_des leans to +x.
  EXPECT_LT(out.xi_des.x(), 0.0);
}

TEST(SingleCableControl, VanishingForceIsAnError) {
  const SystemParams p = fixtures::single_cable_params(0.25, 0.1);
  const SystemState x = hanging(p, Vec3(0, 0, 1));
  planner::FlatOutputs d = hover_at(Vec3(0, 0, 1));
  d.acceleration = -kGravity * e3();
  EXPECT_THROW(single_cable_control(x, d, test_gains(), p), NumericError);
}

TEST(RobotAttitudeControl, AlignedAttitudeNeedsNoMoment) {
  Rng rng(41);
  const QuadrotorParams quad = fixtures::robot(0.25);
  for (int i = 0; i < 100; ++i) {
    BodyState r;
    const double yaw = rng.uniform(-3, 3);
    const Vec3 b3 = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1).normalized();
    r.attitude = Quat(attitude_from_thrust_axis(b3, yaw));
    const RobotInput u = robot_attitude_control(r, 3.0 * b3, yaw, test_gains(), quad);
    EXPECT_LE(u.moment.norm(), 1e-12);
    EXPECT_NEAR(u.thrust, 3.0, 1e-12);
  }
}

TEST(AttitudeError, SmallRotationAboutZ) {
  const Mat3 R_des = Eigen::AngleAxisd(1e-3, e3()).toRotationMatrix();
  const Vec3 e = attitude_error(Mat3::Identity(), R_des);
  EXPECT_NEAR(e.z(), std::sin(1e-3), 1e-15);
  EXPECT_LE(e.head<2>().norm(), 1e-18);
}

TEST(MultiCableControl, SymmetricHoverSharesThrust) {
  const SystemParams p = fixtures::triangle_params();
  const SystemState x = hanging(p, Vec3(0, 0, 1));
  const MultiCableOutput out =
      multi_cable_control(x, hover_at(Vec3(0, 0, 1)), test_gains(), p, CableStatus::all_taut(3));
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(out.input.robots[k].thrust, (0.25 + 0.25 / 3.0) * kGravity, 1e-12);
    EXPECT_LE(out.input.robots[k].moment.norm(), 1e-14);
  }
}

TEST(MultiCableControl, YawErrorCommandsYawMoment) {
  const SystemParams p = fixtures::triangle_params();
  const SystemState x = hanging(p, Vec3(0, 0, 1));
  planner::FlatOutputs d = hover_at(Vec3(0, 0, 1));
  const double a = 0.1;
  d.attitude = Quat(Eigen::AngleAxisd(a, e3()));
  const ControllerGains g = test_gains();
  const MultiCableOutput out = multi_cable_control(x, d, g, p, CableStatus::all_taut(3));
  EXPECT_NEAR(out.moment_des.z(), g.kRL.z() * std::sin(a), 1e-15);
  EXPECT_LE(out.moment_des.head<2>().norm(), 1e-15);
}

// Second, independent transcription of the cooperative cable law. It uses a
// least-squares solve for the tension split instead of the closed-form
// pseudo-inverse and expands every cross product explicitly.
TEST(MultiCableControl, MatchesIndependentTranscription) {
  Rng rng(42);
  const SystemParams p = fixtures::triangle_params();
  SystemState x = fixtures::random_cable_state(
      rng, p, {Vec3(0.1, 0.05, -1).normalized(), Vec3(-0.05, 0.1, -1).normalized(),
               Vec3(0.02, -0.08, -1).normalized()});
  x.payload.attitude = Quat(Eigen::AngleAxisd(0.1, Vec3(0.3, -0.2, 1).normalized()));
  planner::FlatOutputs d = planner::circle_traj(2.3, 1.0, 10.0, 1.0);
  d.attitude = Quat(Eigen::AngleAxisd(0.05, Vec3::UnitX()));
  d.angular_velocity = Vec3(0.2, 0, 0);
  d.angular_acceleration = Vec3(-0.1, 0, 0);
  const ControllerGains g = test_gains();
  const Vec3 integral(0.01, -0.02, 0.03);
  std::vector<CableReference> refs(3);
  for (auto& r : refs) {
    r.xi_dot = rng.vec(-0.1, 0.1);
    r.xi_ddot = rng.vec(-0.1, 0.1);
  }
  const MultiCableOutput out =
      multi_cable_control(x, d, g, p, CableStatus::all_taut(3), integral, refs);

  const Vec3 G(0, 0, kGravity);
  const Mat3 R = x.payload.rotation();
  const Mat3 Rd = d.attitude.toRotationMatrix();
  const Vec3 a_cmd = g.kp.asDiagonal() * (d.position - x.payload.position) +
                     g.kd.asDiagonal() * (d.velocity - x.payload.velocity) +
                     g.ki.asDiagonal() * integral + d.acceleration;
  const Vec3 F = p.payload.mass * (a_cmd + G);
  const Mat3 E = 0.5 * (R.transpose() * Rd - Rd.transpose() * R);
  const Vec3 eR(E(2, 1), E(0, 2), E(1, 0));
  const Vec3 wd = R.transpose() * Rd * d.angular_velocity;
  const Vec3 eW = wd - x.payload.angular_velocity;
  const Vec3 alpha = R.transpose() * Rd * d.angular_acceleration;
  const Vec3 M = g.kRL.asDiagonal() * eR + g.kOmegaL.asDiagonal() * eW +
                 p.payload.inertia * alpha + wd.cross(p.payload.inertia * wd);
  EXPECT_LE((out.moment_des - M).norm(), 1e-12);

  Eigen::MatrixXd P(6, 9);
  for (int k = 0; k < 3; ++k) {
    P.block<3, 3>(0, 3 * k) = Mat3::Identity();
    const Vec3 r = p.payload.attach_points[k];
    Mat3 rx;
    rx << 0, -r.z(), r.y(), r.z(), 0, -r.x(), -r.y(), r.x(), 0;
    P.block<3, 3>(3, 3 * k) = rx;
  }
  Vec6 w;
  w << R.transpose() * F, M;
  const Eigen::VectorXd mu_body = P.completeOrthogonalDecomposition().solve(w);

  for (int k = 0; k < 3; ++k) {
    const Vec3 mu = R * mu_body.segment<3>(3 * k);
    EXPECT_LE((out.tensions[k] - mu).norm(), 1e-10);
    const Vec3 xi_d = -mu.normalized();
    const double m = p.robots[k].mass;
    const double l = p.mechanism.cable_lengths[k];
    const Vec3 rho = p.payload.attach_points[k];
    const Vec3 pk = x.payload.position + R * rho;
    const Vec3 vk = x.payload.velocity + R * x.payload.angular_velocity.cross(rho);
    const Vec3 xi = (pk - x.robots[k].position).normalized();
    const Vec3 xi_dot = (vk - x.robots[k].velocity) / l;
    const Vec3 om = xi.cross(xi_dot);
    const Vec3 om_d = xi_d.cross(refs[k].xi_dot);
    const Vec3 al_d = xi_d.cross(refs[k].xi_ddot);
    const Vec3 e_xi = xi_d.cross(xi);
    const Vec3 e_om = om + xi.cross(xi.cross(om_d));
    const Vec3 a_att = a_cmd + G +
                       R * x.payload.angular_velocity.cross(x.payload.angular_velocity.cross(rho)) +
                       R * alpha.cross(rho);
    const Vec3 u_par = xi * xi.dot(mu) + m * l * om.squaredNorm() * xi + m * xi * xi.dot(a_att);
    // -xi x (xi x v) is the component of v orthogonal to xi
    const Vec3 a_perp = a_att - xi * xi.dot(a_att);
    const Vec3 inner = -(g.kXi.asDiagonal() * e_xi) - g.kw.asDiagonal() * e_om -
                       xi.dot(om_d) * xi_dot;
    const Vec3 u_perp = m * l * xi.cross(inner) - m * l * xi.cross(xi.cross(xi.cross(al_d))) +
                        m * a_perp;
    const Vec3 u = u_par + u_perp;
    const Mat3 Rk = x.robots[k].rotation();
    EXPECT_NEAR(out.input.robots[k].thrust, u.dot(Rk.col(2)), 1e-10);
    EXPECT_LE((out.xi_des[k] - xi_d).norm(), 1e-10);
  }
}

TEST(TensionDistribution, SymmetricWeightSplitsEvenly) {
  const SystemParams p = fixtures::triangle_params();
  const double W = 0.25 * kGravity;
  const TensionCommand mu =
      tension_distribution(Vec3(0, 0, W), Vec3::Zero(), Mat3::Identity(), p.payload.attach_points);
  for (const Vec3& m : mu) EXPECT_LE((m - Vec3(0, 0, W / 3.0)).norm(), 1e-15);
}

TEST(TensionDistribution, ReconstructsTheWrench) {
  Rng rng(43);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 3 + i % 3;
    std::vector<Vec3> rho;
    for (std::size_t k = 0; k < n; ++k) rho.push_back(rng.vec(-0.5, 0.5));
    const Vec3 F = rng.vec(-5, 5);
    const Vec3 M = rng.vec(-1, 1);
    const Mat3 R = rng.quat().toRotationMatrix();
    const TensionCommand mu = tension_distribution(F, M, R, rho);
    Vec3 f = Vec3::Zero(), m = Vec3::Zero();
    for (std::size_t k = 0; k < n; ++k) {
      f += mu[k];
      m += rho[k].cross(R.transpose() * mu[k]);
    }
    EXPECT_LE((f - F).norm(), 1e-10);
    EXPECT_LE((m - M).norm(), 1e-10);
  }
}

TEST(TensionDistribution, CollinearAttachPointsAreSingular) {
  const std::vector<Vec3> rho{{-0.3, 0, 0}, {0, 0, 0}, {0.3, 0, 0}};
  try {
    tension_distribution(Vec3(0, 0, 3), Vec3(0.1, 0, 0), Mat3::Identity(), rho);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
}

TEST(RigidLinkControl, HoverAtSetpoint) {
  const SystemParams p = rigid_link_params();
  const dynamics::StructureParams s = dynamics::make_structure(p);
  const Vec3 target(0, 0, 1);
  StructureState st;
  st.position = target - s.payload_offset;
  const StructureCommand c = rigid_link_control(st, hover_at(target), test_gains(), s);
  EXPECT_NEAR(c.wrench.thrust, s.mass * kGravity, 1e-12);
  EXPECT_LE(c.wrench.moment.norm(), 1e-14);
}

TEST(RigidLinkControl, YawErrorGivesYawMoment) {
  const SystemParams p = rigid_link_params();
  const dynamics::StructureParams s = dynamics::make_structure(p);
  planner::FlatOutputs d = hover_at(-s.payload_offset);
  d.attitude = Quat(Eigen::AngleAxisd(0.2, e3()));
  const StructureCommand c = rigid_link_control(StructureState{}, d, test_gains(), s);
  EXPECT_GT(c.wrench.moment.z(), 0.0);
  EXPECT_LE(c.wrench.moment.head<2>().norm(), 1e-14);
}

TEST(RigidLinkControl, ThrustSensitivityToPositionError) {
  const SystemParams p = rigid_link_params();
  const dynamics::StructureParams s = dynamics::make_structure(p);
  const ControllerGains g = test_gains();
  StructureState st;
  st.attitude = Quat(Eigen::AngleAxisd(0.2, Vec3(0, 1, 0)));
  const Vec3 target = st.position + st.rotation() * s.payload_offset;
  const double h = 1e-6;
  auto thrust = [&](double ex) {
    return rigid_link_control(st, hover_at(target + Vec3(ex, 0, 0)), g, s).wrench.thrust;
  };
  const double fd = (thrust(h) - thrust(-h)) / (2 * h);
  EXPECT_NEAR(fd, s.mass * g.kp.x() * (st.rotation() * e3()).x(), 1e-6);
}

TEST(Allocate, SymmetricPairSplitsThrust) {
  const std::vector<WrenchMap> maps{dynamics::default_wrench_map(Vec3(0.3, 0, 0)),
                                    dynamics::default_wrench_map(Vec3(-0.3, 0, 0))};
  const std::vector<QuadrotorParams> robots{fixtures::robot(0.25), fixtures::robot(0.25)};
  const Allocation a = allocate({4.0, Vec3::Zero()}, maps, robots);
  EXPECT_FALSE(a.saturated);
  for (const auto& r : a.input.robots) {
    EXPECT_NEAR(r.thrust, 2.0, 1e-12);
    EXPECT_LE(r.moment.norm(), 1e-12);
  }
}

TEST(Allocate, ReconstructsUnclampedWrench) {
  Rng rng(44);
  const SystemParams p = rigid_link_params();
  const dynamics::StructureParams s = dynamics::make_structure(p);
  for (int i = 0; i < 100; ++i) {
    const dynamics::Wrench w{rng.uniform(8, 10), rng.vec(-0.05, 0.05)};
    const Allocation a = allocate(w, s.wrench_maps, p.robots);
    ASSERT_FALSE(a.saturated);
    const dynamics::Wrench back = dynamics::wrench_map(s.wrench_maps, a.input);
    EXPECT_NEAR(back.thrust, w.thrust, 1e-10);
    EXPECT_LE((back.moment - w.moment).norm(), 1e-10);
  }
}

TEST(Allocate, ExcessThrustIsClampedAndFlagged) {
  const std::vector<WrenchMap> maps{dynamics::default_wrench_map(Vec3(0.3, 0, 0)),
                                    dynamics::default_wrench_map(Vec3(-0.3, 0, 0))};
  const std::vector<QuadrotorParams> robots{fixtures::robot(0.25), fixtures::robot(0.25)};
  const double f_max = robots[0].max_thrust();
  const Allocation a = allocate({3.0 * f_max, Vec3::Zero()}, maps, robots);
  EXPECT_TRUE(a.saturated);
  for (const auto& r : a.input.robots) EXPECT_DOUBLE_EQ(r.thrust, f_max);
}

TEST(Saturate, ClampsNegativeThrustAndLargeMoment) {
  const QuadrotorParams q = fixtures::robot(0.25);
  RobotInput u{-1.0, Vec3(10, 0, 0)};
  EXPECT_TRUE(saturate(u, q));
  EXPECT_EQ(u.thrust, 0.0);
  EXPECT_NEAR(u.moment.norm(), q.max_moment(), 1e-15);
  RobotInput ok{1.0, Vec3(1e-3, 0, 0)};
  EXPECT_FALSE(saturate(ok, q));
}

TEST(Controller, IntegralIsClampedAndReset) {
  const SystemParams p = fixtures::single_cable_params();
  ControllerOptions opt;
  opt.integral_limit = 0.05;
  Controller c(p, test_gains(), opt, 0.01);
  const SystemState x = hanging(p, Vec3(0, 0, 1));
  for (int i = 0; i < 100; ++i) c.compute(x, CableStatus::all_taut(1), hover_at(Vec3(1, -1, 1)));
  EXPECT_NEAR(c.integral().x(), 0.05, 1e-15);
  EXPECT_NEAR(c.integral().y(), -0.05, 1e-15);
  EXPECT_EQ(c.integral().z(), 0.0);
  c.reset_integral();
  EXPECT_EQ(c.integral(), Vec3::Zero());
}
