#include "airlift/hybrid.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "airlift/dynamics.hpp"
#include "airlift/errors.hpp"

namespace airlift::hybrid {

CableMetrics cable_metrics(const SystemState& x, const SystemParams& p, std::size_t k) {
  const Mat3 R = x.payload.rotation();
  const Vec3& rho = p.payload.attach_points.at(k);
  const Vec3 attach = x.payload.position + R * rho;
  const Vec3 attach_vel = x.payload.velocity + R * x.payload.angular_velocity.cross(rho);
  const Vec3 rel = x.robots.at(k).position - attach;
  const double d = rel.norm();
  if (!(d > 0.0)) {
    throw NumericError("degenerate cable geometry: robot " + std::to_string(k) +
                       " sits on its attach point");
  }
  return {d, rel.dot(x.robots[k].velocity - attach_vel) / d};
}

std::vector<std::size_t> GuardEvent::colliding() const {
  std::vector<std::size_t> out = slack_to_taut;
  out.insert(out.end(), taut_stretching.begin(), taut_stretching.end());
  std::sort(out.begin(), out.end());
  return out;
}

CableStatus GuardEvent::apply(const CableStatus& status) const {
  CableStatus out = status;
  for (std::size_t k : taut_to_slack) out.taut[k] = false;
  for (std::size_t k : slack_to_taut) out.taut[k] = true;
  return out;
}

std::optional<GuardEvent> detect_guard(const SystemState& x, const CableStatus& status,
                                       const SystemParams& p, const GuardTolerances& tol,
                                       std::span<const double> tensions) {
  GuardEvent ev;
  std::vector<std::size_t> stretching;
  for (std::size_t k = 0; k < status.taut.size(); ++k) {
    const CableMetrics c = cable_metrics(x, p, k);
    const double l = p.mechanism.cable_lengths[k];
    const bool reached = c.distance >= l - tol.taut;
    if (status.taut[k]) {
      const bool compressed = !tensions.empty() && tensions[k] < 0.0;
      if (c.distance < l - tol.slack || compressed) {
        ev.taut_to_slack.push_back(k);
      } else if (reached && c.rate > 0.0) {
        stretching.push_back(k);
      }
    } else if (reached && c.rate > 0.0) {
      ev.slack_to_taut.push_back(k);
    }
  }
  if (ev.taut_to_slack.empty() && ev.slack_to_taut.empty()) return std::nullopt;
  if (!ev.slack_to_taut.empty()) ev.taut_stretching = std::move(stretching);
  ev.taut_before = status.taut_count();
  ev.taut_after = ev.taut_before + ev.slack_to_taut.size() - ev.taut_to_slack.size();
  return ev;
}

SystemState single_reset(const SystemState& x, const SystemParams& p, const GuardTolerances& tol) {
  const CableMetrics c = cable_metrics(x, p, 0);
  const double l = p.mechanism.cable_lengths[0];
  if (std::abs(c.distance - l) > tol.reset_geometry || c.rate < -tol.taut) {
    std::ostringstream os;
    os << "single_reset precondition violated: d - l = " << c.distance - l
       << ", d_dot = " << c.rate;
    throw NumericError(os.str());
  }
  const double m = p.robots[0].mass;
  const double mL = p.payload.mass;
  const Vec3 xi = (x.payload.position - x.robots[0].position) / c.distance;
  const Mat3 P = xi * xi.transpose();
  const Vec3 common = (m * P * x.robots[0].velocity + mL * P * x.payload.velocity) / (m + mL);

  SystemState out = x;
  out.robots[0].velocity = common + (x.robots[0].velocity - P * x.robots[0].velocity);
  out.payload.velocity = common + (x.payload.velocity - P * x.payload.velocity);
  return out;
}

CollisionSystem assemble_collision_system(const SystemState& x, const SystemParams& p,
                                          std::span<const std::size_t> colliding) {
  CollisionSystem sys;
  sys.matrix = dynamics::payload_coupling_matrix(x, p, colliding);
  const Mat3 R = x.payload.rotation();
  sys.rhs.head<3>() = p.payload.mass * x.payload.velocity;
  sys.rhs.tail<3>() = p.payload.inertia * x.payload.angular_velocity;
  for (std::size_t i : colliding) {
    const Vec3 r = x.payload.position + R * p.payload.attach_points[i] - x.robots[i].position;
    const Vec3 xi = r.normalized();
    const Vec3 along = p.robots[i].mass * xi * xi.dot(x.robots[i].velocity);
    sys.rhs.head<3>() += along;
    sys.rhs.tail<3>() += hat(p.payload.attach_points[i]) * R.transpose() * along;
  }
  return sys;
}

Vec6 solve_collision_system(const CollisionSystem& sys, bool rigid_payload) {
  Vec6 twist = Vec6::Zero();
  if (rigid_payload) {
    Eigen::LDLT<Mat6> ldlt(sys.matrix);
    const double rcond = ldlt.rcond();
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(rcond > 1e-14)) {
      std::ostringstream os;
      os << "collision system is not positive definite (condition number ~ " << 1.0 / rcond
         << "); input state is corrupted";
      throw NumericError(os.str());
    }
    twist = ldlt.solve(sys.rhs);
  } else {
    const Mat3 top = sys.matrix.topLeftCorner<3, 3>();
    Eigen::LDLT<Mat3> ldlt(top);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-14)) {
      throw NumericError("collision system is singular");
    }
    twist.head<3>() = ldlt.solve(sys.rhs.head<3>());
  }
  return twist;
}

SystemState multi_reset(const SystemState& x, const SystemParams& p, const GuardEvent& event) {
  const auto colliding = event.colliding();
  if (colliding.empty()) return x;

  const bool rigid = p.payload.kind == PayloadKind::RigidBody;
  const Vec6 twist = solve_collision_system(assemble_collision_system(x, p, colliding), rigid);

  SystemState out = x;
  out.payload.velocity = twist.head<3>();
  if (rigid) out.payload.angular_velocity = twist.tail<3>();

  const Mat3 R = x.payload.rotation();
  for (std::size_t i : colliding) {
    const Vec3& rho = p.payload.attach_points[i];
    const Vec3 xi = (x.payload.position + R * rho - x.robots[i].position).normalized();
    const Mat3 P = xi * xi.transpose();
    const Vec3 attach_vel = out.payload.velocity - R * hat(rho) * out.payload.angular_velocity;
    const Vec3& v = x.robots[i].velocity;
    out.robots[i].velocity = P * attach_vel + (v - P * v);
  }
  return out;
}

}  // namespace airlift::hybrid
