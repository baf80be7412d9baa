#include "airlift/types.hpp"

#include <cassert>

namespace airlift {

double QuadrotorParams::max_thrust() const {
  return 4.0 * thrust_coefficient * motor_speed_max * motor_speed_max;
}

double QuadrotorParams::max_moment() const {
  const double span = motor_speed_max * motor_speed_max - motor_speed_min * motor_speed_min;
  return arm_length * thrust_coefficient * span;
}

SystemKind SystemParams::kind() const {
  if (mechanism.kind == MechanismKind::RigidLink) return SystemKind::RigidLink;
  return payload.kind == PayloadKind::PointMass ? SystemKind::SingleCable : SystemKind::MultiCable;
}

std::vector<std::size_t> CableStatus::taut_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < taut.size(); ++k)
    if (taut[k]) out.push_back(k);
  return out;
}

std::vector<std::size_t> CableStatus::slack_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < taut.size(); ++k)
    if (!taut[k]) out.push_back(k);
  return out;
}

std::size_t CableStatus::taut_count() const {
  std::size_t n = 0;
  for (bool t : taut) n += t ? 1 : 0;
  return n;
}

BodyState advance(const BodyState& x, const BodyRate& r, double h) {
  BodyState out;
  out.position = x.position + h * r.velocity;
  out.velocity = x.velocity + h * r.acceleration;
  out.attitude = from_wxyz(to_wxyz(x.attitude) + h * r.attitude_rate);
  out.angular_velocity = x.angular_velocity + h * r.angular_acceleration;
  return out;
}

SystemState advance(const SystemState& x, const SystemRate& r, double h) {
  assert(x.robots.size() == r.robots.size());
  SystemState out;
  out.payload = advance(x.payload, r.payload, h);
  out.robots.reserve(x.robots.size());
  for (std::size_t k = 0; k < x.robots.size(); ++k)
    out.robots.push_back(advance(x.robots[k], r.robots[k], h));
  return out;
}

BodyRate operator+(const BodyRate& a, const BodyRate& b) {
  return {a.velocity + b.velocity, a.acceleration + b.acceleration,
          a.attitude_rate + b.attitude_rate, a.angular_acceleration + b.angular_acceleration};
}

BodyRate operator*(double s, const BodyRate& r) {
  return {s * r.velocity, s * r.acceleration, s * r.attitude_rate, s * r.angular_acceleration};
}

SystemRate operator+(const SystemRate& a, const SystemRate& b) {
  assert(a.robots.size() == b.robots.size());
  SystemRate out;
  out.payload = a.payload + b.payload;
  out.robots.reserve(a.robots.size());
  for (std::size_t k = 0; k < a.robots.size(); ++k) out.robots.push_back(a.robots[k] + b.robots[k]);
  return out;
}

SystemRate operator*(double s, const SystemRate& r) {
  SystemRate out;
  out.payload = s * r.payload;
  out.robots.reserve(r.robots.size());
  for (const auto& rr : r.robots) out.robots.push_back(s * rr);
  return out;
}

void normalize_attitudes(SystemState& x) {
  x.payload.attitude.normalize();
  for (auto& r : x.robots) r.attitude.normalize();
}

}  // namespace airlift
