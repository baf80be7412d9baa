#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "airlift/math.hpp"

namespace airlift {

// ---------------------------------------------------------------------------
// Physical parameters
// ---------------------------------------------------------------------------

struct QuadrotorParams {
  std::string name;
  double mass = 0.0;         // kg
  double arm_length = 0.0;   // m
  Vec3 inertia_diag = Vec3::Zero();  // kg m^2
  double motor_speed_min = 0.0;  // RPM
  double motor_speed_max = 0.0;  // RPM
  /// Per-rotor thrust per squared motor speed, N / RPM^2. Used only to
  /// derive the actuator limits.
  double thrust_coefficient = 0.0;

  Mat3 inertia() const { return inertia_diag.asDiagonal(); }
  /// Four rotors at full speed.
  double max_thrust() const;
  /// Bound on |M|: one arm pair driven from min to max speed.
  double max_moment() const;

  bool operator==(const QuadrotorParams&) const = default;
};

enum class PayloadKind { PointMass, RigidBody };

struct PayloadParams {
  PayloadKind kind = PayloadKind::PointMass;
  double mass = 0.0;               // kg
  Mat3 inertia = Mat3::Zero();     // kg m^2, payload frame; rigid body only
  std::vector<Vec3> attach_points; // payload frame

  bool operator==(const PayloadParams&) const = default;
};

enum class MechanismKind { Cable, RigidLink };

/// 4x4 map from one robot's [f; M] to its contribution to the structure
/// wrench [f_c; M_c].
using WrenchMap = Eigen::Matrix4d;

struct MechanismSpec {
  MechanismKind kind = MechanismKind::Cable;
  std::vector<double> cable_lengths;     // cable only
  std::vector<WrenchMap> wrench_maps;    // rigid link only; empty = default

  bool operator==(const MechanismSpec&) const = default;
};

enum class SystemKind { SingleCable, MultiCable, RigidLink };

struct SystemParams {
  PayloadParams payload;
  std::vector<QuadrotorParams> robots;
  MechanismSpec mechanism;

  SystemKind kind() const;
  std::size_t robot_count() const { return robots.size(); }

  bool operator==(const SystemParams&) const = default;
};

// ---------------------------------------------------------------------------
// States and inputs
// ---------------------------------------------------------------------------

/// Pose and twist of one rigid body. The angular velocity is body frame.
struct BodyState {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Quat attitude = Quat::Identity();
  Vec3 angular_velocity = Vec3::Zero();

  Mat3 rotation() const { return attitude.normalized().toRotationMatrix(); }
  bool operator==(const BodyState& o) const {
    return position == o.position && velocity == o.velocity &&
           attitude.coeffs() == o.attitude.coeffs() && angular_velocity == o.angular_velocity;
  }
};

/// Time derivative of a BodyState. The attitude rate is w-first.
struct BodyRate {
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec4 attitude_rate = Vec4::Zero();
  Vec3 angular_acceleration = Vec3::Zero();
};

/// Payload plus every robot. For a point-mass payload the payload attitude
/// stays identity and its angular velocity zero.
struct SystemState {
  BodyState payload;
  std::vector<BodyState> robots;

  bool operator==(const SystemState&) const = default;
};

struct SystemRate {
  BodyRate payload;
  std::vector<BodyRate> robots;
};

/// Rigid-link mechanisms are simulated as a single body located at the
/// combined center of mass.
using StructureState = BodyState;

struct RobotInput {
  double thrust = 0.0;          // N, along body z
  Vec3 moment = Vec3::Zero();   // N m, body frame
};

struct ControlInput {
  std::vector<RobotInput> robots;
};

/// Per-cable taut flags.
struct CableStatus {
  std::vector<bool> taut;

  static CableStatus all_taut(std::size_t n) { return {std::vector<bool>(n, true)}; }
  static CableStatus all_slack(std::size_t n) { return {std::vector<bool>(n, false)}; }

  std::vector<std::size_t> taut_indices() const;
  std::vector<std::size_t> slack_indices() const;
  std::size_t taut_count() const;

  bool operator==(const CableStatus&) const = default;
};

// State arithmetic used by the integrator. advance() adds h * rate without
// renormalizing quaternions.
BodyState advance(const BodyState& x, const BodyRate& r, double h);
SystemState advance(const SystemState& x, const SystemRate& r, double h);
BodyRate operator+(const BodyRate& a, const BodyRate& b);
BodyRate operator*(double s, const BodyRate& r);
SystemRate operator+(const SystemRate& a, const SystemRate& b);
SystemRate operator*(double s, const SystemRate& r);

void normalize_attitudes(SystemState& x);

}  // namespace airlift
