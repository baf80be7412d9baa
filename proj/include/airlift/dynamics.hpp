#pragma once

// Continuous-time equations of motion for the three mechanism classes:
// a point-mass payload on one cable, a rigid payload on n cables (any subset
// taut), and n robots rigidly linked to a payload.
//
// Cable direction xi_k is the unit vector from robot k to its attach point
// p_k = x_L + R_L rho_k. A taut cable keeps |x_k - p_k| = l_k.

#include <span>
#include <vector>

#include "airlift/types.hpp"

namespace airlift::dynamics {

/// Default tolerance on | |x_k - p_k| - l_k | accepted by the taut models.
inline constexpr double kTautGeometryTolerance = 1e-4;

/// Per-cable kinematics derived from the state.
struct CableKinematics {
  Vec3 attach_point;     // p_k, world
  Vec3 attach_velocity;  // p_k dot, world
  double distance = 0;   // |x_k - p_k|
  Vec3 direction;        // xi_k, robot -> attach point
  Vec3 direction_rate;   // (p_k dot - v_k) / l_k
};

CableKinematics cable_kinematics(const SystemState& x, const SystemParams& params, std::size_t k);

/// Payload translational + rotational coupling matrix over the cables in
/// `cables`:
///   [ m_L I + sum m P            -sum m P R rho^      ]
///   [ sum m rho^ R^T P     J_L - sum m rho^ R^T P R rho^ ]
/// with P = xi xi^T. For a point-mass payload only the upper-left 3x3 block
/// is meaningful.
Mat6 payload_coupling_matrix(const SystemState& x, const SystemParams& params,
                             std::span<const std::size_t> cables);

/// Point-mass payload on one taut cable. Throws NumericError when the cable
/// length constraint is violated by more than `geometry_tol`.
SystemRate single_taut_deriv(const SystemState& x, const ControlInput& u, const SystemParams& params,
                             double geometry_tol = kTautGeometryTolerance);

/// Point-mass payload and robot evolving independently (cable slack).
SystemRate single_slack_deriv(const SystemState& x, const ControlInput& u, const SystemParams& params);

/// Payload on n cables with the given taut/slack status. The payload linear
/// and angular accelerations are solved from one 6x6 system; taut robots
/// follow from the sphere constraint, slack robots fly freely.
SystemRate multi_cable_deriv(const SystemState& x, const ControlInput& u, const SystemParams& params,
                             const CableStatus& status,
                             double geometry_tol = kTautGeometryTolerance);

/// Dispatches to the single or multi cable models.
SystemRate cable_system_deriv(const SystemState& x, const ControlInput& u,
                              const SystemParams& params, const CableStatus& status,
                              double geometry_tol = kTautGeometryTolerance);

/// Cable tensions (N, positive when pulling) implied by the dynamics. Slack
/// cables report 0. A negative value means the taut model is compressing
/// the cable.
std::vector<double> cable_tensions(const SystemState& x, const ControlInput& u,
                                   const SystemParams& params, const CableStatus& status);

// ---------------------------------------------------------------------------
// Rigid links
// ---------------------------------------------------------------------------

struct Wrench {
  double thrust = 0.0;
  Vec3 moment = Vec3::Zero();
};

/// Mass properties and member layout of a rigid-link structure. Offsets are
/// relative to the combined center of mass, in the structure frame (which is
/// aligned with the payload frame and every robot frame).
struct StructureParams {
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();
  Vec3 payload_offset = Vec3::Zero();
  std::vector<Vec3> robot_offsets;
  std::vector<WrenchMap> wrench_maps;
};

/// Thrust along structure z at `offset` contributes offset x (f e3) to the
/// moment; the robot moment passes through unchanged.
WrenchMap default_wrench_map(const Vec3& offset);

StructureParams make_structure(const SystemParams& params);

/// [f_c; M_c] = sum_k A_k [f_k; M_k].
Wrench wrench_map(std::span<const WrenchMap> maps, const ControlInput& u);

BodyRate rigid_structure_deriv(const StructureState& s, const ControlInput& u,
                               const StructureParams& structure);

/// Member states from the structure state by rigid-body kinematics. Returns
/// the payload followed by every robot.
SystemState structure_to_members(const StructureState& s, const StructureParams& structure);

/// Inverse of structure_to_members using the payload state only.
StructureState structure_from_payload(const BodyState& payload, const StructureParams& structure);

/// Total linear momentum and kinetic + gravitational energy of a cable system.
Vec3 linear_momentum(const SystemState& x, const SystemParams& params);
double kinetic_energy(const SystemState& x, const SystemParams& params);
double total_energy(const SystemState& x, const SystemParams& params);

}  // namespace airlift::dynamics
