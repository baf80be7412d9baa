#pragma once

// Guards and reset maps of the cable hybrid automaton.
//
// A cable goes slack when the robot comes closer to its attach point than
// the cable length, and becomes taut again when the distance reaches the
// length while still growing. The slack -> taut transition is a perfectly
// inelastic collision along the cable; taut -> slack is an identity map.

#include <optional>
#include <span>
#include <vector>

#include "airlift/types.hpp"

namespace airlift::hybrid {

struct GuardTolerances {
  /// A cable counts as having reached its length when d >= l - taut.
  double taut = 1e-9;
  /// A taut cable is declared slack once d < l - slack.
  double slack = 1e-6;
  /// Accepted |d - l| when applying a reset.
  double reset_geometry = 1e-6;
};

struct CableMetrics {
  double distance = 0.0;  // d_k = |x_k - p_k|
  double rate = 0.0;      // d_k dot
};

/// Distance between robot k and its attach point and its rate of change,
/// including the payload's rotation. Throws NumericError when d_k = 0.
CableMetrics cable_metrics(const SystemState& x, const SystemParams& params, std::size_t k);

struct GuardEvent {
  double time = 0.0;
  std::vector<std::size_t> taut_to_slack;    // going slack, identity map
  std::vector<std::size_t> slack_to_taut;    // re-establishing tension
  std::vector<std::size_t> taut_stretching;  // taut with d_dot > 0, join the collision
  std::size_t taut_before = 0;
  std::size_t taut_after = 0;

  /// Cables taking part in the inelastic collision.
  std::vector<std::size_t> colliding() const;
  bool has_collision() const { return !slack_to_taut.empty(); }
  CableStatus apply(const CableStatus& status) const;
};

/// Evaluates the guards at x. `tensions`, when given, holds the tension of
/// every cable under the current taut model; a taut cable whose tension has
/// turned compressive is reported as going slack even before the distance
/// guard fires. Taut cables that stretch are reported only alongside a
/// collision. Returns nullopt when no cable changes mode.
std::optional<GuardEvent> detect_guard(const SystemState& x, const CableStatus& status,
                                       const SystemParams& params,
                                       const GuardTolerances& tol = {},
                                       std::span<const double> tensions = {});

/// Single robot, point-mass payload: along-cable velocities of both bodies
/// take the common momentum-weighted value, orthogonal parts are kept.
SystemState single_reset(const SystemState& x, const SystemParams& params,
                         const GuardTolerances& tol = {});

struct CollisionSystem {
  Mat6 matrix = Mat6::Zero();  // J bar
  Vec6 rhs = Vec6::Zero();     // b
};

/// Impulse-momentum system J [x_L dot+; Omega_L+] = b over the colliding
/// cables.
CollisionSystem assemble_collision_system(const SystemState& x, const SystemParams& params,
                                          std::span<const std::size_t> colliding);

/// Post-collision payload twist [x_L dot+; Omega_L+]. For a point-mass
/// payload the angular part is zero.
Vec6 solve_collision_system(const CollisionSystem& sys, bool rigid_payload);

/// Applies the multi-cable reset for `event`: payload twist from the
/// collision system, colliding robots get the attach-point velocity along
/// their cable and keep their orthogonal velocity. Positions and attitudes
/// are untouched.
SystemState multi_reset(const SystemState& x, const SystemParams& params, const GuardEvent& event);

}  // namespace airlift::hybrid
