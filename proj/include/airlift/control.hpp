#pragma once

// Geometric controllers for the three mechanism classes, plus the wrench
// distribution steps they rely on.
//
// Error conventions: e_x = x_des - x, e_v = v_des - v,
// e_R = 1/2 (R^T R_des - R_des^T R)^v, e_Omega = R^T R_des Omega_des - Omega.
// With these signs every feedback term enters with a positive gain.

#include <span>
#include <vector>

#include "airlift/dynamics.hpp"
#include "airlift/planner.hpp"
#include "airlift/types.hpp"

namespace airlift::control {

struct ControllerGains {
  Vec3 kp = Vec3::Zero();
  Vec3 kd = Vec3::Zero();
  Vec3 ki = Vec3::Zero();
  Vec3 kR = Vec3::Zero();        // robot attitude
  Vec3 kOmega = Vec3::Zero();    // robot angular rate
  Vec3 kXi = Vec3::Zero();       // cable direction
  Vec3 kw = Vec3::Zero();        // cable angular rate
  Vec3 kRL = Vec3::Zero();       // payload or structure attitude
  Vec3 kOmegaL = Vec3::Zero();   // payload or structure angular rate
  Vec3 robot_kp = Vec3::Zero();  // slack-mode robot position
  Vec3 robot_kd = Vec3::Zero();  // slack-mode robot velocity

  bool operator==(const ControllerGains&) const = default;
};

struct ControllerOptions {
  /// Per-axis bound on |integral of e_x|.
  double integral_limit = 0.5;
  /// Use filtered numerical derivatives of the desired cable directions.
  bool cable_feedforward = true;
  /// Time constant of the first-order filter on those derivatives, s.
  double feedforward_filter = 0.02;

  bool operator==(const ControllerOptions&) const = default;
};

/// e_R = 1/2 (R^T R_des - R_des^T R)^v.
Vec3 attitude_error(const Mat3& R, const Mat3& R_des);

/// Desired cable direction rate and acceleration fed to the cable laws.
struct CableReference {
  Vec3 xi_dot = Vec3::Zero();
  Vec3 xi_ddot = Vec3::Zero();
};

/// Robot attitude loop: thrust f = force . R e3, desired attitude built from
/// force direction and yaw, desired body rate zero.
RobotInput robot_attitude_control(const BodyState& robot, const Vec3& force, double yaw,
                                  const ControllerGains& gains, const QuadrotorParams& quad);

struct SingleCableOutput {
  RobotInput input;
  Vec3 force_des = Vec3::Zero();  // F_des on the payload
  Vec3 xi_des = Vec3::Zero();
  Vec3 robot_force = Vec3::Zero();  // F, force the robot should produce
};

/// Taut-mode law for one robot carrying a point mass. `integral` is the
/// running integral of e_x. Throws NumericError when F_des vanishes.
SingleCableOutput single_cable_control(const SystemState& x, const planner::FlatOutputs& des,
                                       const ControllerGains& gains, const SystemParams& params,
                                       const Vec3& integral = Vec3::Zero(),
                                       const CableReference& ref = {});

/// Robot position controller used while its cable is slack: tracks
/// target position/velocity/acceleration with robot_kp / robot_kd.
RobotInput slack_robot_control(const BodyState& robot, const Vec3& target,
                               const Vec3& target_velocity, const Vec3& target_acceleration,
                               double yaw, const ControllerGains& gains,
                               const QuadrotorParams& quad);

/// Per-cable desired tension forces on the payload, world frame.
using TensionCommand = std::vector<Vec3>;

/// mu = diag(R_L) P^T (P P^T)^-1 [R_L^T F_des; M_des]. Throws NumericError
/// naming the rank when P P^T is singular.
TensionCommand tension_distribution(const Vec3& force, const Vec3& moment, const Mat3& R_L,
                                    std::span<const Vec3> attach_points);

struct MultiCableOutput {
  ControlInput input;
  Vec3 force_des = Vec3::Zero();
  Vec3 moment_des = Vec3::Zero();
  TensionCommand tensions;
  std::vector<Vec3> xi_des;
};

/// Cooperative cable law. Taut robots use the cable direction law; slack
/// robots hover at x_L,des - l_k xi_k,des. For a point-mass payload the
/// desired force is shared equally and no moment is commanded.
MultiCableOutput multi_cable_control(const SystemState& x, const planner::FlatOutputs& des,
                                     const ControllerGains& gains, const SystemParams& params,
                                     const CableStatus& status,
                                     const Vec3& integral = Vec3::Zero(),
                                     std::span<const CableReference> refs = {});

/// Desired structure pose and the thrust/moment computed for it.
struct StructureCommand {
  dynamics::Wrench wrench;
  Mat3 attitude_des = Mat3::Identity();
  Vec3 position_des = Vec3::Zero();
};

/// Rigid-link structure law. The desired payload trajectory is converted to
/// the structure center of mass; heading follows the desired payload yaw.
StructureCommand rigid_link_control(const StructureState& s, const planner::FlatOutputs& des,
                                    const ControllerGains& gains,
                                    const dynamics::StructureParams& structure,
                                    const Vec3& integral = Vec3::Zero());

struct Allocation {
  ControlInput input;
  bool saturated = false;
};

/// Minimum-norm solution of sum_k A_k [f_k; M_k] = [f_c; M_c] followed by
/// clamping to each robot's limits. Throws NumericError when the stacked map
/// is rank deficient.
Allocation allocate(const dynamics::Wrench& wrench, std::span<const WrenchMap> maps,
                    std::span<const QuadrotorParams> robots);

/// Clamps thrust to [0, f_max] and |M| to the moment bound. Returns true
/// when anything was clipped.
bool saturate(RobotInput& u, const QuadrotorParams& quad);
bool saturate(ControlInput& u, std::span<const QuadrotorParams> robots);

/// Stateful wrapper owned by one simulation: integral accumulator with
/// anti-windup, and filtered derivatives of the desired cable directions.
class Controller {
 public:
  Controller(const SystemParams& params, ControllerGains gains, ControllerOptions options,
             double dt);

  /// Cable systems (single or multi).
  ControlInput compute(const SystemState& x, const CableStatus& status,
                       const planner::FlatOutputs& des);
  /// Rigid-link systems: structure wrench, then allocation.
  Allocation compute_structure(const StructureState& s, const planner::FlatOutputs& des);

  /// Clears the integral; called on every mode switch.
  void reset_integral() { integral_.setZero(); }
  const Vec3& integral() const { return integral_; }

 private:
  void accumulate(const Vec3& error);
  void update_references(const std::vector<Vec3>& xi_des);

  SystemParams params_;
  ControllerGains gains_;
  ControllerOptions options_;
  double dt_;
  Vec3 integral_ = Vec3::Zero();
  std::vector<Vec3> prev_xi_des_;
  std::vector<CableReference> refs_;
  std::vector<Vec3> prev_xi_dot_;
  bool have_prev_ = false;
  dynamics::StructureParams structure_;
};

}  // namespace airlift::control
