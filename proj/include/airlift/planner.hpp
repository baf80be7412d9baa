#pragma once

// Desired payload trajectories: circles, minimum k-th derivative polynomial
// splines through waypoints, and periodic single-axis attitude profiles.

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "airlift/math.hpp"

namespace airlift::planner {

/// Desired payload motion consumed by the controllers.
struct FlatOutputs {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  Vec3 jerk = Vec3::Zero();
  Vec3 snap = Vec3::Zero();
  Quat attitude = Quat::Identity();
  Vec3 angular_velocity = Vec3::Zero();      // body frame
  Vec3 angular_acceleration = Vec3::Zero();  // body frame
  double yaw = 0.0;       // robot heading
  double yaw_rate = 0.0;
};

/// Horizontal circle of radius r and period T at height h, centred on the
/// z axis, starting at (r, 0, h).
FlatOutputs circle_traj(double t, double radius, double period, double height);

/// Piecewise polynomial, one polynomial per segment and axis, written in
/// local time tau = t - t_{i-1}.
struct PolySpline {
  std::vector<double> knots;  // t_0 < t_1 < ... < t_m
  int derivative_order = 4;   // k
  int poly_order = 7;         // N
  /// coeffs[i].col(d)[n] multiplies tau^n on axis d of segment i.
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> coeffs;
  /// Integral of |x^(k)|^2 over the whole spline.
  double cost = 0.0;
  /// max |K z - rhs| of the solved optimality system.
  double kkt_residual = 0.0;

  std::size_t segment_count() const { return coeffs.size(); }
  double start_time() const { return knots.front(); }
  double end_time() const { return knots.back(); }

  /// order-th derivative at t. Beyond the last knot the final waypoint is
  /// held (all derivatives zero). Throws std::out_of_range for t < t_0.
  Vec3 derivative(double t, int order) const;
  /// Derivative evaluated on a given segment at local time tau, without
  /// clamping. Used to compare one-sided limits at knots.
  Vec3 segment_derivative(std::size_t segment, double tau, int order) const;
};

/// Optional non-zero boundary derivatives 1..k-1 at the first and last knot.
struct BoundaryDerivatives {
  std::vector<Vec3> start;
  std::vector<Vec3> end;
};

/// Minimum k-th derivative spline through `waypoints` at `times`.
/// poly_order < 0 selects 2k - 1. Throws ConfigError for malformed input
/// (non-increasing times, count mismatch) and NumericError when the problem
/// is infeasible (N < 2k - 1) or the optimality system is ill conditioned.
PolySpline solve_min_deriv(const std::vector<Vec3>& waypoints, const std::vector<double>& times,
                           int k, int poly_order = -1, const BoundaryDerivatives& boundary = {});

/// Position and derivatives up to snap from the spline.
FlatOutputs eval_spline(const PolySpline& spline, double t);

enum class Axis { Roll, Pitch, Yaw };

struct AttitudeProfile {
  Axis axis = Axis::Yaw;
  double amplitude = 0.0;  // rad
  double period = 1.0;     // s

  bool operator==(const AttitudeProfile&) const = default;
};

struct AttitudeSample {
  Quat attitude = Quat::Identity();
  Vec3 angular_velocity = Vec3::Zero();
  Vec3 angular_acceleration = Vec3::Zero();
};

/// angle(t) = A sin(2 pi t / P) about a single body axis.
AttitudeSample attitude_traj(double t, const AttitudeProfile& profile);

std::string axis_name(Axis axis);
Axis parse_axis(const std::string& name);

/// Declarative trajectory choice as it appears in scenario files.
struct TrajectorySpec {
  enum class Kind { Hover, Circle, MinDeriv };
  Kind kind = Kind::Hover;
  Vec3 hover_position = Vec3::Zero();
  double radius = 1.0;
  double period = 10.0;
  double height = 1.0;
  std::vector<double> times;
  std::vector<Vec3> waypoints;
  int derivative_order = 4;
  int poly_order = -1;
  std::optional<AttitudeProfile> attitude;

  bool operator==(const TrajectorySpec&) const = default;
};

/// Evaluates a TrajectorySpec; a spline is solved once on construction.
class Trajectory {
 public:
  explicit Trajectory(TrajectorySpec spec);
  FlatOutputs operator()(double t) const;
  const TrajectorySpec& spec() const { return spec_; }

 private:
  TrajectorySpec spec_;
  std::optional<PolySpline> spline_;
};

/// Waypoint list file: times, positions, optional k / order / attitude.
struct WaypointFile {
  std::vector<double> times;
  std::vector<Vec3> positions;
  std::optional<int> derivative_order;
  std::optional<int> poly_order;
  std::optional<AttitudeProfile> attitude;
};

WaypointFile load_waypoints(const std::filesystem::path& path);

/// Plain-text coefficient file; see README for the schema.
void write_spline(const PolySpline& spline, const std::filesystem::path& path);
PolySpline read_spline(const std::filesystem::path& path);

}  // namespace airlift::planner
