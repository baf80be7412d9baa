#pragma once

// Fixed-step RK4 propagation, guard-event localization and the simulation
// loop (planner -> controller -> saturation -> RK4 -> guards -> resets).

#include <cmath>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "airlift/errors.hpp"
#include "airlift/hybrid.hpp"
#include "airlift/scenario.hpp"

namespace airlift::integrator {

inline double advance(double x, double r, double h) { return x + h * r; }

/// Classical four-stage step for any state type with advance(x, r, h) and
/// rate arithmetic (r + r, s * r).
template <class State, class F>
State rk4(const F& f, const State& x, double h) {
  using airlift::advance;
  using integrator::advance;
  const auto k1 = f(x);
  const auto k2 = f(advance(x, k1, 0.5 * h));
  const auto k3 = f(advance(x, k2, 0.5 * h));
  const auto k4 = f(advance(x, k3, h));
  return advance(x, (1.0 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), h);
}

using SystemDeriv = std::function<SystemRate(const SystemState&)>;
using BodyDeriv = std::function<BodyRate(const BodyState&)>;

/// One RK4 step with inputs held constant (captured by f), followed by
/// quaternion renormalization. `renormalization`, when given, receives the
/// largest | |q| - 1 | removed. Throws NumericError naming the block when a
/// stage derivative is not finite.
SystemState rk4_step(const SystemDeriv& f, const SystemState& x, double dt,
                     double* renormalization = nullptr);
BodyState rk4_step(const BodyDeriv& f, const BodyState& x, double dt,
                   double* renormalization = nullptr);

template <class State>
struct EventLocation {
  double time = 0.0;  // offset from the start of the step
  State state;
};

/// Bisection for the first time in (0, dt] at which guard(step(x, tau))
/// becomes non-negative. The guard must be negative at x and non-negative at
/// the end of the step. Returns the state at the upper end of the final
/// window, i.e. on the non-negative side.
template <class State, class Step, class Guard>
EventLocation<State> locate_event(const Step& step, const State& x, double dt, const Guard& guard,
                                  double tol_t = 1e-9) {
  const double g0 = guard(x);
  State hi_state = step(x, dt);
  const double g1 = guard(hi_state);
  if (!(g0 < 0.0 && g1 >= 0.0)) {
    throw NumericError("locate_event: guard does not change sign over the step (g0 = " +
                       std::to_string(g0) + ", g1 = " + std::to_string(g1) + ")");
  }
  double lo = 0.0;
  double hi = dt;
  while (hi - lo > tol_t) {
    const double mid = 0.5 * (lo + hi);
    State s = step(x, mid);
    if (guard(s) >= 0.0) {
      hi = mid;
      hi_state = std::move(s);
    } else {
      lo = mid;
    }
  }
  return {hi, std::move(hi_state)};
}

/// One logged sample. Inputs are those computed from (the noisy view of)
/// this state and applied over the following step.
struct LogRow {
  double t = 0.0;
  SystemState state;
  ControlInput input;
  std::vector<bool> taut;
  Vec3 desired_position = Vec3::Zero();
  Quat desired_attitude = Quat::Identity();
  bool event = false;
  bool saturated = false;
  std::vector<double> tensions;
};

/// States on both sides of a collision reset.
struct ResetRecord {
  double time = 0.0;
  SystemState before;
  SystemState after;
  hybrid::GuardEvent event;
};

struct SimResult {
  std::vector<LogRow> rows;
  std::vector<hybrid::GuardEvent> events;
  std::vector<ResetRecord> resets;
  std::vector<std::string> warnings;
  /// Largest | d_k - l_k | over taut cables at logged rows.
  double max_geometry_residual = 0.0;
  /// Largest | |q| - 1 | over logged rows.
  double max_quaternion_error = 0.0;
  /// Whether the payload carries orientation (rigid body).
  bool payload_has_attitude = false;
  /// Set when the run aborted; rows hold the log up to the failure.
  std::exception_ptr error;

  void rethrow_if_failed() const {
    if (error) std::rethrow_exception(error);
  }
};

/// Runs the scenario. Errors from components abort the run; the partial log
/// is kept and the exception stored in `error`.
SimResult simulate(const ScenarioSpec& scenario);

/// Moves every taut robot back onto its cable sphere when the residual
/// exceeds `threshold`. Returns the largest residual found.
double correct_drift(SystemState& x, const SystemParams& params, const CableStatus& status,
                     double threshold = 1e-6);

/// Root mean square of | x_L - x_L,des | over the rows.
double position_rmse(const std::vector<LogRow>& rows);
/// Root mean square of the payload attitude error angle (rad).
double attitude_rmse(const std::vector<LogRow>& rows);

}  // namespace airlift::integrator
