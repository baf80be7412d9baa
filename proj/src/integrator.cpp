#include "airlift/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "airlift/control.hpp"
#include "airlift/dynamics.hpp"
#include "airlift/noise.hpp"

namespace airlift::integrator {

namespace {

void require_finite(const BodyRate& r, const std::string& who) {
  const char* block = nullptr;
  if (!r.velocity.allFinite()) block = "velocity";
  else if (!r.acceleration.allFinite()) block = "acceleration";
  else if (!r.attitude_rate.allFinite()) block = "attitude rate";
  else if (!r.angular_acceleration.allFinite()) block = "angular acceleration";
  if (block) throw NumericError("non-finite derivative in " + who + " " + block);
}

void require_finite(const SystemRate& r) {
  require_finite(r.payload, "payload");
  for (std::size_t k = 0; k < r.robots.size(); ++k) {
    require_finite(r.robots[k], "robot " + std::to_string(k));
  }
}

double renormalize(Quat& q) {
  const double n = q.norm();
  q.coeffs() /= n;
  return std::abs(n - 1.0);
}

double quaternion_error(const SystemState& x) {
  double e = std::abs(x.payload.attitude.norm() - 1.0);
  for (const BodyState& r : x.robots) e = std::max(e, std::abs(r.attitude.norm() - 1.0));
  return e;
}

double geometry_residual(const SystemState& x, const SystemParams& p, const CableStatus& s) {
  double worst = 0.0;
  for (std::size_t k : s.taut_indices()) {
    const double d = hybrid::cable_metrics(x, p, k).distance;
    worst = std::max(worst, std::abs(d - p.mechanism.cable_lengths[k]));
  }
  return worst;
}

std::vector<double> zero_tensions(std::size_t n) { return std::vector<double>(n, 0.0); }

class CableSimulation {
 public:
  CableSimulation(const ScenarioSpec& sc, SimResult& out)
      : sc_(sc),
        p_(sc.system),
        out_(out),
        traj_(sc.trajectory),
        ctrl_(p_, sc.gains, sc.controller,
              sc.simulation.dt * std::max(1, sc.simulation.control_decimation)),
        rng_(sc.noise.seed),
        x_(sc.initial_state),
        status_(sc.initial_status) {}

  void run() {
    const SimulationSettings& sim = sc_.simulation;
    const long steps = std::lround(sim.duration / sim.dt);
    const int decimation = std::max(1, sim.control_decimation);
    const int drift_interval = std::max(1, sim.drift_check_interval);
    for (long n = 0;; ++n) {
      const double t = static_cast<double>(n) * sim.dt;
      des_ = traj_(t);
      if (n % decimation == 0) update_control();
      release_compressed_cables(t);
      log(t, pending_event_);
      pending_event_ = false;
      if (n == steps) break;
      step(t, sim.dt);
      if ((n + 1) % drift_interval == 0) correct_drift(x_, p_, status_);
    }
  }

 private:
  SystemRate deriv(const SystemState& s) const {
    return dynamics::cable_system_deriv(s, u_, p_, status_);
  }

  SystemState advance_state(const SystemState& s, double h) {
    double renorm = 0.0;
    SystemState next = rk4_step([this](const SystemState& y) { return deriv(y); }, s, h, &renorm);
    if (renorm > 1e-6 && out_.warnings.size() < 32) {
      std::ostringstream os;
      os << "quaternion renormalization removed " << renorm << " at t = " << t_step_;
      out_.warnings.push_back(os.str());
    }
    return next;
  }

  void update_control() {
    const SystemState view = inject_noise(x_, sc_.noise, rng_);
    u_ = ctrl_.compute(view, status_, des_);
    saturated_ = control::saturate(u_, p_.robots);
  }

  // A taut cable whose tension turns compressive under the current input
  // goes slack before the step is integrated.
  void release_compressed_cables(double t) {
    if (status_.taut_count() == 0) return;
    const auto tensions = dynamics::cable_tensions(x_, u_, p_, status_);
    auto ev = hybrid::detect_guard(x_, status_, p_, {}, tensions);
    if (!ev || ev->has_collision()) return;
    ev->time = t;
    status_ = ev->apply(status_);
    out_.events.push_back(*ev);
    ctrl_.reset_integral();
    pending_event_ = true;
  }

  void step(double t, double dt) {
    double remaining = dt;
    double now = t;
    t_step_ = t;
    for (int guard_hits = 0; remaining > 0.0; ++guard_hits) {
      SystemState next = advance_state(x_, remaining);
      const auto tensions = dynamics::cable_tensions(next, u_, p_, status_);
      auto ev = hybrid::detect_guard(next, status_, p_, {}, tensions);
      if (!ev || guard_hits >= 16) {
        x_ = std::move(next);
        return;
      }
      if (!ev->has_collision()) {
        x_ = std::move(next);
        ev->time = now + remaining;
        status_ = ev->apply(status_);
        out_.events.push_back(*ev);
        ctrl_.reset_integral();
        pending_event_ = true;
        return;
      }

      const auto slack = status_.slack_indices();
      auto gap = [&](const SystemState& s) {
        double g = -std::numeric_limits<double>::infinity();
        for (std::size_t k : slack) {
          g = std::max(g, hybrid::cable_metrics(s, p_, k).distance - p_.mechanism.cable_lengths[k]);
        }
        return g;
      };
      double te = 0.0;
      SystemState at_event = x_;
      if (gap(x_) < 0.0) {
        auto loc = locate_event(
            [this](const SystemState& s, double h) { return advance_state(s, h); }, x_, remaining,
            gap, 1e-9);
        te = loc.time;
        at_event = std::move(loc.state);
      }
      const auto at_tensions = dynamics::cable_tensions(at_event, u_, p_, status_);
      auto exact = hybrid::detect_guard(at_event, status_, p_, {}, at_tensions);
      hybrid::GuardEvent event = (exact && exact->has_collision()) ? *exact : *ev;
      event.time = now + te;

      if (p_.kind() == SystemKind::SingleCable) {
        x_ = hybrid::single_reset(at_event, p_);
      } else {
        x_ = hybrid::multi_reset(at_event, p_, event);
      }
      out_.resets.push_back({event.time, at_event, x_, event});
      status_ = event.apply(status_);
      correct_drift(x_, p_, status_);
      out_.events.push_back(event);
      ctrl_.reset_integral();

      now += te;
      remaining -= te;
      log(now, true);
    }
  }

  void log(double t, bool event) {
    LogRow row;
    row.t = t;
    row.state = x_;
    row.input = u_;
    row.taut = status_.taut;
    row.desired_position = des_.position;
    row.desired_attitude = des_.attitude;
    row.event = event;
    row.saturated = saturated_;
    row.tensions = status_.taut_count() > 0 ? dynamics::cable_tensions(x_, u_, p_, status_)
                                            : zero_tensions(p_.robot_count());
    out_.max_geometry_residual =
        std::max(out_.max_geometry_residual, geometry_residual(x_, p_, status_));
    out_.max_quaternion_error = std::max(out_.max_quaternion_error, quaternion_error(x_));
    out_.rows.push_back(std::move(row));
  }

  const ScenarioSpec& sc_;
  const SystemParams& p_;
  SimResult& out_;
  planner::Trajectory traj_;
  control::Controller ctrl_;
  NoiseGenerator rng_;
  SystemState x_;
  CableStatus status_;
  ControlInput u_;
  planner::FlatOutputs des_;
  bool saturated_ = false;
  bool pending_event_ = false;
  double t_step_ = 0.0;
};

void simulate_rigid(const ScenarioSpec& sc, SimResult& out) {
  const SystemParams& p = sc.system;
  const dynamics::StructureParams structure = dynamics::make_structure(p);
  const planner::Trajectory traj(sc.trajectory);
  const SimulationSettings& sim = sc.simulation;
  const int decimation = std::max(1, sim.control_decimation);
  control::Controller ctrl(p, sc.gains, sc.controller, sim.dt * decimation);
  NoiseGenerator rng(sc.noise.seed);

  StructureState s = dynamics::structure_from_payload(sc.initial_state.payload, structure);
  ControlInput u;
  bool saturated = false;
  const long steps = std::lround(sim.duration / sim.dt);
  const std::vector<bool> taut(p.robot_count(), true);
  for (long n = 0;; ++n) {
    const double t = static_cast<double>(n) * sim.dt;
    const planner::FlatOutputs des = traj(t);
    if (n % decimation == 0) {
      const StructureState view =
          sc.noise.enabled() ? inject_noise(s, sc.noise, rng) : s;
      const control::Allocation a = ctrl.compute_structure(view, des);
      u = a.input;
      saturated = a.saturated;
    }
    LogRow row;
    row.t = t;
    row.state = dynamics::structure_to_members(s, structure);
    row.input = u;
    row.taut = taut;
    row.desired_position = des.position;
    row.desired_attitude = des.attitude;
    row.saturated = saturated;
    row.tensions = zero_tensions(p.robot_count());
    out.max_quaternion_error = std::max(out.max_quaternion_error, quaternion_error(row.state));
    out.rows.push_back(std::move(row));
    if (n == steps) break;
    double renorm = 0.0;
    s = rk4_step([&](const BodyState& y) { return dynamics::rigid_structure_deriv(y, u, structure); },
                 s, sim.dt, &renorm);
    if (renorm > 1e-6 && out.warnings.size() < 32) {
      out.warnings.push_back("quaternion renormalization removed " + std::to_string(renorm));
    }
  }
}

}  // namespace

SystemState rk4_step(const SystemDeriv& f, const SystemState& x, double dt, double* renormalization) {
  if (!(dt > 0.0)) throw NumericError("rk4_step needs dt > 0");
  auto checked = [&](const SystemState& s) {
    SystemRate r = f(s);
    require_finite(r);
    return r;
  };
  SystemState out = rk4(checked, x, dt);
  double worst = renormalize(out.payload.attitude);
  for (BodyState& r : out.robots) worst = std::max(worst, renormalize(r.attitude));
  if (renormalization) *renormalization = worst;
  return out;
}

BodyState rk4_step(const BodyDeriv& f, const BodyState& x, double dt, double* renormalization) {
  if (!(dt > 0.0)) throw NumericError("rk4_step needs dt > 0");
  auto checked = [&](const BodyState& s) {
    BodyRate r = f(s);
    require_finite(r, "body");
    return r;
  };
  BodyState out = rk4(checked, x, dt);
  const double worst = renormalize(out.attitude);
  if (renormalization) *renormalization = worst;
  return out;
}

double correct_drift(SystemState& x, const SystemParams& p, const CableStatus& status,
                     double threshold) {
  double worst = 0.0;
  for (std::size_t k : status.taut_indices()) {
    const dynamics::CableKinematics c = dynamics::cable_kinematics(x, p, k);
    const double l = p.mechanism.cable_lengths[k];
    const double residual = std::abs(c.distance - l);
    worst = std::max(worst, residual);
    if (residual > threshold) x.robots[k].position = c.attach_point - l * c.direction;
  }
  return worst;
}

SimResult simulate(const ScenarioSpec& sc) {
  SimResult out;
  out.payload_has_attitude = sc.system.payload.kind == PayloadKind::RigidBody;
  try {
    if (!(sc.simulation.dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(sc.simulation.duration >= 0.0)) throw ConfigError("duration must be non-negative");
    if (sc.system.kind() == SystemKind::RigidLink) {
      simulate_rigid(sc, out);
    } else {
      CableSimulation(sc, out).run();
    }
  } catch (...) {
    out.error = std::current_exception();
  }
  return out;
}

double position_rmse(const std::vector<LogRow>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const LogRow& r : rows) {
    acc += (r.state.payload.position - r.desired_position).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(rows.size()));
}

double attitude_rmse(const std::vector<LogRow>& rows) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const LogRow& r : rows) {
    const double a = rotation_angle_between(r.state.payload.attitude, r.desired_attitude);
    acc += a * a;
  }
  return std::sqrt(acc / static_cast<double>(rows.size()));
}

}  // namespace airlift::integrator
