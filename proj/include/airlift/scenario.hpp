#pragma once

// Complete description of one simulation run.

#include <string>

#include "airlift/control.hpp"
#include "airlift/noise.hpp"
#include "airlift/planner.hpp"
#include "airlift/types.hpp"

namespace airlift {

struct SimulationSettings {
  double dt = 1e-3;         // s
  double duration = 10.0;   // s
  int control_decimation = 1;
  /// Steps between constraint drift checks of taut cables.
  int drift_check_interval = 1000;

  bool operator==(const SimulationSettings&) const = default;
};

struct ScenarioSpec {
  std::string name;
  SystemParams system;
  /// Cable systems: payload and robots. Rigid links: payload only, the
  /// robots follow from the structure geometry.
  SystemState initial_state;
  /// Cable systems only.
  CableStatus initial_status;
  planner::TrajectorySpec trajectory;
  control::ControllerGains gains;
  control::ControllerOptions controller;
  SimulationSettings simulation;
  NoiseSpec noise;

  bool operator==(const ScenarioSpec&) const = default;
};

}  // namespace airlift
