#pragma once

// Scenario files, robot presets, CSV logs and plot emission.

#include <filesystem>
#include <string>
#include <vector>

#include "airlift/integrator.hpp"
#include "airlift/scenario.hpp"

namespace airlift::config {

/// Built-in robot parameter sets: "dragonfly", "hummingbird", "race".
QuadrotorParams preset(const std::string& name);
std::vector<std::string> preset_names();

/// Parses and validates a scenario. Relative waypoint paths are resolved
/// against `base_dir`. Throws ConfigError with "source:line: message".
ScenarioSpec parse_scenario(const std::string& text, const std::string& source = "<string>",
                            const std::filesystem::path& base_dir = {});
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Fully expanded YAML (no presets, waypoints inline) that loads back to an
/// equal ScenarioSpec.
std::string dump_scenario(const ScenarioSpec& spec);
void save_scenario(const ScenarioSpec& spec, const std::filesystem::path& path);

/// Checks every cross-reference and invariant; throws ConfigError naming
/// the violated one.
void validate(const ScenarioSpec& spec);

/// Initial cable status implied by the geometry: taut when |d - l| <= 1e-6.
CableStatus status_from_geometry(const SystemState& x, const SystemParams& params);

struct LogLayout {
  std::size_t robots = 0;
  bool payload_attitude = false;
};

std::vector<std::string> log_columns(const LogLayout& layout);
/// CSV with a header line and one line per row, 17 significant digits.
void write_log(const std::vector<integrator::LogRow>& rows, const LogLayout& layout,
               const std::filesystem::path& path);

/// Writes position.svg, velocity.svg, orientation.svg (only when the log has
/// payload attitude columns) and tension.svg into out_dir. Returns the
/// files written. Throws IoError when the log is unreadable or lacks the
/// required columns.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& log_path,
                                              const std::filesystem::path& out_dir);

/// "%.17g" formatting used by every writer.
std::string format_double(double v);

}  // namespace airlift::config
