#include "airlift/cli.hpp"

#include <yaml-cpp/exceptions.h>

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <thread>

#include "airlift/config.hpp"
#include "airlift/errors.hpp"
#include "airlift/integrator.hpp"
#include "airlift/planner.hpp"

#ifndef AIRLIFT_VERSION
#define AIRLIFT_VERSION "0.0.0"
#endif

namespace airlift::cli {

namespace fs = std::filesystem;

namespace {

// Scenario file format and model revision recorded in every manifest.
constexpr const char* kModelVersion = "1";

std::string error_message(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown error";
  }
}

fs::path default_out_dir() {
  if (const char* env = std::getenv("AIRLIFT_OUT_DIR"); env && *env) return env;
  return "out";
}

struct SimOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<double> dt;
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_manifest(const fs::path& path, const nlohmann::json& manifest) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write manifest " + path.string());
  os << manifest.dump(2) << "\n";
  if (!os) throw IoError("failed writing manifest " + path.string());
}

// Runs one scenario into out_dir. Returns the exit code; diagnostics go to
// `err`.
int run_sim(const SimOptions& opt, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  try {
    ScenarioSpec spec = config::load_scenario(opt.config);
    if (opt.seed) spec.noise.seed = *opt.seed;
    if (opt.duration) spec.simulation.duration = *opt.duration;
    if (opt.dt) spec.simulation.dt = *opt.dt;
    config::validate(spec);

    const fs::path dir = opt.out.empty() ? default_out_dir() : fs::path(opt.out);
    ensure_dir(dir);
    const integrator::SimResult result = integrator::simulate(spec);
    const config::LogLayout layout{spec.system.robot_count(), result.payload_has_attitude};
    config::write_log(result.rows, layout, dir / "log.csv");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    nlohmann::json manifest;
    manifest["scenario"] = opt.config;
    manifest["output_dir"] = dir.string();
    manifest["seed"] = spec.noise.seed;
    manifest["model_version"] = kModelVersion;
    manifest["code_version"] = AIRLIFT_VERSION;
    manifest["wall_clock_seconds"] = wall;
    manifest["rows"] = result.rows.size();
    manifest["events"] = result.events.size();
    manifest["status"] = result.error ? "error: " + error_message(result.error) : "ok";
    write_manifest(dir / "manifest.json", manifest);

    for (const std::string& w : result.warnings) err << "warning: " << w << "\n";
    result.rethrow_if_failed();
    out << "wrote " << result.rows.size() << " rows, " << result.events.size()
        << " mode switches to " << (dir / "log.csv").string() << "\n";
    return kExitOk;
  } catch (...) {
    const auto e = std::current_exception();
    err << "airlift sim: " << error_message(e) << "\n";
    return exit_code_for(e);
  }
}

int run_plan(const std::string& waypoints, int k, std::optional<int> order,
             const std::string& out_path) {
  try {
    const planner::WaypointFile file = planner::load_waypoints(waypoints);
    const int N = order ? *order : (file.poly_order ? *file.poly_order : -1);
    const planner::PolySpline spline = planner::solve_min_deriv(file.positions, file.times, k, N);
    const fs::path out = out_path.empty() ? default_out_dir() / "spline.txt" : fs::path(out_path);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    planner::write_spline(spline, out);
    std::cout << "wrote " << spline.segment_count() << " segments to " << out.string()
              << " (cost " << config::format_double(spline.cost) << ")\n";
    return kExitOk;
  } catch (...) {
    const auto e = std::current_exception();
    std::cerr << "airlift plan: " << error_message(e) << "\n";
    return exit_code_for(e);
  }
}

int run_plot(const std::string& log, const std::string& out_dir) {
  try {
    const fs::path dir = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
    const auto files = config::emit_plots(log, dir);
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    return kExitOk;
  } catch (...) {
    const auto e = std::current_exception();
    std::cerr << "airlift plot: " << error_message(e) << "\n";
    return exit_code_for(e);
  }
}

int run_sweep(const std::vector<std::string>& configs, const std::string& out_dir, int jobs,
              std::optional<std::uint64_t> seed) {
  const fs::path root = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
  std::vector<int> codes(configs.size(), kExitOk);
  std::vector<std::string> logs(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      SimOptions opt;
      opt.config = configs[i];
      opt.out = (root / fs::path(configs[i]).stem()).string();
      opt.seed = seed;
      std::ostringstream out, err;
      codes[i] = run_sim(opt, out, err);
      logs[i] = out.str() + err.str();
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int j = 0; j < n; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cout << configs[i] << ": " << logs[i];
    if (codes[i] != kExitOk && code == kExitOk) code = codes[i];
  }
  return code;
}

}  // namespace

int exit_code_for(const std::exception_ptr& error) {
  try {
    std::rethrow_exception(error);
  } catch (const ConfigError&) {
    return kExitConfig;
  } catch (const YAML::Exception&) {
    return kExitConfig;
  } catch (const NumericError&) {
    return kExitNumeric;
  } catch (const IoError&) {
    return kExitIo;
  } catch (...) {
    return kExitInternal;
  }
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Hybrid cable and rigid-link aerial transport simulator", "airlift"};
  app.require_subcommand(1);
  app.set_version_flag("--version", AIRLIFT_VERSION);

  SimOptions sim;
  auto* sim_cmd = app.add_subcommand("sim", "run a scenario and write log.csv + manifest.json");
  sim_cmd->add_option("--config", sim.config, "scenario file")->required();
  sim_cmd->add_option("--out", sim.out, "output directory (default $AIRLIFT_OUT_DIR or ./out)");
  sim_cmd->add_option("--seed", sim.seed, "noise seed override");
  sim_cmd->add_option("--duration", sim.duration, "simulated time override, s");
  sim_cmd->add_option("--dt", sim.dt, "integration step override, s");

  std::string waypoints, plan_out;
  int k = 4;
  std::optional<int> order;
  auto* plan_cmd = app.add_subcommand("plan", "solve a minimum k-th derivative spline");
  plan_cmd->add_option("--waypoints", waypoints, "waypoint file")->required();
  plan_cmd->add_option("--k", k, "derivative order to minimize")->required();
  plan_cmd->add_option("--order", order, "polynomial order (default 2k-1)");
  plan_cmd->add_option("--out", plan_out, "coefficient file");

  std::string log_path, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "render SVG plots from a log");
  plot_cmd->add_option("--log", log_path, "log.csv from sim")->required();
  plot_cmd->add_option("--out", plot_out, "output directory");

  std::vector<std::string> sweep_configs;
  std::string sweep_out;
  int jobs = 1;
  std::optional<std::uint64_t> sweep_seed;
  auto* sweep_cmd = app.add_subcommand("sweep", "run several scenarios concurrently");
  sweep_cmd->add_option("--configs", sweep_configs, "scenario files")->required();
  sweep_cmd->add_option("--out", sweep_out, "output root; one subdirectory per scenario");
  sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sweep_seed, "noise seed override");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*sim_cmd) return run_sim(sim, std::cout, std::cerr);
  if (*plan_cmd) return run_plan(waypoints, k, order, plan_out);
  if (*plot_cmd) return run_plot(log_path, plot_out);
  if (*sweep_cmd) return run_sweep(sweep_configs, sweep_out, jobs, sweep_seed);
  return kExitConfig;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace airlift::cli
