#include "airlift/config.hpp"

#include <yaml-cpp/yaml.h>

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <map>
#include <set>
#include <sstream>

#include "airlift/errors.hpp"

namespace airlift::config {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

QuadrotorParams preset(const std::string& name) {
  QuadrotorParams q;
  q.name = name;
  if (name == "dragonfly") {
    q.mass = 0.25;
    q.arm_length = 0.1075;
    q.inertia_diag = Vec3(0.601e-3, 0.589e-3, 1.076e-3);
    q.motor_speed_min = 5500;
    q.motor_speed_max = 16400;
    q.thrust_coefficient = 6.5e-9;
  } else if (name == "hummingbird") {
    q.mass = 0.5;
    q.arm_length = 0.17;
    q.inertia_diag = Vec3(2.64e-3, 2.64e-3, 4.96e-3);
    q.motor_speed_min = 1500;
    q.motor_speed_max = 7500;
    q.thrust_coefficient = 5.5e-8;
  } else if (name == "race") {
    q.mass = 0.95;
    q.arm_length = 0.10125;
    q.inertia_diag = Vec3(3.0e-3, 3.0e-3, 4.0e-3);
    q.motor_speed_min = 5500;
    q.motor_speed_max = 23000;
    q.thrust_coefficient = 1.18e-8;
  } else {
    throw ConfigError("unknown robot preset '" + name + "' (expected dragonfly, hummingbird or race)");
  }
  return q;
}

std::vector<std::string> preset_names() { return {"dragonfly", "hummingbird", "race"}; }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

struct Ctx {
  std::string source;
  fs::path base_dir;

  [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
    const auto mark = at.Mark();
    if (mark.line >= 0) {
      throw ConfigError(source + ":" + std::to_string(mark.line + 1) + ": " + msg);
    }
    throw ConfigError(source + ": " + msg);
  }
};

void check_keys(const Ctx& ctx, const YAML::Node& node, const std::string& section,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) ctx.fail(node, section + " must be a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!ok.count(key)) ctx.fail(kv.first, "unknown key '" + key + "' in " + section);
  }
}

YAML::Node required(const Ctx& ctx, const YAML::Node& parent, const char* key,
                    const std::string& section) {
  const YAML::Node n = parent[key];
  if (!n) ctx.fail(parent, section + " is missing '" + key + "'");
  return n;
}

double number(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    ctx.fail(n, what + " must be a number");
  }
}

int integer(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    ctx.fail(n, what + " must be an integer");
  }
}

bool boolean(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    ctx.fail(n, what + " must be true or false");
  }
}

std::string text(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) ctx.fail(n, what + " must be a string");
  return n.as<std::string>();
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence() || n.size() != N) {
    ctx.fail(n, what + " must be a list of " + std::to_string(N) + " numbers");
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = number(ctx, n[i], what);
  return v;
}

std::vector<Vec3> vec3_list(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) ctx.fail(n, what + " must be a list");
  std::vector<Vec3> out;
  for (const auto& e : n) out.push_back(vec<3>(ctx, e, what + " entry"));
  return out;
}

std::vector<double> number_list(const Ctx& ctx, const YAML::Node& n, const std::string& what) {
  if (!n.IsSequence()) ctx.fail(n, what + " must be a list");
  std::vector<double> out;
  for (const auto& e : n) out.push_back(number(ctx, e, what));
  return out;
}

Mat3 inertia_matrix(const Ctx& ctx, const YAML::Node& n) {
  if (n.IsSequence() && n.size() == 3 && n[0].IsScalar()) {
    return vec<3>(ctx, n, "inertia").asDiagonal();
  }
  if (n.IsSequence() && n.size() == 3) {
    Mat3 J;
    for (int r = 0; r < 3; ++r) J.row(r) = vec<3>(ctx, n[r], "inertia row").transpose();
    return J;
  }
  ctx.fail(n, "inertia must be 3 diagonal entries or a 3x3 matrix");
}

QuadrotorParams parse_robot(const Ctx& ctx, const YAML::Node& n) {
  check_keys(ctx, n, "robot",
             {"preset", "count", "name", "mass", "arm_length", "inertia", "motor_speed_min",
              "motor_speed_max", "thrust_coefficient"});
  QuadrotorParams q;
  if (n["preset"]) {
    try {
      q = preset(text(ctx, n["preset"], "preset"));
    } catch (const ConfigError& e) {
      ctx.fail(n["preset"], e.what());
    }
  }
  if (n["name"]) q.name = text(ctx, n["name"], "robot name");
  if (n["mass"]) q.mass = number(ctx, n["mass"], "robot mass");
  if (n["arm_length"]) q.arm_length = number(ctx, n["arm_length"], "arm_length");
  if (n["inertia"]) q.inertia_diag = vec<3>(ctx, n["inertia"], "robot inertia");
  if (n["motor_speed_min"]) q.motor_speed_min = number(ctx, n["motor_speed_min"], "motor_speed_min");
  if (n["motor_speed_max"]) q.motor_speed_max = number(ctx, n["motor_speed_max"], "motor_speed_max");
  if (n["thrust_coefficient"]) {
    q.thrust_coefficient = number(ctx, n["thrust_coefficient"], "thrust_coefficient");
  }
  if (!(q.mass > 0.0)) ctx.fail(n, "robot mass must be positive");
  if (!(q.inertia_diag.minCoeff() > 0.0)) ctx.fail(n, "robot inertia entries must be positive");
  if (!(q.motor_speed_max > q.motor_speed_min)) {
    ctx.fail(n, "motor_speed_max must exceed motor_speed_min");
  }
  if (!(q.thrust_coefficient > 0.0)) ctx.fail(n, "thrust_coefficient must be positive");
  if (!(q.arm_length > 0.0)) ctx.fail(n, "arm_length must be positive");
  return q;
}

std::vector<QuadrotorParams> parse_robots(const Ctx& ctx, const YAML::Node& n) {
  std::vector<QuadrotorParams> out;
  auto add = [&](const YAML::Node& e) {
    const QuadrotorParams q = parse_robot(ctx, e);
    const int count = e["count"] ? integer(ctx, e["count"], "robot count") : 1;
    if (count < 1) ctx.fail(e["count"], "robot count must be at least 1");
    for (int i = 0; i < count; ++i) out.push_back(q);
  };
  if (n.IsSequence()) {
    for (const auto& e : n) add(e);
  } else {
    add(n);
  }
  if (out.empty()) ctx.fail(n, "at least one robot is required");
  return out;
}

PayloadParams parse_payload(const Ctx& ctx, const YAML::Node& n) {
  check_keys(ctx, n, "payload", {"kind", "mass", "inertia", "attach_points"});
  PayloadParams p;
  const std::string kind = text(ctx, required(ctx, n, "kind", "payload"), "payload kind");
  if (kind == "point_mass") {
    p.kind = PayloadKind::PointMass;
  } else if (kind == "rigid_body") {
    p.kind = PayloadKind::RigidBody;
  } else {
    ctx.fail(n["kind"], "payload kind must be point_mass or rigid_body");
  }
  p.mass = number(ctx, required(ctx, n, "mass", "payload"), "payload mass");
  if (!(p.mass > 0.0)) ctx.fail(n["mass"], "payload mass must be positive");
  if (n["inertia"]) p.inertia = inertia_matrix(ctx, n["inertia"]);
  if (n["attach_points"]) {
    p.attach_points = vec3_list(ctx, n["attach_points"], "attach_points");
  } else if (p.kind == PayloadKind::PointMass) {
    p.attach_points = {Vec3::Zero()};
  } else {
    ctx.fail(n, "rigid_body payload needs attach_points");
  }
  return p;
}

MechanismSpec parse_mechanism(const Ctx& ctx, const YAML::Node& n, std::size_t robots) {
  check_keys(ctx, n, "mechanism", {"kind", "cable_lengths", "cable_length", "wrench_maps"});
  MechanismSpec m;
  const std::string kind = text(ctx, required(ctx, n, "kind", "mechanism"), "mechanism kind");
  if (kind == "cable") {
    m.kind = MechanismKind::Cable;
    if (n["cable_lengths"]) {
      m.cable_lengths = number_list(ctx, n["cable_lengths"], "cable_lengths");
    } else if (n["cable_length"]) {
      m.cable_lengths.assign(robots, number(ctx, n["cable_length"], "cable_length"));
    } else {
      ctx.fail(n, "cable mechanism needs cable_lengths");
    }
    for (std::size_t k = 0; k < m.cable_lengths.size(); ++k) {
      if (!(m.cable_lengths[k] > 0.0)) {
        const YAML::Node at = n["cable_lengths"] ? n["cable_lengths"][k] : n["cable_length"];
        ctx.fail(at, "cable length l_" + std::to_string(k) + " must be positive");
      }
    }
  } else if (kind == "rigid_link") {
    m.kind = MechanismKind::RigidLink;
    if (n["wrench_maps"]) {
      for (const auto& a : n["wrench_maps"]) {
        if (!a.IsSequence() || a.size() != 4) ctx.fail(a, "wrench map must be a 4x4 matrix");
        WrenchMap A;
        for (int r = 0; r < 4; ++r) A.row(r) = vec<4>(ctx, a[r], "wrench map row").transpose();
        m.wrench_maps.push_back(A);
      }
    }
  } else {
    ctx.fail(n["kind"], "mechanism kind must be cable or rigid_link");
  }
  return m;
}

BodyState parse_body(const Ctx& ctx, const YAML::Node& n, const std::string& what,
                     const BodyState& defaults) {
  check_keys(ctx, n, what, {"position", "velocity", "attitude", "angular_velocity"});
  BodyState b = defaults;
  if (n["position"]) b.position = vec<3>(ctx, n["position"], what + " position");
  if (n["velocity"]) b.velocity = vec<3>(ctx, n["velocity"], what + " velocity");
  if (n["attitude"]) {
    const Vec4 q = vec<4>(ctx, n["attitude"], what + " attitude (w, x, y, z)");
    if (std::abs(q.norm() - 1.0) > kUnitTolerance) {
      ctx.fail(n["attitude"], what + " attitude quaternion must have unit norm");
    }
    b.attitude = from_wxyz(q);
  }
  if (n["angular_velocity"]) {
    b.angular_velocity = vec<3>(ctx, n["angular_velocity"], what + " angular_velocity");
  }
  return b;
}

planner::TrajectorySpec parse_trajectory(const Ctx& ctx, const YAML::Node& n) {
  check_keys(ctx, n, "trajectory",
             {"kind", "position", "radius", "period", "height", "waypoints", "times", "positions",
              "k", "order", "attitude"});
  planner::TrajectorySpec t;
  const std::string kind = text(ctx, required(ctx, n, "kind", "trajectory"), "trajectory kind");
  if (kind == "hover") {
    t.kind = planner::TrajectorySpec::Kind::Hover;
    t.hover_position = vec<3>(ctx, required(ctx, n, "position", "hover trajectory"), "position");
  } else if (kind == "circle") {
    t.kind = planner::TrajectorySpec::Kind::Circle;
    t.radius = number(ctx, required(ctx, n, "radius", "circle"), "radius");
    t.period = number(ctx, required(ctx, n, "period", "circle"), "period");
    t.height = number(ctx, required(ctx, n, "height", "circle"), "height");
    if (!(t.period > 0.0)) ctx.fail(n["period"], "circle period must be positive");
  } else if (kind == "min_deriv") {
    t.kind = planner::TrajectorySpec::Kind::MinDeriv;
    if (n["waypoints"]) {
      fs::path wp = text(ctx, n["waypoints"], "waypoints path");
      if (wp.is_relative() && !ctx.base_dir.empty()) wp = ctx.base_dir / wp;
      planner::WaypointFile file;
      try {
        file = planner::load_waypoints(wp);
      } catch (const ConfigError& e) {
        ctx.fail(n["waypoints"], e.what());
      }
      t.times = file.times;
      t.waypoints = file.positions;
      if (file.derivative_order) t.derivative_order = *file.derivative_order;
      if (file.poly_order) t.poly_order = *file.poly_order;
      if (file.attitude) t.attitude = file.attitude;
    } else {
      t.times = number_list(ctx, required(ctx, n, "times", "min_deriv trajectory"), "times");
      t.waypoints = vec3_list(ctx, required(ctx, n, "positions", "min_deriv trajectory"),
                              "positions");
    }
    if (n["k"]) t.derivative_order = integer(ctx, n["k"], "k");
    if (n["order"]) t.poly_order = integer(ctx, n["order"], "order");
  } else {
    ctx.fail(n["kind"], "trajectory kind must be hover, circle or min_deriv");
  }
  if (const auto a = n["attitude"]) {
    check_keys(ctx, a, "attitude profile", {"axis", "amplitude", "period"});
    planner::AttitudeProfile prof;
    try {
      prof.axis = planner::parse_axis(text(ctx, required(ctx, a, "axis", "attitude"), "axis"));
    } catch (const ConfigError& e) {
      ctx.fail(a["axis"], e.what());
    }
    prof.amplitude = number(ctx, required(ctx, a, "amplitude", "attitude"), "amplitude");
    prof.period = number(ctx, required(ctx, a, "period", "attitude"), "period");
    if (!(prof.period > 0.0)) ctx.fail(a["period"], "attitude period must be positive");
    t.attitude = prof;
  }
  return t;
}

void parse_controller(const Ctx& ctx, const YAML::Node& n, ScenarioSpec& s) {
  check_keys(ctx, n, "controller",
             {"kind", "gains", "integral_limit", "cable_feedforward", "feedforward_filter"});
  if (n["kind"]) {
    const std::string kind = text(ctx, n["kind"], "controller kind");
    const SystemKind sk = s.system.kind();
    const bool match = (kind == "single_cable" && sk == SystemKind::SingleCable) ||
                       (kind == "multi_cable" && sk == SystemKind::MultiCable) ||
                       (kind == "rigid_link" && sk == SystemKind::RigidLink);
    if (!match) ctx.fail(n["kind"], "controller kind '" + kind + "' does not fit the system");
  }
  if (const auto g = n["gains"]) {
    check_keys(ctx, g, "gains",
               {"kp", "kd", "ki", "kR", "kOmega", "kXi", "kw", "kRL", "kOmegaL", "robot_kp",
                "robot_kd"});
    auto gain = [&](const char* key, Vec3& out) {
      if (!g[key]) return;
      out = vec<3>(ctx, g[key], std::string("gain ") + key);
      if (!(out.minCoeff() >= 0.0)) ctx.fail(g[key], std::string("gain ") + key + " must be >= 0");
    };
    auto& k = s.gains;
    gain("kp", k.kp);
    gain("kd", k.kd);
    gain("ki", k.ki);
    gain("kR", k.kR);
    gain("kOmega", k.kOmega);
    gain("kXi", k.kXi);
    gain("kw", k.kw);
    gain("kRL", k.kRL);
    gain("kOmegaL", k.kOmegaL);
    gain("robot_kp", k.robot_kp);
    gain("robot_kd", k.robot_kd);
  }
  auto& o = s.controller;
  if (n["integral_limit"]) o.integral_limit = number(ctx, n["integral_limit"], "integral_limit");
  if (n["cable_feedforward"]) {
    o.cable_feedforward = boolean(ctx, n["cable_feedforward"], "cable_feedforward");
  }
  if (n["feedforward_filter"]) {
    o.feedforward_filter = number(ctx, n["feedforward_filter"], "feedforward_filter");
  }
}

void parse_simulation(const Ctx& ctx, const YAML::Node& n, ScenarioSpec& s) {
  check_keys(ctx, n, "simulation",
             {"dt", "duration", "seed", "control_decimation", "drift_check_interval"});
  auto& sim = s.simulation;
  if (n["dt"]) sim.dt = number(ctx, n["dt"], "dt");
  if (n["duration"]) sim.duration = number(ctx, n["duration"], "duration");
  if (n["control_decimation"]) {
    sim.control_decimation = integer(ctx, n["control_decimation"], "control_decimation");
  }
  if (n["drift_check_interval"]) {
    sim.drift_check_interval = integer(ctx, n["drift_check_interval"], "drift_check_interval");
  }
  if (n["seed"]) {
    try {
      s.noise.seed = n["seed"].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      ctx.fail(n["seed"], "seed must be a non-negative integer");
    }
  }
  if (!(sim.dt > 0.0)) ctx.fail(n["dt"] ? n["dt"] : n, "dt must be positive");
  if (!(sim.duration >= 0.0)) ctx.fail(n["duration"], "duration must be non-negative");
}

void parse_noise(const Ctx& ctx, const YAML::Node& n, NoiseSpec& noise) {
  check_keys(ctx, n, "noise", {"sigma", "position", "velocity", "attitude", "angular_velocity"});
  if (n["sigma"]) {
    const double s = number(ctx, n["sigma"], "noise sigma");
    noise.position = noise.velocity = noise.attitude = noise.angular_velocity = s;
  }
  if (n["position"]) noise.position = number(ctx, n["position"], "noise position");
  if (n["velocity"]) noise.velocity = number(ctx, n["velocity"], "noise velocity");
  if (n["attitude"]) noise.attitude = number(ctx, n["attitude"], "noise attitude");
  if (n["angular_velocity"]) {
    noise.angular_velocity = number(ctx, n["angular_velocity"], "noise angular_velocity");
  }
}

SystemState default_state(const ScenarioSpec& s, const YAML::Node& init, const Ctx& ctx) {
  SystemState x;
  BodyState payload;
  payload.position = planner::Trajectory(s.trajectory)(0.0).position;
  if (init && init["payload"]) payload = parse_body(ctx, init["payload"], "payload state", payload);
  x.payload = payload;
  const auto& p = s.system;
  const std::size_t n = p.robot_count();
  if (p.mechanism.kind == MechanismKind::RigidLink) return x;
  const Mat3 R = payload.rotation();
  for (std::size_t k = 0; k < n; ++k) {
    BodyState r;
    if (k < p.payload.attach_points.size() && k < p.mechanism.cable_lengths.size()) {
      r.position = payload.position + R * p.payload.attach_points[k] +
                   p.mechanism.cable_lengths[k] * e3();
      r.velocity = payload.velocity;
    }
    x.robots.push_back(r);
  }
  if (init && init["robots"]) {
    const YAML::Node rs = init["robots"];
    if (!rs.IsSequence() || rs.size() != n) {
      ctx.fail(rs, "initial_state.robots must list one state per robot (" + std::to_string(n) + ")");
    }
    for (std::size_t k = 0; k < n; ++k) {
      x.robots[k] = parse_body(ctx, rs[k], "robot " + std::to_string(k) + " state", x.robots[k]);
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Dumping helpers
// ---------------------------------------------------------------------------

template <class V>
YAML::Node flow(const V& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (Eigen::Index i = 0; i < v.size(); ++i) n.push_back(v(i));
  n.SetStyle(YAML::EmitterStyle::Flow);
  return n;
}

YAML::Node body_node(const BodyState& b) {
  YAML::Node n;
  n["position"] = flow(b.position);
  n["velocity"] = flow(b.velocity);
  n["attitude"] = flow(to_wxyz(b.attitude));
  n["angular_velocity"] = flow(b.angular_velocity);
  return n;
}

YAML::Node matrix_node(const Eigen::MatrixXd& m) {
  YAML::Node n(YAML::NodeType::Sequence);
  for (Eigen::Index r = 0; r < m.rows(); ++r) n.push_back(flow(Eigen::VectorXd(m.row(r).transpose())));
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Scenario load / save / validate
// ---------------------------------------------------------------------------

CableStatus status_from_geometry(const SystemState& x, const SystemParams& p) {
  CableStatus s;
  for (std::size_t k = 0; k < p.robot_count(); ++k) {
    const double d = hybrid::cable_metrics(x, p, k).distance;
    s.taut.push_back(std::abs(d - p.mechanism.cable_lengths[k]) <= 1e-6);
  }
  return s;
}

ScenarioSpec parse_scenario(const std::string& content, const std::string& source,
                            const fs::path& base_dir) {
  const Ctx ctx{source, base_dir};
  YAML::Node root;
  try {
    root = YAML::Load(content);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ": scenario must be a mapping");

  ScenarioSpec s;
  try {
    check_keys(ctx, root, "scenario",
               {"name", "system", "initial_state", "trajectory", "controller", "simulation",
                "noise"});
    if (root["name"]) s.name = text(ctx, root["name"], "name");
    const YAML::Node sys = required(ctx, root, "system", "scenario");
    check_keys(ctx, sys, "system", {"robots", "payload", "mechanism"});
    s.system.robots = parse_robots(ctx, required(ctx, sys, "robots", "system"));
    s.system.payload = parse_payload(ctx, required(ctx, sys, "payload", "system"));
    s.system.mechanism =
        parse_mechanism(ctx, required(ctx, sys, "mechanism", "system"), s.system.robot_count());
    s.trajectory = parse_trajectory(ctx, required(ctx, root, "trajectory", "scenario"));
    if (root["controller"]) parse_controller(ctx, root["controller"], s);
    if (root["simulation"]) parse_simulation(ctx, root["simulation"], s);
    if (root["noise"]) parse_noise(ctx, root["noise"], s.noise);

    const YAML::Node init = root["initial_state"];
    if (init) check_keys(ctx, init, "initial_state", {"payload", "robots", "taut"});
    if (s.system.payload.attach_points.size() != s.system.robot_count()) {
      ctx.fail(sys, std::to_string(s.system.robot_count()) + " robots but " +
                        std::to_string(s.system.payload.attach_points.size()) + " attach points");
    }
    if (s.system.mechanism.kind == MechanismKind::Cable &&
        s.system.mechanism.cable_lengths.size() != s.system.robot_count()) {
      ctx.fail(sys["mechanism"], std::to_string(s.system.robot_count()) + " robots but " +
                                     std::to_string(s.system.mechanism.cable_lengths.size()) +
                                     " cable lengths");
    }
    s.initial_state = default_state(s, init, ctx);
    if (s.system.mechanism.kind == MechanismKind::Cable) {
      if (init && init["taut"]) {
        const YAML::Node t = init["taut"];
        if (!t.IsSequence() || t.size() != s.system.robot_count()) {
          ctx.fail(t, "initial_state.taut must list one flag per cable");
        }
        for (const auto& f : t) s.initial_status.taut.push_back(boolean(ctx, f, "taut flag"));
      } else {
        s.initial_status = status_from_geometry(s.initial_state, s.system);
      }
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  try {
    validate(s);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return s;
}

ScenarioSpec load_scenario(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_scenario(ss.str(), path.string(), path.parent_path());
}

void validate(const ScenarioSpec& s) {
  const SystemParams& p = s.system;
  if (p.robots.empty()) throw ConfigError("system needs at least one robot");
  for (std::size_t k = 0; k < p.robots.size(); ++k) {
    const QuadrotorParams& q = p.robots[k];
    const std::string who = "robot " + std::to_string(k);
    if (!(q.mass > 0.0)) throw ConfigError(who + ": mass must be positive");
    if (!(q.inertia_diag.minCoeff() > 0.0)) throw ConfigError(who + ": inertia must be positive");
    if (!(q.motor_speed_max > q.motor_speed_min)) {
      throw ConfigError(who + ": motor_speed_max must exceed motor_speed_min");
    }
    if (!(q.thrust_coefficient > 0.0)) throw ConfigError(who + ": thrust_coefficient must be positive");
  }
  if (!(p.payload.mass > 0.0)) throw ConfigError("payload mass must be positive");
  if (p.payload.attach_points.size() != p.robots.size()) {
    throw ConfigError("robot count " + std::to_string(p.robots.size()) +
                      " does not match attach point count " +
                      std::to_string(p.payload.attach_points.size()));
  }
  if (p.payload.kind == PayloadKind::PointMass) {
    if (p.payload.attach_points.size() != 1 || !p.payload.attach_points[0].isZero(0.0)) {
      throw ConfigError("point_mass payload must have exactly one attach point at the origin");
    }
  } else {
    const Mat3& J = p.payload.inertia;
    if (!J.isApprox(J.transpose(), 1e-12) || Eigen::LLT<Mat3>(J).info() != Eigen::Success) {
      throw ConfigError("rigid_body payload inertia must be symmetric positive definite");
    }
  }
  if (p.mechanism.kind == MechanismKind::Cable) {
    if (p.mechanism.cable_lengths.size() != p.robots.size()) {
      throw ConfigError("cable length count does not match robot count");
    }
    for (std::size_t k = 0; k < p.mechanism.cable_lengths.size(); ++k) {
      if (!(p.mechanism.cable_lengths[k] > 0.0)) {
        throw ConfigError("cable length l_" + std::to_string(k) + " must be positive");
      }
    }
  } else if (!p.mechanism.wrench_maps.empty() && p.mechanism.wrench_maps.size() != p.robots.size()) {
    throw ConfigError("wrench map count does not match robot count");
  }

  const control::ControllerGains& g = s.gains;
  for (const Vec3* v : {&g.kp, &g.kd, &g.ki, &g.kR, &g.kOmega, &g.kXi, &g.kw, &g.kRL, &g.kOmegaL,
                        &g.robot_kp, &g.robot_kd}) {
    if (!v->allFinite() || v->minCoeff() < 0.0) throw ConfigError("gains must be finite and >= 0");
  }
  if (!(s.controller.integral_limit >= 0.0)) throw ConfigError("integral_limit must be >= 0");
  if (!(s.controller.feedforward_filter >= 0.0)) throw ConfigError("feedforward_filter must be >= 0");

  const SimulationSettings& sim = s.simulation;
  if (!(sim.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(sim.duration >= 0.0)) throw ConfigError("duration must be non-negative");
  if (sim.control_decimation < 1) throw ConfigError("control_decimation must be at least 1");
  if (sim.drift_check_interval < 1) throw ConfigError("drift_check_interval must be at least 1");
  const NoiseSpec& nz = s.noise;
  if (!(nz.position >= 0.0 && nz.velocity >= 0.0 && nz.attitude >= 0.0 &&
        nz.angular_velocity >= 0.0)) {
    throw ConfigError("noise standard deviations must be >= 0");
  }

  const planner::TrajectorySpec& t = s.trajectory;
  if (t.kind == planner::TrajectorySpec::Kind::Circle && !(t.period > 0.0)) {
    throw ConfigError("circle period must be positive");
  }
  if (t.kind == planner::TrajectorySpec::Kind::MinDeriv) {
    try {
      planner::solve_min_deriv(t.waypoints, t.times, t.derivative_order, t.poly_order);
    } catch (const NumericError& e) {
      throw ConfigError(std::string("trajectory: ") + e.what());
    }
  }
  if (t.attitude && !(t.attitude->period > 0.0)) {
    throw ConfigError("attitude period must be positive");
  }

  const SystemState& x = s.initial_state;
  auto check_body = [](const BodyState& b, const std::string& who) {
    if (!b.position.allFinite() || !b.velocity.allFinite() || !b.angular_velocity.allFinite() ||
        !b.attitude.coeffs().allFinite()) {
      throw ConfigError(who + " state must be finite");
    }
    if (std::abs(b.attitude.norm() - 1.0) > kUnitTolerance) {
      throw ConfigError(who + " attitude quaternion must have unit norm");
    }
  };
  check_body(x.payload, "payload");
  if (p.mechanism.kind == MechanismKind::Cable) {
    if (x.robots.size() != p.robots.size()) {
      throw ConfigError("initial state lists " + std::to_string(x.robots.size()) +
                        " robots, system has " + std::to_string(p.robots.size()));
    }
    for (std::size_t k = 0; k < x.robots.size(); ++k) check_body(x.robots[k], "robot " + std::to_string(k));
    if (s.initial_status.taut.size() != p.robots.size()) {
      throw ConfigError("taut flag count does not match robot count");
    }
    for (std::size_t k = 0; k < p.robots.size(); ++k) {
      const double d = hybrid::cable_metrics(x, p, k).distance;
      const double l = p.mechanism.cable_lengths[k];
      if (s.initial_status.taut[k] && std::abs(d - l) > 1e-6) {
        throw ConfigError("cable " + std::to_string(k) + " is declared taut but |d - l| = " +
                          format_double(std::abs(d - l)) + " exceeds 1e-6 m");
      }
      if (!s.initial_status.taut[k] && d > l + 1e-6) {
        throw ConfigError("cable " + std::to_string(k) + " is slack but longer than its length");
      }
    }
  }
}

std::string dump_scenario(const ScenarioSpec& s) {
  YAML::Node root;
  root["name"] = s.name;

  YAML::Node robots(YAML::NodeType::Sequence);
  for (const QuadrotorParams& q : s.system.robots) {
    YAML::Node r;
    r["name"] = q.name;
    r["mass"] = q.mass;
    r["arm_length"] = q.arm_length;
    r["inertia"] = flow(q.inertia_diag);
    r["motor_speed_min"] = q.motor_speed_min;
    r["motor_speed_max"] = q.motor_speed_max;
    r["thrust_coefficient"] = q.thrust_coefficient;
    robots.push_back(r);
  }
  YAML::Node payload;
  payload["kind"] = s.system.payload.kind == PayloadKind::PointMass ? "point_mass" : "rigid_body";
  payload["mass"] = s.system.payload.mass;
  payload["inertia"] = matrix_node(s.system.payload.inertia);
  YAML::Node attach(YAML::NodeType::Sequence);
  for (const Vec3& r : s.system.payload.attach_points) attach.push_back(flow(r));
  payload["attach_points"] = attach;
  YAML::Node mech;
  if (s.system.mechanism.kind == MechanismKind::Cable) {
    mech["kind"] = "cable";
    YAML::Node ls(YAML::NodeType::Sequence);
    for (double l : s.system.mechanism.cable_lengths) ls.push_back(l);
    ls.SetStyle(YAML::EmitterStyle::Flow);
    mech["cable_lengths"] = ls;
  } else {
    mech["kind"] = "rigid_link";
    if (!s.system.mechanism.wrench_maps.empty()) {
      YAML::Node maps(YAML::NodeType::Sequence);
      for (const WrenchMap& A : s.system.mechanism.wrench_maps) maps.push_back(matrix_node(A));
      mech["wrench_maps"] = maps;
    }
  }
  root["system"]["robots"] = robots;
  root["system"]["payload"] = payload;
  root["system"]["mechanism"] = mech;

  YAML::Node init;
  init["payload"] = body_node(s.initial_state.payload);
  if (s.system.mechanism.kind == MechanismKind::Cable) {
    YAML::Node rs(YAML::NodeType::Sequence);
    for (const BodyState& b : s.initial_state.robots) rs.push_back(body_node(b));
    init["robots"] = rs;
    YAML::Node taut(YAML::NodeType::Sequence);
    for (bool f : s.initial_status.taut) taut.push_back(static_cast<bool>(f));
    taut.SetStyle(YAML::EmitterStyle::Flow);
    init["taut"] = taut;
  }
  root["initial_state"] = init;

  const planner::TrajectorySpec& t = s.trajectory;
  YAML::Node traj;
  switch (t.kind) {
    case planner::TrajectorySpec::Kind::Hover:
      traj["kind"] = "hover";
      traj["position"] = flow(t.hover_position);
      break;
    case planner::TrajectorySpec::Kind::Circle:
      traj["kind"] = "circle";
      traj["radius"] = t.radius;
      traj["period"] = t.period;
      traj["height"] = t.height;
      break;
    case planner::TrajectorySpec::Kind::MinDeriv: {
      traj["kind"] = "min_deriv";
      YAML::Node times(YAML::NodeType::Sequence);
      for (double v : t.times) times.push_back(v);
      times.SetStyle(YAML::EmitterStyle::Flow);
      traj["times"] = times;
      YAML::Node pos(YAML::NodeType::Sequence);
      for (const Vec3& w : t.waypoints) pos.push_back(flow(w));
      traj["positions"] = pos;
      traj["k"] = t.derivative_order;
      traj["order"] = t.poly_order;
      break;
    }
  }
  if (t.attitude) {
    traj["attitude"]["axis"] = planner::axis_name(t.attitude->axis);
    traj["attitude"]["amplitude"] = t.attitude->amplitude;
    traj["attitude"]["period"] = t.attitude->period;
  }
  root["trajectory"] = traj;

  YAML::Node ctrl;
  const auto& g = s.gains;
  ctrl["gains"]["kp"] = flow(g.kp);
  ctrl["gains"]["kd"] = flow(g.kd);
  ctrl["gains"]["ki"] = flow(g.ki);
  ctrl["gains"]["kR"] = flow(g.kR);
  ctrl["gains"]["kOmega"] = flow(g.kOmega);
  ctrl["gains"]["kXi"] = flow(g.kXi);
  ctrl["gains"]["kw"] = flow(g.kw);
  ctrl["gains"]["kRL"] = flow(g.kRL);
  ctrl["gains"]["kOmegaL"] = flow(g.kOmegaL);
  ctrl["gains"]["robot_kp"] = flow(g.robot_kp);
  ctrl["gains"]["robot_kd"] = flow(g.robot_kd);
  ctrl["integral_limit"] = s.controller.integral_limit;
  ctrl["cable_feedforward"] = s.controller.cable_feedforward;
  ctrl["feedforward_filter"] = s.controller.feedforward_filter;
  root["controller"] = ctrl;

  YAML::Node sim;
  sim["dt"] = s.simulation.dt;
  sim["duration"] = s.simulation.duration;
  sim["seed"] = s.noise.seed;
  sim["control_decimation"] = s.simulation.control_decimation;
  sim["drift_check_interval"] = s.simulation.drift_check_interval;
  root["simulation"] = sim;

  YAML::Node noise;
  noise["position"] = s.noise.position;
  noise["velocity"] = s.noise.velocity;
  noise["attitude"] = s.noise.attitude;
  noise["angular_velocity"] = s.noise.angular_velocity;
  root["noise"] = noise;

  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

void save_scenario(const ScenarioSpec& spec, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write scenario file " + path.string());
  os << dump_scenario(spec);
  if (!os) throw IoError("failed writing scenario file " + path.string());
}

// ---------------------------------------------------------------------------
// CSV log
// ---------------------------------------------------------------------------

std::vector<std::string> log_columns(const LogLayout& layout) {
  std::vector<std::string> cols{"t"};
  auto v3 = [&](const std::string& p) {
    for (const char* a : {"_x", "_y", "_z"}) cols.push_back(p + a);
  };
  auto q4 = [&](const std::string& p) {
    for (const char* a : {"_w", "_x", "_y", "_z"}) cols.push_back(p + a);
  };
  v3("xL");
  v3("vL");
  if (layout.payload_attitude) {
    q4("qL");
    v3("wL");
  }
  for (std::size_t k = 1; k <= layout.robots; ++k) {
    const std::string i = std::to_string(k);
    v3("x" + i);
    v3("v" + i);
    q4("q" + i);
    v3("w" + i);
    cols.push_back("f" + i);
    v3("M" + i);
    cols.push_back("taut" + i);
  }
  v3("xLd");
  if (layout.payload_attitude) q4("qLd");
  cols.push_back("event");
  cols.push_back("saturated");
  for (std::size_t k = 1; k <= layout.robots; ++k) cols.push_back("T" + std::to_string(k));
  return cols;
}

void write_log(const std::vector<integrator::LogRow>& rows, const LogLayout& layout,
               const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write log " + path.string());
  const auto cols = log_columns(layout);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";

  std::string line;
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g,", v);
    line += buf;
  };
  auto put3 = [&](const Vec3& v) {
    put(v.x());
    put(v.y());
    put(v.z());
  };
  auto put4 = [&](const Quat& q) {
    put(q.w());
    put(q.x());
    put(q.y());
    put(q.z());
  };
  for (const integrator::LogRow& r : rows) {
    line.clear();
    put(r.t);
    put3(r.state.payload.position);
    put3(r.state.payload.velocity);
    if (layout.payload_attitude) {
      put4(r.state.payload.attitude);
      put3(r.state.payload.angular_velocity);
    }
    for (std::size_t k = 0; k < layout.robots; ++k) {
      const BodyState& b = r.state.robots.at(k);
      put3(b.position);
      put3(b.velocity);
      put4(b.attitude);
      put3(b.angular_velocity);
      const RobotInput u = k < r.input.robots.size() ? r.input.robots[k] : RobotInput{};
      put(u.thrust);
      put3(u.moment);
      put(k < r.taut.size() && r.taut[k] ? 1.0 : 0.0);
    }
    put3(r.desired_position);
    if (layout.payload_attitude) put4(r.desired_attitude);
    put(r.event ? 1.0 : 0.0);
    put(r.saturated ? 1.0 : 0.0);
    for (std::size_t k = 0; k < layout.robots; ++k) put(k < r.tensions.size() ? r.tensions[k] : 0.0);
    line.back() = '\n';
    os << line;
  }
  if (!os) throw IoError("failed writing log " + path.string());
}

}  // namespace airlift::config
