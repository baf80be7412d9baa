#include "airlift/planner.hpp"

#include <yaml-cpp/yaml.h>

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "airlift/errors.hpp"

namespace airlift::planner {

namespace {

// n! / (n - r)!, zero when r > n.
double falling(int n, int r) {
  if (r > n) return 0.0;
  double out = 1.0;
  for (int i = 0; i < r; ++i) out *= static_cast<double>(n - i);
  return out;
}

// Row vector c -> d^r/dtau^r sum c_n tau^n at tau.
Eigen::RowVectorXd derivative_row(int poly_order, double tau, int r) {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(poly_order + 1);
  for (int n = r; n <= poly_order; ++n) row(n) = falling(n, r) * std::pow(tau, n - r);
  return row;
}

Eigen::MatrixXd cost_matrix(int poly_order, int k, double T) {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(poly_order + 1, poly_order + 1);
  for (int i = k; i <= poly_order; ++i) {
    for (int j = k; j <= poly_order; ++j) {
      const int p = i + j - 2 * k + 1;
      Q(i, j) = falling(i, k) * falling(j, k) * std::pow(T, p) / p;
    }
  }
  return Q;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

FlatOutputs circle_traj(double t, double radius, double period, double height) {
  if (!(period > 0.0)) throw ConfigError("circle period must be positive");
  const double w = 2.0 * kPi / period;
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  FlatOutputs out;
  out.position = Vec3(radius * c, radius * s, height);
  out.velocity = radius * w * Vec3(-s, c, 0.0);
  out.acceleration = -radius * w * w * Vec3(c, s, 0.0);
  out.jerk = radius * w * w * w * Vec3(s, -c, 0.0);
  out.snap = radius * w * w * w * w * Vec3(c, s, 0.0);
  return out;
}

Vec3 PolySpline::segment_derivative(std::size_t segment, double tau, int order) const {
  const auto& c = coeffs.at(segment);
  return (derivative_row(poly_order, tau, order) * c).transpose();
}

Vec3 PolySpline::derivative(double t, int order) const {
  if (t < knots.front()) throw std::out_of_range("spline evaluated before its first knot");
  if (t >= knots.back()) {
    const std::size_t last = coeffs.size() - 1;
    if (order > 0) return Vec3::Zero();
    return segment_derivative(last, knots.back() - knots[last], 0);
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  const std::size_t seg = static_cast<std::size_t>(it - knots.begin()) - 1;
  return segment_derivative(seg, t - knots[seg], order);
}

PolySpline solve_min_deriv(const std::vector<Vec3>& waypoints, const std::vector<double>& times,
                           int k, int poly_order, const BoundaryDerivatives& boundary) {
  if (k < 1) throw ConfigError("minimized derivative order k must be at least 1");
  const int N = poly_order < 0 ? 2 * k - 1 : poly_order;
  if (N < 2 * k - 1) {
    throw NumericError("polynomial order " + std::to_string(N) + " is below 2k-1 = " +
                       std::to_string(2 * k - 1) + "; constraints exceed coefficients");
  }
  if (times.size() < 2) throw ConfigError("at least two waypoints are required");
  if (waypoints.size() != times.size()) {
    throw ConfigError("waypoint count " + std::to_string(waypoints.size()) +
                      " does not match time count " + std::to_string(times.size()));
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw ConfigError("waypoint times must be strictly increasing (index " +
                        std::to_string(i) + ")");
    }
  }
  for (const auto* side : {&boundary.start, &boundary.end}) {
    if (!side->empty() && side->size() != static_cast<std::size_t>(k - 1)) {
      throw ConfigError("boundary derivatives must list orders 1..k-1");
    }
  }

  const int m = static_cast<int>(times.size()) - 1;
  const int nc = N + 1;
  const int unknowns = m * nc;
  const int constraints = 2 * m + 2 * (k - 1) + (m - 1) * (k - 1);

  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(unknowns, unknowns);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(constraints, unknowns);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(constraints, 3);

  int row = 0;
  for (int i = 0; i < m; ++i) {
    const double T = times[i + 1] - times[i];
    Q.block(i * nc, i * nc, nc, nc) = cost_matrix(N, k, T);
    A.block(row, i * nc, 1, nc) = derivative_row(N, 0.0, 0);
    b.row(row++) = waypoints[i].transpose();
    A.block(row, i * nc, 1, nc) = derivative_row(N, T, 0);
    b.row(row++) = waypoints[i + 1].transpose();
  }
  const double T_last = times[m] - times[m - 1];
  for (int r = 1; r < k; ++r) {
    A.block(row, 0, 1, nc) = derivative_row(N, 0.0, r);
    if (!boundary.start.empty()) b.row(row) = boundary.start[r - 1].transpose();
    ++row;
    A.block(row, (m - 1) * nc, 1, nc) = derivative_row(N, T_last, r);
    if (!boundary.end.empty()) b.row(row) = boundary.end[r - 1].transpose();
    ++row;
  }
  for (int i = 0; i + 1 < m; ++i) {
    const double T = times[i + 1] - times[i];
    for (int r = 1; r < k; ++r) {
      A.block(row, i * nc, 1, nc) = derivative_row(N, T, r);
      A.block(row, (i + 1) * nc, 1, nc) = -derivative_row(N, 0.0, r);
      ++row;
    }
  }

  const int size = unknowns + constraints;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(size, size);
  K.topLeftCorner(unknowns, unknowns) = 2.0 * Q;
  K.topRightCorner(unknowns, constraints) = A.transpose();
  K.bottomLeftCorner(constraints, unknowns) = A;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(size, 3);
  rhs.bottomRows(constraints) = b;

  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(K).singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                              : std::numeric_limits<double>::infinity();
  if (!(cond < 1e14)) {
    std::ostringstream os;
    os << "minimum-derivative optimality system is ill conditioned (condition number " << cond
       << ")";
    throw NumericError(os.str());
  }
  const Eigen::MatrixXd z = K.fullPivLu().solve(rhs);
  const double residual = (K * z - rhs).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))) {
    std::ostringstream os;
    os << "minimum-derivative solve left residual " << residual << " (condition number " << cond
       << ")";
    throw NumericError(os.str());
  }

  PolySpline s;
  s.knots = times;
  s.derivative_order = k;
  s.poly_order = N;
  s.kkt_residual = residual;
  s.coeffs.resize(m);
  for (int i = 0; i < m; ++i) s.coeffs[i] = z.block(i * nc, 0, nc, 3);
  const Eigen::MatrixXd c = z.topRows(unknowns);
  s.cost = (c.transpose() * Q * c).trace();
  return s;
}

FlatOutputs eval_spline(const PolySpline& spline, double t) {
  FlatOutputs out;
  out.position = spline.derivative(t, 0);
  out.velocity = spline.derivative(t, 1);
  out.acceleration = spline.derivative(t, 2);
  out.jerk = spline.derivative(t, 3);
  out.snap = spline.derivative(t, 4);
  return out;
}

AttitudeSample attitude_traj(double t, const AttitudeProfile& profile) {
  if (!(profile.period > 0.0)) throw ConfigError("attitude profile period must be positive");
  const double w = 2.0 * kPi / profile.period;
  const double angle = profile.amplitude * std::sin(w * t);
  const double rate = profile.amplitude * w * std::cos(w * t);
  const double accel = -profile.amplitude * w * w * std::sin(w * t);
  const Vec3 axis = profile.axis == Axis::Roll    ? Vec3::UnitX()
                    : profile.axis == Axis::Pitch ? Vec3::UnitY()
                                                  : Vec3::UnitZ();
  AttitudeSample out;
  out.attitude = Quat(Eigen::AngleAxisd(angle, axis));
  out.angular_velocity = rate * axis;
  out.angular_acceleration = accel * axis;
  return out;
}

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::Roll: return "roll";
    case Axis::Pitch: return "pitch";
    case Axis::Yaw: return "yaw";
  }
  return "yaw";
}

Axis parse_axis(const std::string& name) {
  if (name == "roll") return Axis::Roll;
  if (name == "pitch") return Axis::Pitch;
  if (name == "yaw") return Axis::Yaw;
  throw ConfigError("unknown attitude axis '" + name + "' (expected roll, pitch or yaw)");
}

Trajectory::Trajectory(TrajectorySpec spec) : spec_(std::move(spec)) {
  if (spec_.kind == TrajectorySpec::Kind::MinDeriv) {
    spline_ = solve_min_deriv(spec_.waypoints, spec_.times, spec_.derivative_order,
                              spec_.poly_order);
  }
}

FlatOutputs Trajectory::operator()(double t) const {
  FlatOutputs out;
  switch (spec_.kind) {
    case TrajectorySpec::Kind::Hover:
      out.position = spec_.hover_position;
      break;
    case TrajectorySpec::Kind::Circle:
      out = circle_traj(t, spec_.radius, spec_.period, spec_.height);
      break;
    case TrajectorySpec::Kind::MinDeriv:
      out = eval_spline(*spline_, std::max(t, spline_->start_time()));
      break;
  }
  if (spec_.attitude) {
    const AttitudeSample a = attitude_traj(t, *spec_.attitude);
    out.attitude = a.attitude;
    out.angular_velocity = a.angular_velocity;
    out.angular_acceleration = a.angular_acceleration;
  }
  return out;
}

namespace {

Vec3 read_vec3(const YAML::Node& node, const std::string& what) {
  if (!node.IsSequence() || node.size() != 3) {
    throw ConfigError("line " + std::to_string(node.Mark().line + 1) + ": " + what +
                      " must be a list of 3 numbers");
  }
  return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

}  // namespace

WaypointFile load_waypoints(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::BadFile&) {
    throw ConfigError("cannot open waypoint file " + path.string());
  } catch (const YAML::ParserException& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  WaypointFile out;
  try {
    if (!root["times"] || !root["positions"]) {
      throw ConfigError(path.string() + ": waypoint file needs 'times' and 'positions'");
    }
    for (const auto& t : root["times"]) out.times.push_back(t.as<double>());
    for (const auto& p : root["positions"]) out.positions.push_back(read_vec3(p, "position"));
    if (root["k"]) out.derivative_order = root["k"].as<int>();
    if (root["order"]) out.poly_order = root["order"].as<int>();
    if (const auto a = root["attitude"]) {
      AttitudeProfile prof;
      prof.axis = parse_axis(a["axis"].as<std::string>());
      prof.amplitude = a["amplitude"].as<double>();
      prof.period = a["period"].as<double>();
      if (!(prof.period > 0.0)) throw ConfigError("attitude period must be positive");
      out.attitude = prof;
    }
  } catch (const YAML::Exception& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (out.times.size() != out.positions.size()) {
    throw ConfigError(path.string() + ": " + std::to_string(out.times.size()) + " times but " +
                      std::to_string(out.positions.size()) + " positions");
  }
  return out;
}

void write_spline(const PolySpline& spline, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write spline file " + path.string());
  os << "# piecewise polynomial; segment i uses local time tau = t - knots[i]\n";
  os << "k " << spline.derivative_order << "\n";
  os << "order " << spline.poly_order << "\n";
  os << "segments " << spline.segment_count() << "\n";
  os << "cost " << fmt(spline.cost) << "\n";
  os << "knots";
  for (double t : spline.knots) os << ' ' << fmt(t);
  os << "\n";
  const char axes[3] = {'x', 'y', 'z'};
  for (std::size_t i = 0; i < spline.segment_count(); ++i) {
    for (int d = 0; d < 3; ++d) {
      os << "segment " << i << ' ' << axes[d];
      for (int n = 0; n <= spline.poly_order; ++n) os << ' ' << fmt(spline.coeffs[i](n, d));
      os << "\n";
    }
  }
  if (!os) throw IoError("failed writing spline file " + path.string());
}

PolySpline read_spline(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open spline file " + path.string());
  PolySpline s;
  std::size_t segments = 0;
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "k") {
      ls >> s.derivative_order;
    } else if (key == "order") {
      ls >> s.poly_order;
    } else if (key == "segments") {
      ls >> segments;
      s.coeffs.assign(segments, Eigen::MatrixXd::Zero(s.poly_order + 1, 3));
    } else if (key == "cost") {
      ls >> s.cost;
    } else if (key == "knots") {
      double t;
      while (ls >> t) s.knots.push_back(t);
    } else if (key == "segment") {
      std::size_t i;
      char axis;
      ls >> i >> axis;
      const int d = axis - 'x';
      if (i >= s.coeffs.size() || d < 0 || d > 2) fail("bad segment line");
      for (int n = 0; n <= s.poly_order; ++n) {
        if (!(ls >> s.coeffs[i](n, d))) fail("missing coefficient");
      }
    } else {
      fail("unknown key '" + key + "'");
    }
    if (ls.fail() && !ls.eof()) fail("malformed line");
  }
  if (s.knots.size() != segments + 1 || segments == 0) fail("knot count does not match segments");
  return s;
}

}  // namespace airlift::planner
