#include <gtest/gtest.h>

#include <cmath>

#include "airlift/config.hpp"
#include "airlift/dynamics.hpp"
#include "airlift/errors.hpp"
#include "airlift/integrator.hpp"
#include "airlift/noise.hpp"
#include "support.hpp"

using namespace airlift;
using namespace airlift::integrator;
using airlift::fixtures::Rng;

namespace {

SystemState swinging_pair(const SystemParams& p) {
  SystemState x;
  const double l = p.mechanism.cable_lengths[0];
  const Vec3 xi = Vec3(0.6, 0, -0.8);
  BodyState r;
  r.position = Vec3(0, 0, 2);
  x.payload.position = r.position + l * xi;
  x.payload.velocity = Vec3(0.8, 0.5, 0.6);  // perpendicular to xi
  x.robots = {r};
  return x;
}

}  // namespace

TEST(Rk4Step, ZeroDerivativeKeepsState) {
  Rng rng(31);
  const SystemParams p = fixtures::single_cable_params();
  const SystemState x = fixtures::random_cable_state(rng, p, {rng.unit()});
  SystemDeriv zero = [](const SystemState& s) {
    SystemRate r;
    r.robots.resize(s.robots.size());
    return r;
  };
  EXPECT_EQ(rk4_step(zero, x, 0.01), x);
}

TEST(Rk4, ExponentialGrowthOneStep) {
  const double y = rk4([](double v) { return v; }, 1.0, 0.1);
  // 1 + h + h^2/2 + h^3/6 + h^4/24
  EXPECT_NEAR(y, 1.1051708333333333, 1e-15);
  EXPECT_LT(std::abs(y - std::exp(0.1)), 1e-7);
}

TEST(Rk4Step, FourthOrderOnTautPendulum) {
  const SystemParams p = fixtures::single_cable_params();
  const ControlInput u{{{0.35 * kGravity, Vec3::Zero()}}};
  SystemDeriv f = [&](const SystemState& s) { return dynamics::single_taut_deriv(s, u, p, 1.0); };
  auto run = [&](double dt) {
    SystemState x = swinging_pair(p);
    const int n = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < n; ++i) x = rk4_step(f, x, dt);
    return x.payload.position;
  };
  const Vec3 ref = run(1e-4);
  const double e1 = (run(0.02) - ref).norm();
  const double e2 = (run(0.01) - ref).norm();
  EXPECT_NEAR(e1 / e2, 16.0, 3.0);
}

TEST(Rk4Step, NonFiniteDerivativeNamesTheBlock) {
  const SystemParams p = fixtures::single_cable_params();
  SystemDeriv f = [](const SystemState& s) {
    SystemRate r;
    r.robots.resize(s.robots.size());
    r.payload.acceleration.x() = std::nan("");
    return r;
  };
  try {
    rk4_step(f, swinging_pair(p), 0.01);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("payload"), std::string::npos);
  }
}

TEST(LocateEvent, LinearCrossing) {
  const double l = 0.5, v = 2.0;
  auto step = [&](double x, double tau) { return x + v * tau; };
  auto guard = [&](double x) { return x - l; };
  const auto loc = locate_event(step, l - 0.5 * v, 1.0, guard, 1e-9);
  EXPECT_NEAR(loc.time, 0.5, 1e-9);
  EXPECT_GE(guard(loc.state), 0.0);
}

TEST(LocateEvent, NoCrossingIsAnError) {
  auto step = [](double x, double tau) { return x + tau; };
  auto guard = [](double x) { return x - 10.0; };
  EXPECT_THROW(locate_event(step, 0.0, 1.0, guard), NumericError);
}

TEST(LocateEvent, FallingPayloadMatchesQuadraticRoot) {
  // Robot hovers, payload falls from 0.3 m below it: d(t) = 0.3 + g t^2 / 2.
  const SystemParams p = fixtures::single_cable_params();
  const ControlInput u{{{0.25 * kGravity, Vec3::Zero()}}};
  SystemState x;
  BodyState r;
  r.position = Vec3(0, 0, 1);
  x.robots = {r};
  x.payload.position = Vec3(0, 0, 0.7);
  SystemDeriv f = [&](const SystemState& s) { return dynamics::single_slack_deriv(s, u, p); };
  auto step = [&](const SystemState& s, double h) { return rk4_step(f, s, h); };
  auto guard = [&](const SystemState& s) {
    return (s.payload.position - s.robots[0].position).norm() - 0.5;
  };
  const auto loc = locate_event(step, x, 0.5, guard, 1e-10);
  EXPECT_NEAR(loc.time, std::sqrt(2.0 * 0.2 / kGravity), 1e-8);
}

TEST(InjectNoise, ZeroSigmaIsBitwiseIdentity) {
  Rng rng(32);
  const SystemParams p = fixtures::triangle_params();
  const SystemState x = fixtures::random_cable_state(
      rng, p, {rng.downward_unit(), rng.downward_unit(), rng.downward_unit()});
  NoiseSpec spec;
  spec.seed = 7;
  EXPECT_EQ(inject_noise(x, spec), x);
}

TEST(InjectNoise, FixedSeedIsDeterministic) {
  Rng rng(33);
  const SystemParams p = fixtures::triangle_params();
  const SystemState x = fixtures::random_cable_state(
      rng, p, {rng.downward_unit(), rng.downward_unit(), rng.downward_unit()});
  NoiseSpec spec{1e-3, 1e-3, 1e-3, 1e-3, 42};
  const SystemState a = inject_noise(x, spec);
  EXPECT_EQ(a, inject_noise(x, spec));
  spec.seed = 43;
  EXPECT_FALSE(a == inject_noise(x, spec));
}

TEST(InjectNoise, AttitudeAngleFollowsChiDistribution) {
  // |sigma| for sigma ~ N(0, s^2 I_3) has mean s * 2 sqrt(2 / pi).
  const double s = 1e-3;
  NoiseSpec spec;
  spec.attitude = s;
  NoiseGenerator gen(2024);
  const Quat q(Eigen::AngleAxisd(0.8, Vec3(0.2, -1, 0.4).normalized()));
  BodyState b;
  b.attitude = q;
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += rotation_angle_between(q, inject_noise(b, spec, gen).attitude);
  const double expected = s * 2.0 * std::sqrt(2.0 / kPi);
  EXPECT_NEAR(sum / n, expected, 0.05 * expected);
}

TEST(NoiseGenerator, GaussianMoments) {
  NoiseGenerator gen(5);
  double m1 = 0, m2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = gen.gaussian();
    m1 += v;
    m2 += v * v;
  }
  EXPECT_NEAR(m1 / n, 0.0, 0.01);
  EXPECT_NEAR(m2 / n, 1.0, 0.01);
}

TEST(Simulate, ZeroDurationLogsInitialStateOnly) {
  ScenarioSpec sc = config::load_scenario(fixtures::source_path("scenarios/hover_single.yaml"));
  sc.simulation.duration = 0.0;
  const SimResult r = simulate(sc);
  r.rethrow_if_failed();
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].t, 0.0);
  EXPECT_EQ(r.rows[0].state, sc.initial_state);
}

TEST(Simulate, SingleCableHoverSettles) {
  const ScenarioSpec sc =
      config::load_scenario(fixtures::source_path("scenarios/hover_single.yaml"));
  ASSERT_EQ(sc.simulation.duration, 10.0);
  const SimResult r = simulate(sc);
  r.rethrow_if_failed();
  const LogRow& last = r.rows.back();
  EXPECT_LT((last.state.payload.position - last.desired_position).norm(), 0.02);
  EXPECT_LE(r.max_geometry_residual, 1e-5);
  EXPECT_TRUE(r.events.empty());
}

TEST(Simulate, SlackDropHasOneInelasticCollision) {
  const ScenarioSpec sc = config::load_scenario(fixtures::source_path("scenarios/slack_drop.yaml"));
  const SimResult r = simulate(sc);
  r.rethrow_if_failed();
  ASSERT_EQ(r.resets.size(), 1u);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].slack_to_taut, std::vector<std::size_t>{0});
  const SystemState& after = r.resets[0].after;
  const Vec3 xi = (after.payload.position - after.robots[0].position).normalized();
  EXPECT_LE(std::abs(xi.dot(after.robots[0].velocity - after.payload.velocity)), 1e-9);
  // The collision happens once the payload has fallen to where the cable is
  // fully stretched.
  EXPECT_NEAR((r.resets[0].before.payload.position - r.resets[0].before.robots[0].position).norm(),
              0.5, 1e-6);
}

TEST(Simulate, RunsAreDeterministic) {
  ScenarioSpec sc = config::load_scenario(fixtures::source_path("scenarios/circle_multi.yaml"));
  sc.simulation.duration = 1.0;
  sc.noise = NoiseSpec{1e-3, 1e-3, 1e-3, 1e-3, 9};
  const SimResult a = simulate(sc);
  const SimResult b = simulate(sc);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) ASSERT_EQ(a.rows[i].state, b.rows[i].state);
}

TEST(CorrectDrift, ProjectsRobotBackOntoSphere) {
  const SystemParams p = fixtures::single_cable_params();
  SystemState x = swinging_pair(p);
  x.robots[0].position += Vec3(1e-4, 0, 0);
  const double before = correct_drift(x, p, CableStatus::all_taut(1));
  EXPECT_GT(before, 1e-6);
  EXPECT_NEAR(dynamics::cable_kinematics(x, p, 0).distance, 0.5, 1e-14);
  EXPECT_LE(correct_drift(x, p, CableStatus::all_taut(1)), 1e-14);
}

TEST(Rmse, KnownValues) {
  std::vector<LogRow> rows(2);
  rows[0].state.payload.position = Vec3(3, 0, 0);
  rows[1].state.payload.position = Vec3(0, 4, 0);
  EXPECT_DOUBLE_EQ(position_rmse(rows), std::sqrt((9.0 + 16.0) / 2.0));
  rows[1].state.payload.attitude = Quat(Eigen::AngleAxisd(0.2, e3()));
  EXPECT_NEAR(attitude_rmse(rows), std::sqrt(0.04 / 2.0), 1e-12);
}
