#include "airlift/noise.hpp"

#include <cmath>

namespace airlift {

double NoiseGenerator::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double NoiseGenerator::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

Vec3 NoiseGenerator::gaussian3(double sigma) {
  const double a = gaussian();
  const double b = gaussian();
  const double c = gaussian();
  return sigma * Vec3(a, b, c);
}

BodyState inject_noise(const BodyState& x, const NoiseSpec& spec, NoiseGenerator& rng) {
  BodyState out = x;
  if (spec.position > 0.0) out.position += rng.gaussian3(spec.position);
  if (spec.velocity > 0.0) out.velocity += rng.gaussian3(spec.velocity);
  if (spec.attitude > 0.0) out.attitude = quat_boxplus(x.attitude, rng.gaussian3(spec.attitude));
  if (spec.angular_velocity > 0.0) out.angular_velocity += rng.gaussian3(spec.angular_velocity);
  return out;
}

SystemState inject_noise(const SystemState& x, const NoiseSpec& spec, NoiseGenerator& rng) {
  if (!spec.enabled()) return x;
  SystemState out;
  out.payload = inject_noise(x.payload, spec, rng);
  out.robots.reserve(x.robots.size());
  for (const BodyState& r : x.robots) out.robots.push_back(inject_noise(r, spec, rng));
  return out;
}

SystemState inject_noise(const SystemState& x, const NoiseSpec& spec) {
  NoiseGenerator rng(spec.seed);
  return inject_noise(x, spec, rng);
}

}  // namespace airlift
