#pragma once

// Feedback noise: zero-mean Gaussian perturbations of the state seen by the
// controller. Vector blocks are perturbed additively, attitudes by
// q (x) exp(sigma_q / 2).
//
// Samples come from std::mt19937_64 (fully specified by the standard)
// through a fixed Box-Muller transform, so a given seed yields the same
// sequence with every conforming standard library.

#include <cstdint>
#include <random>

#include "airlift/types.hpp"

namespace airlift {

struct NoiseSpec {
  double position = 0.0;          // m
  double velocity = 0.0;          // m/s
  double attitude = 0.0;          // rad, per tangent component
  double angular_velocity = 0.0;  // rad/s
  std::uint64_t seed = 0;

  bool enabled() const {
    return position > 0.0 || velocity > 0.0 || attitude > 0.0 || angular_velocity > 0.0;
  }
  bool operator==(const NoiseSpec&) const = default;
};

class NoiseGenerator {
 public:
  explicit NoiseGenerator(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal sample.
  double gaussian();
  Vec3 gaussian3(double sigma);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

BodyState inject_noise(const BodyState& x, const NoiseSpec& spec, NoiseGenerator& rng);
SystemState inject_noise(const SystemState& x, const NoiseSpec& spec, NoiseGenerator& rng);

/// One-shot form seeded from spec.seed.
SystemState inject_noise(const SystemState& x, const NoiseSpec& spec);

}  // namespace airlift
