#pragma once

#include "chiralfilm/target.hpp"
#include "chiralfilm/types.hpp"

#include <random>

namespace chiralfilm {

using Rng = std::mt19937_64;

/// Standard normal vector in R^3.
inline Vec3 gaussian_vector(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return {x, y, z};
}

/// Random point of M: a Gaussian sample (redrawn within 1e-3 of the origin)
/// pushed radially onto the level set, then projected. For a sphere this is
/// exactly the projection of the Gaussian sample.
Vec3 sample_on_target(const TargetManifold& target, Rng& rng);

}  // namespace chiralfilm
