#pragma once

#include "chiralfilm/types.hpp"

#include <functional>

namespace chiralfilm {

enum class TargetKind { Sphere, Ellipsoid, Custom };

/// User-supplied target: nearest-point projection, unit normal at points of
/// M, and signed distance. The admissible radius bounds |signed distance| for
/// which the projection is trusted.
struct CustomTarget {
  std::function<Vec3(const Vec3&)> project;
  std::function<Vec3(const Vec3&)> normal;
  std::function<double(const Vec3&)> signed_distance;
  double admissible_radius = 0.0;
};

struct TargetSpec {
  TargetKind kind = TargetKind::Sphere;
  double radius = 1.0;
  Vec3 semi_axes{2.0, 1.0, 1.0};
  double projection_tolerance = 1e-12;
  int max_projection_iterations = 50;
  CustomTarget custom;

  void validate() const;
};

/// Closed convex constraint manifold M in R^3.
class TargetManifold {
 public:
  explicit TargetManifold(TargetSpec spec);

  const TargetSpec& spec() const { return spec_; }

  /// Nearest point of M. Throws InvalidInput outside the admissible
  /// neighbourhood and NumericalFailure if the Newton/bisection solve fails.
  Vec3 project(const Vec3& y) const;

  /// Outward unit normal at sigma; sigma must lie on M to 1e-9.
  Vec3 normal(const Vec3& sigma) const;

  /// Positive outside, negative inside.
  double signed_distance(const Vec3& y) const;

  /// g - (g . n) n.
  Vec3 tangent_project(const Vec3& sigma, const Vec3& g) const;

  /// Largest depth inside M for which the projection is admissible
  /// (exclusive bound). Points outside a sphere or ellipsoid are always admissible.
  double admissible_radius() const;

  /// True when project(y) is defined: y outside M, or inside with depth below admissible_radius().
  bool admissible(const Vec3& y) const;

  /// Smooth extension of the normal off M (gradient of the implicit function,
  /// normalised), and its Jacobian. Used by the energies so that their
  /// gradients are defined for arbitrary node values.
  Vec3 normal_extension(const Vec3& y) const;
  Mat3 normal_extension_jacobian(const Vec3& y) const;

  /// Ellipsoid projection through the Lagrange-multiplier Newton solve, usable
  /// for a sphere as well (treated as an ellipsoid with equal axes).
  Vec3 project_newton(const Vec3& y) const;

 private:
  Vec3 axes() const;
  Vec3 solve_multiplier(const Vec3& y, const Vec3& a) const;

  TargetSpec spec_;
};

}  // namespace chiralfilm
