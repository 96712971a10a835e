#include "chiralfilm/target.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>

namespace chiralfilm {

void TargetSpec::validate() const {
  if (projection_tolerance <= 0.0) throw InvalidInput("projection_tolerance must be positive");
  if (max_projection_iterations < 1) throw InvalidInput("max_projection_iterations must be at least 1");
  switch (kind) {
    case TargetKind::Sphere:
      if (!(radius > 0.0)) throw InvalidInput("target sphere radius must be positive");
      break;
    case TargetKind::Ellipsoid:
      if (!(semi_axes.minCoeff() > 0.0)) throw InvalidInput("ellipsoid semi-axes must be positive");
      break;
    case TargetKind::Custom:
      if (!custom.project || !custom.normal || !custom.signed_distance) {
        throw InvalidInput("custom target needs project, normal and signed_distance callbacks");
      }
      if (!(custom.admissible_radius > 0.0)) throw InvalidInput("custom target admissible radius must be positive");
      break;
  }
}

TargetManifold::TargetManifold(TargetSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

Vec3 TargetManifold::axes() const {
  return spec_.kind == TargetKind::Sphere ? Vec3::Constant(spec_.radius) : spec_.semi_axes;
}

double TargetManifold::admissible_radius() const {
  switch (spec_.kind) {
    case TargetKind::Sphere: return spec_.radius;
    case TargetKind::Ellipsoid: return 0.5 * spec_.semi_axes.minCoeff();
    case TargetKind::Custom: return spec_.custom.admissible_radius;
  }
  return 0.0;
}

// Closest point of the ellipsoid sum (x_i / a_i)^2 = 1: x_i = a_i^2 y_i / (a_i^2 + t)
// where t is the largest root of f(t) = sum (a_i y_i / (a_i^2 + t))^2 - 1.
// f is decreasing on (-min a_i^2, inf); Newton is safeguarded by bisection.
Vec3 TargetManifold::solve_multiplier(const Vec3& y, const Vec3& a) const {
  const Vec3 a2 = a.cwiseProduct(a);
  auto f = [&](double t) {
    double acc = -1.0;
    for (int i = 0; i < 3; ++i) {
      const double q = a(i) * y(i) / (a2(i) + t);
      acc += q * q;
    }
    return acc;
  };
  auto df = [&](double t) {
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double d = a2(i) + t;
      acc -= 2.0 * a2(i) * y(i) * y(i) / (d * d * d);
    }
    return acc;
  };

  double lo = -a2.minCoeff();
  double hi = a.maxCoeff() * y.norm() + 1.0;
  double t = 0.0;
  const double ft0 = f(t);
  if (ft0 > 0.0) lo = 0.0; else hi = 0.0;

  bool converged = false;
  const int max_iter = spec_.max_projection_iterations + 200;  // bisection fallback budget
  for (int it = 0; it < max_iter; ++it) {
    const double ft = f(t);
    if (ft == 0.0) {
      converged = true;
      break;
    }
    if (ft > 0.0) lo = t; else hi = t;
    double next = t - ft / df(t);
    if (!(next > lo && next < hi) || it >= spec_.max_projection_iterations) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(t)) || hi - lo <= 0.0) {
      converged = true;
      break;
    }
  }
  Vec3 x;
  for (int i = 0; i < 3; ++i) x(i) = a2(i) * y(i) / (a2(i) + t);

  const double level = x.cwiseQuotient(a).squaredNorm() - 1.0;
  if (!converged || !std::isfinite(level) || std::abs(level) > 1e3 * spec_.projection_tolerance) {
    std::ostringstream msg;
    msg << "ellipsoid projection did not converge for y = (" << y.transpose() << ")";
    throw NumericalFailure(msg.str());
  }
  return x;
}

Vec3 TargetManifold::project_newton(const Vec3& y) const {
  if (!y.allFinite()) throw NumericalFailure("projection of a non-finite point");
  if (spec_.kind == TargetKind::Custom) return spec_.custom.project(y);
  // outside a convex target the nearest point is unique; inside, the depth is bounded below by
  // (1 - |y/a|) min a, which rejects deep points before the solve
  const Vec3 a = axes();
  const double level = y.cwiseQuotient(a).norm();
  const bool inside = level < 1.0;
  if (inside && (1.0 - level) * a.minCoeff() >= admissible_radius()) {
    throw InvalidInput("point outside the admissible tubular neighbourhood of the target");
  }
  const Vec3 x = solve_multiplier(y, a);
  if (inside && (y - x).norm() >= admissible_radius()) {
    throw InvalidInput("point outside the admissible tubular neighbourhood of the target");
  }
  return x;
}

Vec3 TargetManifold::project(const Vec3& y) const {
  switch (spec_.kind) {
    case TargetKind::Sphere: {
      const double n = y.norm();
      if (!std::isfinite(n)) throw NumericalFailure("projection of a non-finite point");
      if (n == 0.0) throw InvalidInput("the centre of a spherical target has no nearest point");
      return (spec_.radius / n) * y;
    }
    case TargetKind::Ellipsoid:
      return project_newton(y);
    case TargetKind::Custom: {
      if (!y.allFinite()) throw NumericalFailure("projection of a non-finite point");
      if (!admissible(y)) throw InvalidInput("point outside the admissible tubular neighbourhood of the target");
      return spec_.custom.project(y);
    }
  }
  return y;
}

Vec3 TargetManifold::normal(const Vec3& sigma) const {
  if (spec_.kind != TargetKind::Custom) {
    const double level = sigma.cwiseQuotient(axes()).squaredNorm() - 1.0;
    if (std::abs(level) > 2e-9) throw InvalidInput("normal requested at a point that is not on the target");
  }
  switch (spec_.kind) {
    case TargetKind::Sphere: return sigma / spec_.radius;
    case TargetKind::Ellipsoid: return normal_extension(sigma);
    case TargetKind::Custom: return spec_.custom.normal(sigma);
  }
  return sigma;
}

double TargetManifold::signed_distance(const Vec3& y) const {
  switch (spec_.kind) {
    case TargetKind::Sphere: return y.norm() - spec_.radius;
    case TargetKind::Ellipsoid: {
      const Vec3 x = project_newton(y);
      const double d = (y - x).norm();
      return y.cwiseQuotient(spec_.semi_axes).squaredNorm() >= 1.0 ? d : -d;
    }
    case TargetKind::Custom: return spec_.custom.signed_distance(y);
  }
  return 0.0;
}

bool TargetManifold::admissible(const Vec3& y) const {
  if (!y.allFinite()) return false;
  switch (spec_.kind) {
    case TargetKind::Sphere: return y.norm() > 0.0;
    case TargetKind::Ellipsoid: {
      try {
        project_newton(y);
        return true;
      } catch (const InvalidInput&) {
        return false;
      } catch (const NumericalFailure&) {
        return false;
      }
    }
    case TargetKind::Custom: return std::abs(spec_.custom.signed_distance(y)) < admissible_radius();
  }
  return false;
}

Vec3 TargetManifold::tangent_project(const Vec3& sigma, const Vec3& g) const {
  const Vec3 n = normal(sigma);
  return g - g.dot(n) * n;
}

Vec3 TargetManifold::normal_extension(const Vec3& y) const {
  switch (spec_.kind) {
    case TargetKind::Sphere: return y.normalized();
    case TargetKind::Ellipsoid: {
      const Vec3 a = spec_.semi_axes;
      return y.cwiseQuotient(a.cwiseProduct(a)).normalized();
    }
    case TargetKind::Custom: return spec_.custom.normal(spec_.custom.project(y));
  }
  return y;
}

Mat3 TargetManifold::normal_extension_jacobian(const Vec3& y) const {
  switch (spec_.kind) {
    case TargetKind::Sphere: {
      const double r = y.norm();
      const Vec3 n = y / r;
      return (Mat3::Identity() - n * n.transpose()) / r;
    }
    case TargetKind::Ellipsoid: {
      const Vec3 inv_a2 = spec_.semi_axes.cwiseProduct(spec_.semi_axes).cwiseInverse();
      const Vec3 g = y.cwiseProduct(inv_a2);
      const double gn = g.norm();
      const Vec3 n = g / gn;
      return (Mat3::Identity() - n * n.transpose()) * inv_a2.asDiagonal() / gn;
    }
    case TargetKind::Custom: {
      constexpr double h = 1e-6;
      Mat3 jac;
      for (int c = 0; c < 3; ++c) {
        Vec3 e = Vec3::Zero();
        e(c) = h;
        jac.col(c) = (normal_extension(y + e) - normal_extension(y - e)) / (2.0 * h);
      }
      return jac;
    }
  }
  return Mat3::Zero();
}

}  // namespace chiralfilm
