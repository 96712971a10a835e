#include "chiralfilm/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace chiralfilm {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

}  // namespace

void SurfaceSpec::validate() const {
  require(n_u >= 4 && n_v >= 4, "surface resolution must be at least 4x4");
  require(default_eps_max > 0.0, "default_eps_max must be positive");
  switch (kind) {
    case SurfaceKind::Sphere:
      require(radius > 0.0, "sphere radius must be positive");
      require(theta_cap > 0.0 && theta_cap < 0.5 * kPi, "sphere theta_cap must lie in (0, pi/2)");
      break;
    case SurfaceKind::Torus:
      require(major > 0.0 && minor > 0.0, "torus radii must be positive");
      require(minor < major, "degenerate torus: minor radius must be below major radius");
      break;
    case SurfaceKind::Cylinder:
      require(radius > 0.0 && height > 0.0, "cylinder radius and height must be positive");
      break;
    case SurfaceKind::FlatPatch:
      require(lx > 0.0 && ly > 0.0, "flat patch side lengths must be positive");
      break;
  }
}

std::array<double, 2> SurfaceSpec::u_bounds() const {
  switch (kind) {
    case SurfaceKind::Sphere: return {theta_cap, kPi - theta_cap};
    case SurfaceKind::Torus:
    case SurfaceKind::Cylinder: return {0.0, 2.0 * kPi};
    case SurfaceKind::FlatPatch: return {0.0, lx};
  }
  return {0.0, 1.0};
}

std::array<double, 2> SurfaceSpec::v_bounds() const {
  switch (kind) {
    case SurfaceKind::Sphere:
    case SurfaceKind::Torus: return {0.0, 2.0 * kPi};
    case SurfaceKind::Cylinder: return {-0.5 * height, 0.5 * height};
    case SurfaceKind::FlatPatch: return {0.0, ly};
  }
  return {0.0, 1.0};
}

bool SurfaceSpec::u_periodic() const {
  switch (kind) {
    case SurfaceKind::Sphere: return false;
    case SurfaceKind::Torus:
    case SurfaceKind::Cylinder: return true;
    case SurfaceKind::FlatPatch: return periodic_u;
  }
  return false;
}

bool SurfaceSpec::v_periodic() const {
  switch (kind) {
    case SurfaceKind::Sphere:
    case SurfaceKind::Torus: return true;
    case SurfaceKind::Cylinder: return false;
    case SurfaceKind::FlatPatch: return periodic_v;
  }
  return false;
}

Vec3 evaluate_point(const SurfaceSpec& spec, double u, double v) {
  switch (spec.kind) {
    case SurfaceKind::Sphere: {
      const double r = spec.radius;
      return {r * std::sin(u) * std::cos(v), r * std::sin(u) * std::sin(v), r * std::cos(u)};
    }
    case SurfaceKind::Torus: {
      const double ring = spec.major + spec.minor * std::cos(v);
      return {ring * std::cos(u), ring * std::sin(u), spec.minor * std::sin(v)};
    }
    case SurfaceKind::Cylinder:
      return {spec.radius * std::cos(u), spec.radius * std::sin(u), v};
    case SurfaceKind::FlatPatch:
      return {u, v, 0.0};
  }
  return Vec3::Zero();
}

SurfaceFrame evaluate_frame(const SurfaceSpec& spec, double u, double v) {
  SurfaceFrame f;
  f.xi = evaluate_point(spec, u, v);
  switch (spec.kind) {
    case SurfaceKind::Sphere: {
      const double st = std::sin(u), ct = std::cos(u), sp = std::sin(v), cp = std::cos(v);
      f.tau1 = Vec3(ct * cp, ct * sp, -st);
      f.tau2 = Vec3(-sp, cp, 0.0);
      f.normal = Vec3(st * cp, st * sp, ct);
      f.kappa1 = f.kappa2 = 1.0 / spec.radius;
      f.chart_metric = {spec.radius, spec.radius * st};
      break;
    }
    case SurfaceKind::Torus: {
      const double sp = std::sin(u), cp = std::cos(u), st = std::sin(v), ct = std::cos(v);
      const double ring = spec.major + spec.minor * ct;
      f.tau1 = Vec3(-sp, cp, 0.0);
      f.tau2 = Vec3(-st * cp, -st * sp, ct);
      f.normal = Vec3(ct * cp, ct * sp, st);
      f.kappa1 = ct / ring;
      f.kappa2 = 1.0 / spec.minor;
      f.chart_metric = {ring, spec.minor};
      break;
    }
    case SurfaceKind::Cylinder: {
      const double sp = std::sin(u), cp = std::cos(u);
      f.tau1 = Vec3(-sp, cp, 0.0);
      f.tau2 = Vec3::UnitZ();
      f.normal = Vec3(cp, sp, 0.0);
      f.kappa1 = 1.0 / spec.radius;
      f.kappa2 = 0.0;
      f.chart_metric = {spec.radius, 1.0};
      break;
    }
    case SurfaceKind::FlatPatch:
      f.tau1 = Vec3::UnitX();
      f.tau2 = Vec3::UnitY();
      f.normal = Vec3::UnitZ();
      f.chart_metric = {1.0, 1.0};
      break;
  }
  return f;
}

SurfaceGrid::SurfaceGrid(const SurfaceSpec& spec) : spec_(spec) {
  spec_.validate();
  const auto ub = spec_.u_bounds();
  const auto vb = spec_.v_bounds();
  du_ = (ub[1] - ub[0]) / spec_.n_u;
  dv_ = (vb[1] - vb[0]) / spec_.n_v;
  su_ = Stencil1D{spec_.n_u, du_, spec_.u_periodic()};
  sv_ = Stencil1D{spec_.n_v, dv_, spec_.v_periodic()};

  frames_.reserve(static_cast<std::size_t>(size()));
  for (int i = 0; i < spec_.n_u; ++i) {
    for (int j = 0; j < spec_.n_v; ++j) {
      SurfaceFrame f = evaluate_frame(spec_, u(i), v(j));
      f.area_weight = du_ * dv_ * f.chart_metric[0] * f.chart_metric[1];
      area_ += f.area_weight;
      budget_.kappa_max = std::max({budget_.kappa_max, std::abs(f.kappa1), std::abs(f.kappa2)});
      frames_.push_back(f);
    }
  }
  budget_.eps_max = budget_.kappa_max > 0.0 ? 0.5 / budget_.kappa_max : spec_.default_eps_max;
}

double SurfaceGrid::u(int i) const {
  const double lo = spec_.u_bounds()[0];
  return spec_.u_periodic() ? lo + i * du_ : lo + (i + 0.5) * du_;
}

double SurfaceGrid::v(int j) const {
  const double lo = spec_.v_bounds()[0];
  return spec_.v_periodic() ? lo + j * dv_ : lo + (j + 0.5) * dv_;
}

void SurfaceGrid::write_csv(std::ostream& os) const {
  os << "u,v,x,y,z,t1x,t1y,t1z,t2x,t2y,t2z,nx,ny,nz,k1,k2,w\n";
  char buf[64];
  auto put = [&](double x, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    os << buf << (last ? '\n' : ',');
  };
  for (int i = 0; i < n_u(); ++i) {
    for (int j = 0; j < n_v(); ++j) {
      const SurfaceFrame& f = frame(index(i, j));
      put(u(i));
      put(v(j));
      for (const Vec3* w : {&f.xi, &f.tau1, &f.tau2, &f.normal}) {
        put(w->x());
        put(w->y());
        put(w->z());
      }
      put(f.kappa1);
      put(f.kappa2);
      put(f.area_weight, true);
    }
  }
}

SurfaceGrid build_surface(const SurfaceSpec& spec) { return SurfaceGrid(spec); }

Vec3 tubular_point(const SurfaceFrame& frame, double eps, double s, const ThicknessBudget& budget) {
  if (!budget.admits(eps)) {
    std::ostringstream msg;
    msg << "thickness eps = " << eps << " outside (0, " << budget.eps_max << "]";
    throw InvalidInput(msg.str());
  }
  if (std::abs(s) > 1.0) throw InvalidInput("normal coordinate s must lie in [-1, 1]");
  return frame.xi + eps * s * frame.normal;
}

namespace {

template <class T>
std::vector<T> derivative_impl(const SurfaceGrid& grid, std::span<const T> values, int dir) {
  if (values.size() != static_cast<std::size_t>(grid.size())) {
    throw InvalidInput("field does not match the surface grid");
  }
  if (dir != 0 && dir != 1) throw InvalidInput("tangential direction index must be 0 or 1");
  std::vector<T> out(values.size());
  const int nu = grid.n_u(), nv = grid.n_v();
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int k = grid.index(i, j);
      const double stretch = grid.frame(k).chart_metric[static_cast<std::size_t>(dir)];
      T d;
      if (dir == 0) {
        d = grid.stencil_u().apply<T>(i, [&](int ii) { return values[static_cast<std::size_t>(grid.index(ii, j))]; });
      } else {
        d = grid.stencil_v().apply<T>(j, [&](int jj) { return values[static_cast<std::size_t>(grid.index(i, jj))]; });
      }
      out[static_cast<std::size_t>(k)] = d / stretch;
    }
  }
  return out;
}

}  // namespace

std::vector<Vec3> tangential_derivative(const SurfaceGrid& grid, std::span<const Vec3> values, int dir) {
  return derivative_impl<Vec3>(grid, values, dir);
}

std::vector<double> tangential_derivative(const SurfaceGrid& grid, std::span<const double> values, int dir) {
  return derivative_impl<double>(grid, values, dir);
}

}  // namespace chiralfilm
