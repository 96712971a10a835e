#pragma once

#include "chiralfilm/stencil.hpp"
#include "chiralfilm/types.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace chiralfilm {

enum class SurfaceKind { Sphere, Torus, Cylinder, FlatPatch };

/// Parametric base surface whose chart lines are orthogonal and principal.
///
/// Charts:
///   Sphere    u = colatitude in [theta_cap, pi - theta_cap], v = longitude (periodic)
///   Torus     u = angle about the axis (periodic), v = tube angle (periodic)
///   Cylinder  u = angle (periodic), v = height in [-h/2, h/2]
///   FlatPatch u = x in [0, lx], v = y in [0, ly], periodicity per flag
struct SurfaceSpec {
  SurfaceKind kind = SurfaceKind::Sphere;
  double radius = 1.0;      // sphere, cylinder
  double theta_cap = 0.15;  // sphere
  double major = 2.0;       // torus
  double minor = 0.5;       // torus
  double height = 1.0;      // cylinder
  double lx = 1.0;          // flat patch
  double ly = 1.0;          // flat patch
  bool periodic_u = false;  // flat patch only; fixed by kind otherwise
  bool periodic_v = false;
  int n_u = 64;
  int n_v = 64;
  double default_eps_max = 1.0;  // used when the surface is flat

  /// Throws InvalidInput when a length or resolution is out of range.
  void validate() const;

  std::array<double, 2> u_bounds() const;
  std::array<double, 2> v_bounds() const;
  bool u_periodic() const;
  bool v_periodic() const;
};

/// Per-node differential geometry of the base surface.
///
/// Sign convention: the normal is outward and d(normal)/d(tau_i) = kappa_i tau_i,
/// so the unit sphere has kappa_1 = kappa_2 = +1.
struct SurfaceFrame {
  Vec3 xi = Vec3::Zero();
  Vec3 tau1 = Vec3::UnitX();
  Vec3 tau2 = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  double area_weight = 0.0;
  std::array<double, 2> chart_metric{1.0, 1.0};  // |dx/du|, |dx/dv|

  double mean_curvature() const { return 0.5 * (kappa1 + kappa2); }
  double gaussian_curvature() const { return kappa1 * kappa2; }
};

struct ThicknessBudget {
  double kappa_max = 0.0;
  double eps_max = 1.0;
  double c_N = 9.0 / 4.0;

  bool admits(double eps) const { return eps > 0.0 && eps <= eps_max; }
};

/// Closed-form frame at an arbitrary chart point (area_weight left at zero).
SurfaceFrame evaluate_frame(const SurfaceSpec& spec, double u, double v);

/// Embedding x(u, v) only.
Vec3 evaluate_point(const SurfaceSpec& spec, double u, double v);

/// Immutable grid of frames. Node (i, j) sits at index i * n_v + j.
/// Non-periodic chart coordinates use cell-centred nodes, periodic ones start
/// at the lower bound; area weights are the midpoint rule.
class SurfaceGrid {
 public:
  explicit SurfaceGrid(const SurfaceSpec& spec);

  const SurfaceSpec& spec() const { return spec_; }
  int n_u() const { return spec_.n_u; }
  int n_v() const { return spec_.n_v; }
  int size() const { return spec_.n_u * spec_.n_v; }
  int index(int i, int j) const { return i * spec_.n_v + j; }

  double u(int i) const;
  double v(int j) const;
  double du() const { return du_; }
  double dv() const { return dv_; }

  const SurfaceFrame& frame(int node) const { return frames_[static_cast<std::size_t>(node)]; }
  std::span<const SurfaceFrame> frames() const { return frames_; }
  const ThicknessBudget& budget() const { return budget_; }
  double area() const { return area_; }

  const Stencil1D& stencil_u() const { return su_; }
  const Stencil1D& stencil_v() const { return sv_; }

  /// Writes u,v,x,y,z,t1x..t1z,t2x..t2z,nx..nz,k1,k2,w rows.
  void write_csv(std::ostream& os) const;

 private:
  SurfaceSpec spec_;
  double du_ = 0.0;
  double dv_ = 0.0;
  std::vector<SurfaceFrame> frames_;
  ThicknessBudget budget_;
  double area_ = 0.0;
  Stencil1D su_;
  Stencil1D sv_;
};

SurfaceGrid build_surface(const SurfaceSpec& spec);

/// psi_eps(xi, s) = xi + eps s n(xi). Throws InvalidInput when eps is outside
/// the budget or |s| > 1.
Vec3 tubular_point(const SurfaceFrame& frame, double eps, double s, const ThicknessBudget& budget);

/// sqrt(g_eps) = (1 + eps s k1)(1 + eps s k2).
inline double metric_volume_factor(double kappa1, double kappa2, double eps, double s) {
  return (1.0 + eps * s * kappa1) * (1.0 + eps * s * kappa2);
}

/// h_{i,eps} = 1 / (1 + eps s k_i).
inline double metric_tangent_coeff(double kappa, double eps, double s) {
  return 1.0 / (1.0 + eps * s * kappa);
}

/// Derivative along tau_dir (dir = 0 or 1) of a nodal field, via the chart:
/// d_tau f = (1 / |dx/du_dir|) df/du_dir with the second-order stencil.
std::vector<Vec3> tangential_derivative(const SurfaceGrid& grid, std::span<const Vec3> values, int dir);
std::vector<double> tangential_derivative(const SurfaceGrid& grid, std::span<const double> values, int dir);

}  // namespace chiralfilm
