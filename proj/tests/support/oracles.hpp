#pragma once

#include "chiralfilm/energy.hpp"
#include "chiralfilm/perturbation.hpp"
#include "chiralfilm/surface.hpp"
#include "chiralfilm/target.hpp"

#include <functional>

namespace oracle {

using chiralfilm::DirectorField;
using chiralfilm::Mat3;
using chiralfilm::Vec3;

/// 1/(2 eps) * int over the film of |Dv + K(v)|^2, assembled in physical space:
/// node positions psi(xi, s) are differenced to get the 3x3 Jacobian, the field is
/// differenced in the same chart, and Dv = (chart derivatives) * Jacobian^-1.
double direct_film_energy(const DirectorField& thin, const chiralfilm::SurfaceGrid& grid,
                          const chiralfilm::Perturbation& pert, double eps);

/// eps^-1 |det D psi| / (|x_u| |x_v|) by central differences of the closed-form embedding.
double fd_volume_factor(const chiralfilm::SurfaceSpec& spec, double u, double v, double eps, double s,
                        double h = 1e-5);

/// Central difference of energy with respect to the three components of one value.
Vec3 fd_value_gradient(const std::function<double(const DirectorField&)>& energy, DirectorField field,
                       std::size_t value, double h = 1e-5);

/// kappa^2 * int over the band of (1 + (n . e3)^2), composite Simpson in colatitude.
double zone_integral(double theta_cap, double kappa, int intervals = 200000);

/// Nearest point on the ellipsoid by dense sampling plus local refinement.
Vec3 brute_force_ellipsoid_projection(const Vec3& semi_axes, const Vec3& y);

}  // namespace oracle
