#pragma once

#include "chiralfilm/surface.hpp"
#include "chiralfilm/target.hpp"
#include "chiralfilm/types.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace chiralfilm {

enum class PerturbationKind { Zero, BulkDMI, InterfacialDMI, AnisotropicDMI, Temperature, Custom };

enum class ProfileKind { Constant, Affine, Banded };

/// Scalar field on the base surface, evaluated at the embedded point:
///   Constant  c0
///   Affine    c0 + c . x
///   Banded    c0 + c1 x3^2
struct ScalarProfile {
  ProfileKind kind = ProfileKind::Constant;
  double c0 = 1.0;
  Vec3 c = Vec3::Zero();
  double c1 = 0.0;

  double operator()(const Vec3& x) const;
};

using CustomK = std::function<Mat3(const SurfaceFrame&, const Vec3&)>;
/// Returns dK/dsigma_c for c = 0, 1, 2.
using CustomKDerivative = std::function<std::array<Mat3, 3>(const SurfaceFrame&, const Vec3&)>;

/// Perturbation K(xi, sigma): column w of K is K applied to w.
///   BulkDMI        K w = kappa (w x sigma)
///   InterfacialDMI K w = kappa [(n . sigma) w - (w . sigma) n]
///   AnisotropicDMI K w = (J w) x sigma
///   Temperature    K w = (grad Ms . w) sigma + (J w) x sigma
struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::Zero;
  double kappa = 1.0;
  Mat3 J = Mat3::Identity();
  ScalarProfile ms;  // saturation profile for Temperature
  CustomK custom;
  CustomKDerivative custom_derivative;  // optional; finite differences otherwise

  void validate() const;
};

/// K at one frame. `ms_gradient` is the tangential gradient of Ms (Temperature only).
Mat3 eval_K(const PerturbationSpec& spec, const SurfaceFrame& frame, const Vec3& sigma,
            const Vec3& ms_gradient = Vec3::Zero());

/// (K tau1, K tau2).
std::array<Vec3, 2> eval_K_tangential(const PerturbationSpec& spec, const SurfaceFrame& frame, const Vec3& sigma,
                                      const Vec3& ms_gradient = Vec3::Zero());

/// Perturbation bound to a surface grid; caches the xi-dependent data
/// (tangential gradient of Ms, computed with the field stencil).
class Perturbation {
 public:
  Perturbation(PerturbationSpec spec, const SurfaceGrid& grid);

  const PerturbationSpec& spec() const { return spec_; }
  const SurfaceGrid& grid() const { return *grid_; }

  Mat3 K(int node, const Vec3& sigma) const;

  /// d/dsigma of sum_ab adjoint_ab K_ab(xi_node, sigma).
  Vec3 sigma_gradient(int node, const Vec3& sigma, const Mat3& adjoint) const;

  const Vec3& ms_gradient(int node) const { return ms_gradient_[static_cast<std::size_t>(node)]; }
  double ms(int node) const { return ms_values_[static_cast<std::size_t>(node)]; }

 private:
  PerturbationSpec spec_;
  const SurfaceGrid* grid_;
  std::vector<double> ms_values_;
  std::vector<Vec3> ms_gradient_;
};

enum class TensorKind { Identity, ScalarField };

/// Elliptic tensor A(xi) = a(xi) I.
struct EllipticTensorSpec {
  TensorKind kind = TensorKind::Identity;
  ScalarProfile a;
};

double eval_A(const EllipticTensorSpec& spec, const SurfaceFrame& frame);

class EllipticTensor {
 public:
  /// Throws InvalidInput unless min a > 0 over the grid.
  EllipticTensor(EllipticTensorSpec spec, const SurfaceGrid& grid);

  const EllipticTensorSpec& spec() const { return spec_; }
  bool is_identity() const { return spec_.kind == TensorKind::Identity; }
  double operator()(int node) const { return values_[static_cast<std::size_t>(node)]; }
  double lambda() const { return lambda_; }
  double Lambda() const { return Lambda_; }

 private:
  EllipticTensorSpec spec_;
  std::vector<double> values_;
  double lambda_ = 1.0;
  double Lambda_ = 1.0;
};

/// Empirical bound on |K|_F and its Lipschitz quotient in sigma over random
/// (node, sigma in M) draws, times 1.1.
double estimate_cK(const PerturbationSpec& spec, const SurfaceGrid& grid, const TargetManifold& target,
                   int samples, std::uint64_t seed = 7);

}  // namespace chiralfilm
