#include "chiralfilm/perturbation.hpp"

#include "chiralfilm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace chiralfilm {

double ScalarProfile::operator()(const Vec3& x) const {
  switch (kind) {
    case ProfileKind::Constant: return c0;
    case ProfileKind::Affine: return c0 + c.dot(x);
    case ProfileKind::Banded: return c0 + c1 * x.z() * x.z();
  }
  return c0;
}

void PerturbationSpec::validate() const {
  if (!std::isfinite(kappa)) throw InvalidInput("perturbation kappa must be finite");
  if (!J.allFinite()) throw InvalidInput("perturbation J must be finite");
  if (kind == PerturbationKind::Custom && !custom) throw InvalidInput("custom perturbation needs a K callback");
}

namespace {

Mat3 k_matrix(const PerturbationSpec& spec, const SurfaceFrame& frame, const Vec3& sigma, const Vec3& ms_gradient) {
  switch (spec.kind) {
    case PerturbationKind::Zero: return Mat3::Zero();
    case PerturbationKind::BulkDMI: return -spec.kappa * cross_matrix(sigma);
    case PerturbationKind::InterfacialDMI: {
      const Vec3& n = frame.normal;
      return spec.kappa * (n.dot(sigma) * Mat3::Identity() - n * sigma.transpose());
    }
    case PerturbationKind::AnisotropicDMI: return -cross_matrix(sigma) * spec.J;
    case PerturbationKind::Temperature:
      return sigma * ms_gradient.transpose() - cross_matrix(sigma) * spec.J;
    case PerturbationKind::Custom: {
      Mat3 k = spec.custom(frame, sigma);
      if (!k.allFinite()) throw NumericalFailure("custom perturbation returned non-finite entries");
      return k;
    }
  }
  return Mat3::Zero();
}

}  // namespace

Mat3 eval_K(const PerturbationSpec& spec, const SurfaceFrame& frame, const Vec3& sigma, const Vec3& ms_gradient) {
  return k_matrix(spec, frame, sigma, ms_gradient);
}

std::array<Vec3, 2> eval_K_tangential(const PerturbationSpec& spec, const SurfaceFrame& frame, const Vec3& sigma,
                                      const Vec3& ms_gradient) {
  const Mat3 k = k_matrix(spec, frame, sigma, ms_gradient);
  return {k * frame.tau1, k * frame.tau2};
}

Perturbation::Perturbation(PerturbationSpec spec, const SurfaceGrid& grid) : spec_(std::move(spec)), grid_(&grid) {
  spec_.validate();
  const auto n = static_cast<std::size_t>(grid.size());
  ms_values_.resize(n);
  ms_gradient_.assign(n, Vec3::Zero());
  for (std::size_t k = 0; k < n; ++k) ms_values_[k] = spec_.ms(grid.frame(static_cast<int>(k)).xi);
  if (spec_.kind == PerturbationKind::Temperature) {
    const auto d1 = tangential_derivative(grid, std::span<const double>(ms_values_), 0);
    const auto d2 = tangential_derivative(grid, std::span<const double>(ms_values_), 1);
    for (std::size_t k = 0; k < n; ++k) {
      const SurfaceFrame& f = grid.frame(static_cast<int>(k));
      ms_gradient_[k] = d1[k] * f.tau1 + d2[k] * f.tau2;
    }
  }
}

Mat3 Perturbation::K(int node, const Vec3& sigma) const {
  return k_matrix(spec_, grid_->frame(node), sigma, ms_gradient(node));
}

Vec3 Perturbation::sigma_gradient(int node, const Vec3& sigma, const Mat3& adjoint) const {
  const SurfaceFrame& f = grid_->frame(node);
  Vec3 out;
  switch (spec_.kind) {
    case PerturbationKind::Zero: return Vec3::Zero();
    case PerturbationKind::Custom: {
      if (spec_.custom_derivative) {
        const auto dk = spec_.custom_derivative(f, sigma);
        for (int c = 0; c < 3; ++c) out(c) = adjoint.cwiseProduct(dk[static_cast<std::size_t>(c)]).sum();
        return out;
      }
      constexpr double h = 1e-7;
      for (int c = 0; c < 3; ++c) {
        Vec3 e = Vec3::Zero();
        e(c) = h;
        const Mat3 dk = (k_matrix(spec_, f, sigma + e, Vec3::Zero()) - k_matrix(spec_, f, sigma - e, Vec3::Zero())) / (2.0 * h);
        out(c) = adjoint.cwiseProduct(dk).sum();
      }
      return out;
    }
    default:
      // Every preset is linear in sigma: dK/dsigma_c = K(e_c).
      for (int c = 0; c < 3; ++c) {
        out(c) = adjoint.cwiseProduct(k_matrix(spec_, f, Vec3::Unit(c), ms_gradient(node))).sum();
      }
      return out;
  }
}

double eval_A(const EllipticTensorSpec& spec, const SurfaceFrame& frame) {
  return spec.kind == TensorKind::Identity ? 1.0 : spec.a(frame.xi);
}

EllipticTensor::EllipticTensor(EllipticTensorSpec spec, const SurfaceGrid& grid) : spec_(std::move(spec)) {
  values_.resize(static_cast<std::size_t>(grid.size()));
  for (int k = 0; k < grid.size(); ++k) values_[static_cast<std::size_t>(k)] = eval_A(spec_, grid.frame(k));
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  lambda_ = *lo;
  Lambda_ = *hi;
  if (!(lambda_ > 0.0) || !std::isfinite(Lambda_)) {
    throw InvalidInput("elliptic tensor must be uniformly positive on the surface");
  }
}

double estimate_cK(const PerturbationSpec& spec, const SurfaceGrid& grid, const TargetManifold& target, int samples,
                   std::uint64_t seed) {
  if (samples < 1000) throw InvalidInput("estimate_cK needs at least 1000 samples");
  if (spec.kind == PerturbationKind::Zero) return 0.0;
  const Perturbation pert(spec, grid);
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, grid.size() - 1);
  double bound = 0.0;
  for (int i = 0; i < samples; ++i) {
    const int node = pick(rng);
    const Vec3 s1 = sample_on_target(target, rng);
    const Vec3 s2 = sample_on_target(target, rng);
    const Mat3 k1 = pert.K(node, s1);
    const Mat3 k2 = pert.K(node, s2);
    bound = std::max({bound, k1.norm(), k2.norm()});
    const double dist = (s1 - s2).norm();
    if (dist > 1e-12) bound = std::max(bound, (k1 - k2).norm() / dist);
  }
  return 1.1 * bound;
}

Vec3 sample_on_target(const TargetManifold& target, Rng& rng) {
  Vec3 g = gaussian_vector(rng);
  while (g.norm() < 1e-3) g = gaussian_vector(rng);
  const TargetSpec& spec = target.spec();
  switch (spec.kind) {
    case TargetKind::Sphere: return target.project(g);
    case TargetKind::Ellipsoid: {
      const Vec3 dir = g.normalized();
      const double scale = 1.0 / std::sqrt(dir.cwiseQuotient(spec.semi_axes).squaredNorm());
      return target.project(scale * dir);
    }
    case TargetKind::Custom: return target.project(target.spec().custom.project(g));
  }
  return g;
}

}  // namespace chiralfilm
