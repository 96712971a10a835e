#pragma once

#include "chiralfilm/perturbation.hpp"
#include "chiralfilm/surface.hpp"
#include "chiralfilm/target.hpp"
#include "chiralfilm/types.hpp"

#include <span>
#include <vector>

namespace chiralfilm {

enum class Layout { Surface, Thin };

/// Grid of R^3 values, either on N (Surface) or on N x {s_0..s_{n_s-1}} (Thin)
/// with s-layers uniform on [-1, 1] including the endpoints.
/// Thin values are stored layer-major: values[layer * n_nodes + node].
struct DirectorField {
  Layout layout = Layout::Surface;
  int n_nodes = 0;
  int n_s = 1;
  std::vector<Vec3> values;

  static DirectorField surface(int n_nodes, const Vec3& fill);
  static DirectorField thin(int n_nodes, int n_s, const Vec3& fill);

  int layers() const { return layout == Layout::Thin ? n_s : 1; }
  std::size_t size() const { return values.size(); }

  Vec3& at(int node, int layer = 0) { return values[static_cast<std::size_t>(layer * n_nodes + node)]; }
  const Vec3& at(int node, int layer = 0) const { return values[static_cast<std::size_t>(layer * n_nodes + node)]; }

  /// s coordinate of a layer; 0 for Surface fields.
  double s(int layer) const;

  /// Projects every value onto M.
  void project_onto(const TargetManifold& target);
  double max_distance_to(const TargetManifold& target) const;
};

/// Constant extension in s of a Surface field.
DirectorField extend_constant(const DirectorField& surface, int n_s);

/// Trapezoid weights on the uniform s-layers (they sum to |I| = 2).
std::vector<double> s_weights(int n_s);

struct EnergyBreakdown {
  double tangential = 0.0;
  double normal_or_anisotropy = 0.0;
  double total = 0.0;

  static EnergyBreakdown make(double tangential, double normal) { return {tangential, normal, tangential + normal}; }
  bool operator==(const EnergyBreakdown&) const = default;
};

enum class EnergyForm {
  Thin,          // pull-back energy on N x I, thickness eps
  Limit,         // Gamma-limit surface energy
  LimitGeneral,  // Gamma-limit with elliptic tensor A
};

/// Discrete energies and their exact gradients with respect to node values.
///
/// Quadrature: midpoint area weights on N, trapezoid in s. Derivatives use the
/// second-order chart stencil (tangential) and the s stencil (normal). The
/// gradient is the reverse accumulation through those stencils and through
/// K(u), n_M(u); it is the gradient of the discrete sum itself.
class EnergyModel {
 public:
  /// `tensor` may be null (A = I). It enters the thin energy and LimitGeneral.
  EnergyModel(const SurfaceGrid& grid, const TargetManifold& target, const Perturbation& perturbation,
              const EllipticTensor* tensor = nullptr);

  const SurfaceGrid& grid() const { return *grid_; }
  const TargetManifold& target() const { return *target_; }
  const Perturbation& perturbation() const { return *pert_; }
  const EllipticTensor* tensor() const { return tensor_; }

  /// E^eps(u) = 1/2 int sum_i |a h_i d_tau_i u + K tau_i|^2 sqrt(g)
  ///          + 1/2 int |a eps^-1 d_s u + K n|^2 sqrt(g).
  EnergyBreakdown thin(const DirectorField& field, double eps, std::vector<Vec3>* gradient = nullptr) const;

  /// E_N(u) = sum_i int |d_tau_i u + K tau_i|^2 + int (K n . n_M(u))^2.
  EnergyBreakdown limit(const DirectorField& field, std::vector<Vec3>* gradient = nullptr) const;

  /// Generalised limit with A = a I:
  /// sum_i int |a d_tau_i u + K tau_i|^2 + int ((A^-1 K n . n_M) / (A^-1 n_M . n_M))^2.
  EnergyBreakdown limit_general(const DirectorField& field, std::vector<Vec3>* gradient = nullptr) const;

  EnergyBreakdown evaluate(EnergyForm form, const DirectorField& field, double eps,
                           std::vector<Vec3>* gradient = nullptr) const;

  /// Quadrature weight of each value (area weight times s-weight).
  std::vector<double> metric_weights(const DirectorField& field) const;

  double a(int node) const { return tensor_ ? (*tensor_)(node) : 1.0; }

 private:
  void check_layout(const DirectorField& field, Layout expected) const;

  const SurfaceGrid* grid_;
  const TargetManifold* target_;
  const Perturbation* pert_;
  const EllipticTensor* tensor_;
};

EnergyBreakdown eval_thin_energy(const DirectorField& field, const SurfaceGrid& grid, const TargetManifold& target,
                                 const Perturbation& perturbation, double eps,
                                 const EllipticTensor* tensor = nullptr);

EnergyBreakdown eval_limit_energy(const DirectorField& field, const SurfaceGrid& grid, const TargetManifold& target,
                                  const Perturbation& perturbation);

EnergyBreakdown eval_limit_energy_general(const DirectorField& field, const SurfaceGrid& grid,
                                          const TargetManifold& target, const Perturbation& perturbation,
                                          const EllipticTensor& tensor);

/// Euclidean gradient of the chosen discrete energy (eps only used for Thin).
std::vector<Vec3> energy_gradient(EnergyForm form, const DirectorField& field, const SurfaceGrid& grid,
                                  const TargetManifold& target, const Perturbation& perturbation, double eps = 0.0,
                                  const EllipticTensor* tensor = nullptr);

/// d0 = ((n_M (x) n_M) - I) K(u) n_N / a, tangent to M at u.
std::vector<Vec3> optimal_corrector(const DirectorField& field, const SurfaceGrid& grid, const TargetManifold& target,
                                    const Perturbation& perturbation, const EllipticTensor* tensor = nullptr);

/// u*_eps(xi, s) = pi_M(u0(xi) + eps s d0(xi)) on n_s layers. Layers where the
/// shift vanishes copy u0 exactly. Throws InvalidInput when a shifted point
/// leaves the admissible neighbourhood of M.
DirectorField recovery_field(const DirectorField& u0, std::span<const Vec3> d0, double eps, int n_s,
                             const TargetManifold& target);

/// H^1 distance on N x I between a Thin field and a Surface field extended
/// constantly in s (base measure, no metric factors).
double h1_distance(const DirectorField& thin, const DirectorField& surface, const SurfaceGrid& grid);

/// int |d_s u|^2 / int (|d_s u|^2 + |grad_xi u|^2); zero for a constant field.
double s_derivative_share(const DirectorField& thin, const SurfaceGrid& grid);

}  // namespace chiralfilm
