#pragma once

#include "chiralfilm/energy.hpp"
#include "chiralfilm/surface.hpp"
#include "chiralfilm/target.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace chiralfilm {

enum class StepRule { BarzilaiBorwein, FixedBacktracking, LimitedMemoryBFGS };

struct MinimizeOptions {
  int max_iterations = 5000;
  /// Stop when the sup-norm of the tangent-projected gradient falls below
  /// gradient_tolerance * max(1, initial energy).
  double gradient_tolerance = 1e-6;
  StepRule step_rule = StepRule::BarzilaiBorwein;
  double armijo = 1e-4;
  double shrink = 0.5;
  int max_halvings = 30;
  /// Largest node displacement of the first trial step (and of every trial
  /// step under FixedBacktracking).
  double initial_step = 0.1;
  /// Curvature pairs kept by LimitedMemoryBFGS.
  int memory = 8;
  std::uint64_t seed = 1;

  void validate() const;
};

enum class Termination { Converged, MaxIterations, LineSearchFailure, StepCollapse };

std::string to_string(Termination t);

struct MinimizeReport {
  int iterations = 0;
  EnergyBreakdown final_energy;
  double final_gradient_norm = 0.0;
  std::vector<double> energy_trace;      // accepted totals, starting with the initial energy
  std::vector<double> gradient_trace;    // projected-gradient sup-norm per accepted iterate
  Termination termination = Termination::MaxIterations;
  double energy_scale = 1.0;

  /// iteration,energy,grad_norm rows.
  void write_trace_csv(std::ostream& os) const;
};

/// Energy evaluator: returns the breakdown and, when `gradient` is non-null,
/// fills the Euclidean gradient with respect to every node value.
using Objective = std::function<EnergyBreakdown(const DirectorField&, std::vector<Vec3>*)>;

/// Projected gradient descent on M^nodes.
///
/// The descent direction is minus the tangent projection of the gradient in
/// the quadrature metric (Euclidean gradient divided by each value's
/// quadrature weight). Each trial point is retracted node-wise by pi_M; trial
/// steps start from the Barzilai-Borwein length and are halved until the
/// Armijo condition holds, so accepted energies never increase.
/// LimitedMemoryBFGS replaces the direction by the two-loop quasi-Newton
/// direction in the same metric (tangent-projected, unit first trial step),
/// falling back to the gradient direction when it is not a descent direction.
/// Throws NumericalFailure on a non-finite energy.
std::pair<DirectorField, MinimizeReport> minimize(const Objective& objective, std::span<const double> metric_weights,
                                                  const TargetManifold& target, DirectorField initial,
                                                  const MinimizeOptions& options);

/// Convenience overload for one of the model's energy forms.
std::pair<DirectorField, MinimizeReport> minimize(const EnergyModel& model, EnergyForm form, double eps,
                                                  DirectorField initial, const MinimizeOptions& options);

/// Reproducible random field: each value is pi_M of a Gaussian sample.
DirectorField random_field(const SurfaceGrid& grid, const TargetManifold& target, Layout layout, int n_s,
                           std::uint64_t seed);

/// Field filled with pi_M(direction).
DirectorField constant_field(const SurfaceGrid& grid, const TargetManifold& target, Layout layout, int n_s,
                             const Vec3& direction);

}  // namespace chiralfilm
