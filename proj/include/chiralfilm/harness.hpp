#pragma once

#include "chiralfilm/energy.hpp"
#include "chiralfilm/minimizer.hpp"
#include "chiralfilm/perturbation.hpp"
#include "chiralfilm/surface.hpp"
#include "chiralfilm/target.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace chiralfilm {

enum class WarmStart { LimitFirst, Independent };
enum class InitialGuess { Constant, Random };

struct SweepConfig {
  SurfaceSpec surface;
  TargetSpec target;
  PerturbationSpec perturbation;
  EllipticTensorSpec tensor;
  std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  int n_s = 8;
  MinimizeOptions minimizer;
  WarmStart warm_start = WarmStart::LimitFirst;
  InitialGuess initial = InitialGuess::Constant;
  Vec3 initial_direction{0.0, 0.0, 1.0};
  int restarts = 0;  // extra random starts for the limit minimization
  int identity_samples = 1000;
  std::uint64_t seed = 1;
  int threads = 1;

  /// eps strictly decreasing and inside the thickness budget, n_s >= 4.
  void validate(const ThicknessBudget& budget) const;
};

/// Smooth random field: pi_M(c + P(x)) with c on M and P a bounded affine plus
/// sinusoidal perturbation of the embedded point x = psi_eps(xi, s) (xi for
/// Surface fields). Resampling on a finer grid samples the same field.
DirectorField smooth_random_field(const SurfaceGrid& grid, const TargetManifold& target, Layout layout, int n_s,
                                  double eps, std::uint64_t seed);

struct IdentityCheck {
  std::string name;
  double residual = 0.0;
  double scale = 0.0;
  bool vanishing_predicted = false;
  bool pass = false;
};

/// Max over random (node, sigma on M) samples of the anisotropy density
/// (K n_N . n_M)^2, plus the corrector identity |d0 + K n_N|^2 = (K n_N . n_M)^2.
/// Vanishing is predicted for interfacial DMI (any target), for bulk,
/// anisotropic and temperature kinds on a spherical target, and for K = 0.
std::vector<IdentityCheck> check_vanishing_identities(const SurfaceGrid& grid, const TargetManifold& target,
                                                      const PerturbationSpec& spec, int samples,
                                                      std::uint64_t seed = 11);

struct PlanarCrosscheck {
  double max_relative_discrepancy = 0.0;
  double constant_e3_limit = 0.0;
  double constant_e3_expanded = 0.0;
  double constant_e1_limit = 0.0;
  double constant_e1_expanded = 0.0;
  double area = 0.0;
  double kappa = 1.0;
};

/// Limit energy of interfacial DMI on a flat patch (target unit sphere) against
/// the expanded form |grad u|^2 + 2 kappa (u3 div u - u . grad u3) + kappa^2 (1 + u3^2)
/// on 20 smooth random fields.
PlanarCrosscheck planar_interfacial_crosscheck(int resolution, double kappa = 1.0, std::uint64_t seed = 5);

/// Expanded planar interfacial density integrated with the grid quadrature.
double planar_interfacial_expanded(const DirectorField& field, const SurfaceGrid& grid, double kappa);

struct EpsResult {
  double eps = 0.0;
  bool failed = false;
  std::string failure;
  EnergyBreakdown min_energy;
  int iterations = 0;
  std::string termination;
  double gradient_norm = 0.0;
  EnergyBreakdown recovery_energy;
  double gap = 0.0;           // |min E^eps - min E_N|
  double recovery_gap = 0.0;  // E^eps(u*_eps) - E_N(u0)
  double h1_distance = 0.0;
  double s_share = 0.0;
};

struct LimitResult {
  EnergyBreakdown min_energy;
  int iterations = 0;
  std::string termination;
  double gradient_norm = 0.0;
  int restarts_used = 0;
};

struct SweepVerdict {
  double tolerance = 0.0;
  bool gaps_nonincreasing = false;
  double gap_ratio = 0.0;
  bool gap_ratio_ok = false;
  bool recovery_nonincreasing = false;
  bool recovery_bounds_minimum = false;
  bool h1_nonincreasing = false;
  bool s_share_decreasing = false;
  bool identities_ok = false;
  bool pass = false;
};

struct SweepReport {
  std::string version;
  LimitResult limit;
  std::vector<EpsResult> entries;
  std::vector<IdentityCheck> identities;
  SweepVerdict verdict;

  bool operator==(const SweepReport&) const;
};

struct SweepFields {
  DirectorField limit;
  std::vector<DirectorField> thin;  // one per eps (empty when that entry failed)
};

/// Full Gamma-convergence experiment. Per-eps minimizations run on up to
/// config.threads workers after the shared limit minimization; results are
/// assembled in eps order, so the report does not depend on scheduling.
SweepReport run_sweep(const SweepConfig& config, SweepFields* fields = nullptr);

/// Recomputes the verdict flags from the recorded entries.
SweepVerdict judge_sweep(const SweepReport& report, double tolerance);

/// Artifact version written into every report.
const char* version();

}  // namespace chiralfilm
