#include "chiralfilm/harness.hpp"

#include "chiralfilm/sampling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#ifndef CHIRALFILM_VERSION
#define CHIRALFILM_VERSION "dev"
#endif

namespace chiralfilm {

const char* version() { return CHIRALFILM_VERSION; }

void SweepConfig::validate(const ThicknessBudget& budget) const {
  if (eps.empty()) throw InvalidInput("sweep needs at least one eps value");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!budget.admits(eps[i])) {
      std::ostringstream msg;
      msg << "eps = " << eps[i] << " outside the thickness budget (0, " << budget.eps_max << "]";
      throw InvalidInput(msg.str());
    }
    if (i > 0 && !(eps[i] < eps[i - 1])) throw InvalidInput("eps list must be strictly decreasing");
  }
  if (n_s < 4) throw InvalidInput("n_s must be at least 4");
  if (restarts < 0) throw InvalidInput("restarts must be non-negative");
  if (identity_samples < 1000) throw InvalidInput("identity checks need at least 1000 samples");
  if (threads < 1) throw InvalidInput("threads must be at least 1");
  minimizer.validate();
}

namespace {

// bound on |xi| from the spec alone, so every resolution sees the same scale
double surface_extent(const SurfaceSpec& s) {
  switch (s.kind) {
    case SurfaceKind::Sphere: return s.radius;
    case SurfaceKind::Torus: return s.major + s.minor;
    case SurfaceKind::Cylinder: return std::hypot(s.radius, 0.5 * s.height);
    case SurfaceKind::FlatPatch: return std::hypot(s.lx, s.ly);
  }
  return 1.0;
}

}  // namespace

DirectorField smooth_random_field(const SurfaceGrid& grid, const TargetManifold& target, Layout layout, int n_s,
                                  double eps, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const Vec3 centre = sample_on_target(target, rng);
  Mat3 B;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) B(r, c) = uni(rng);
  std::array<Vec3, 3> freq;
  Vec3 phase;
  for (int r = 0; r < 3; ++r) {
    freq[static_cast<std::size_t>(r)] = Vec3(uni(rng), uni(rng), uni(rng)) * 3.0;
    phase(r) = 3.0 * uni(rng);
  }
  double extent = surface_extent(grid.spec()) + (layout == Layout::Thin ? eps : 0.0);

  const bool sphere = target.spec().kind == TargetKind::Sphere;
  const double amplitude = sphere ? 0.8 * target.spec().radius : 0.9 * target.admissible_radius();
  const double bound = B.norm() + std::sqrt(3.0);

  auto value_at = [&](const Vec3& x) {
    const Vec3 xs = x / extent;
    Vec3 p = B * xs;
    for (int r = 0; r < 3; ++r) p(r) += std::sin(freq[static_cast<std::size_t>(r)].dot(xs) + phase(r));
    return target.project(centre + (amplitude / bound) * p);
  };

  DirectorField f = layout == Layout::Thin ? DirectorField::thin(grid.size(), n_s, Vec3::Zero())
                                           : DirectorField::surface(grid.size(), Vec3::Zero());
  for (int k = 0; k < f.layers(); ++k) {
    const double s = f.s(k);
    for (int node = 0; node < grid.size(); ++node) {
      const SurfaceFrame& fr = grid.frame(node);
      f.at(node, k) = value_at(fr.xi + eps * s * fr.normal);
    }
  }
  return f;
}

namespace {

bool vanishing_predicted(const PerturbationSpec& spec, const TargetManifold& target) {
  switch (spec.kind) {
    case PerturbationKind::Zero:
    case PerturbationKind::InterfacialDMI: return true;
    case PerturbationKind::BulkDMI:
    case PerturbationKind::AnisotropicDMI:
    case PerturbationKind::Temperature: return target.spec().kind == TargetKind::Sphere;
    case PerturbationKind::Custom: return false;
  }
  return false;
}

}  // namespace

std::vector<IdentityCheck> check_vanishing_identities(const SurfaceGrid& grid, const TargetManifold& target,
                                                      const PerturbationSpec& spec, int samples, std::uint64_t seed) {
  if (samples < 1000) throw InvalidInput("identity checks need at least 1000 samples");
  const Perturbation pert(spec, grid);
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, grid.size() - 1);

  double density = 0.0, corrector = 0.0, scale = 0.0;
  for (int i = 0; i < samples; ++i) {
    const int node = pick(rng);
    const Vec3 sigma = sample_on_target(target, rng);
    const Mat3 K = pert.K(node, sigma);
    const Vec3 kn = K * grid.frame(node).normal;
    const Vec3 nm = target.normal(sigma);
    const double q = kn.dot(nm);
    const Vec3 d0 = (nm * nm.transpose() - Mat3::Identity()) * kn;
    density = std::max(density, q * q);
    corrector = std::max(corrector, std::abs((d0 + kn).squaredNorm() - q * q));
    scale = std::max(scale, K.squaredNorm());
  }
  const double unit = std::max(scale, 1.0);

  IdentityCheck aniso;
  aniso.name = "anisotropy_density";
  aniso.residual = density;
  aniso.scale = unit;
  aniso.vanishing_predicted = vanishing_predicted(spec, target);
  aniso.pass = aniso.vanishing_predicted ? density <= 1e-14 * unit : density > 0.0;

  IdentityCheck corr;
  corr.name = "corrector_density";
  corr.residual = corrector;
  corr.scale = unit;
  corr.vanishing_predicted = true;
  corr.pass = corrector <= 1e-12 * unit;
  return {aniso, corr};
}

double planar_interfacial_expanded(const DirectorField& field, const SurfaceGrid& grid, double kappa) {
  const auto d1 = tangential_derivative(grid, std::span<const Vec3>(field.values), 0);
  const auto d2 = tangential_derivative(grid, std::span<const Vec3>(field.values), 1);
  double dirichlet = 0.0, chiral = 0.0, anisotropy = 0.0;
  for (int node = 0; node < grid.size(); ++node) {
    const auto p = static_cast<std::size_t>(node);
    const Vec3& u = field.values[p];
    const double w = grid.frame(node).area_weight;
    dirichlet += w * (d1[p].squaredNorm() + d2[p].squaredNorm());
    const double div = d1[p].x() + d2[p].y();
    const double u_grad_u3 = u.x() * d1[p].z() + u.y() * d2[p].z();
    chiral += w * (u.z() * div - u_grad_u3);
    anisotropy += w * (1.0 + u.z() * u.z());
  }
  return dirichlet + 2.0 * kappa * chiral + kappa * kappa * anisotropy;
}

PlanarCrosscheck planar_interfacial_crosscheck(int resolution, double kappa, std::uint64_t seed) {
  SurfaceSpec ss;
  ss.kind = SurfaceKind::FlatPatch;
  ss.n_u = ss.n_v = resolution;
  const SurfaceGrid grid(ss);
  const TargetManifold target(TargetSpec{});
  PerturbationSpec ps;
  ps.kind = PerturbationKind::InterfacialDMI;
  ps.kappa = kappa;
  const Perturbation pert(ps, grid);
  const EnergyModel model(grid, target, pert);

  PlanarCrosscheck out;
  out.area = grid.area();
  out.kappa = kappa;
  for (int r = 0; r < 20; ++r) {
    const DirectorField f = smooth_random_field(grid, target, Layout::Surface, 1, 0.0, seed + static_cast<std::uint64_t>(r));
    const double lim = model.limit(f).total;
    const double exp = planar_interfacial_expanded(f, grid, kappa);
    out.max_relative_discrepancy = std::max(out.max_relative_discrepancy, std::abs(lim - exp) / std::max(std::abs(lim), 1.0));
  }
  const DirectorField e3 = DirectorField::surface(grid.size(), Vec3::UnitZ());
  const DirectorField e1 = DirectorField::surface(grid.size(), Vec3::UnitX());
  out.constant_e3_limit = model.limit(e3).total;
  out.constant_e3_expanded = planar_interfacial_expanded(e3, grid, kappa);
  out.constant_e1_limit = model.limit(e1).total;
  out.constant_e1_expanded = planar_interfacial_expanded(e1, grid, kappa);
  return out;
}

bool SweepReport::operator==(const SweepReport& o) const {
  auto same_entry = [](const EpsResult& a, const EpsResult& b) {
    return a.eps == b.eps && a.failed == b.failed && a.failure == b.failure && a.min_energy == b.min_energy &&
           a.iterations == b.iterations && a.termination == b.termination && a.gradient_norm == b.gradient_norm &&
           a.recovery_energy == b.recovery_energy && a.gap == b.gap && a.recovery_gap == b.recovery_gap &&
           a.h1_distance == b.h1_distance && a.s_share == b.s_share;
  };
  auto same_check = [](const IdentityCheck& a, const IdentityCheck& b) {
    return a.name == b.name && a.residual == b.residual && a.scale == b.scale &&
           a.vanishing_predicted == b.vanishing_predicted && a.pass == b.pass;
  };
  const SweepVerdict& v = verdict;
  const SweepVerdict& w = o.verdict;
  return version == o.version && limit.min_energy == o.limit.min_energy && limit.iterations == o.limit.iterations &&
         limit.termination == o.limit.termination && limit.gradient_norm == o.limit.gradient_norm &&
         limit.restarts_used == o.limit.restarts_used &&
         std::equal(entries.begin(), entries.end(), o.entries.begin(), o.entries.end(), same_entry) &&
         std::equal(identities.begin(), identities.end(), o.identities.begin(), o.identities.end(), same_check) &&
         v.tolerance == w.tolerance && v.gaps_nonincreasing == w.gaps_nonincreasing && v.gap_ratio == w.gap_ratio &&
         v.gap_ratio_ok == w.gap_ratio_ok && v.recovery_nonincreasing == w.recovery_nonincreasing &&
         v.recovery_bounds_minimum == w.recovery_bounds_minimum && v.h1_nonincreasing == w.h1_nonincreasing &&
         v.s_share_decreasing == w.s_share_decreasing && v.identities_ok == w.identities_ok && v.pass == w.pass;
}

SweepVerdict judge_sweep(const SweepReport& report, double tolerance) {
  SweepVerdict v;
  v.tolerance = tolerance;
  std::vector<const EpsResult*> ok;
  for (const EpsResult& e : report.entries) {
    if (!e.failed) ok.push_back(&e);
  }
  const bool complete = ok.size() == report.entries.size() && !ok.empty();

  v.gaps_nonincreasing = complete;
  v.recovery_nonincreasing = complete;
  v.recovery_bounds_minimum = complete;
  v.h1_nonincreasing = complete;
  v.s_share_decreasing = complete;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    const EpsResult& e = *ok[i];
    if (e.min_energy.total > e.recovery_energy.total + tolerance) v.recovery_bounds_minimum = false;
    if (i == 0) continue;
    const EpsResult& p = *ok[i - 1];
    if (e.gap > p.gap + tolerance) v.gaps_nonincreasing = false;
    if (std::abs(e.recovery_gap) > std::abs(p.recovery_gap) + tolerance) v.recovery_nonincreasing = false;
    if (e.h1_distance > p.h1_distance + tolerance) v.h1_nonincreasing = false;
    if (e.s_share > p.s_share) v.s_share_decreasing = false;
  }
  if (complete) {
    const double first = ok.front()->gap, last = ok.back()->gap;
    v.gap_ratio = first > tolerance ? last / first : 0.0;
    v.gap_ratio_ok = first <= tolerance ? last <= tolerance : last <= 0.2 * first;
  }
  v.identities_ok = std::all_of(report.identities.begin(), report.identities.end(),
                                [](const IdentityCheck& c) { return c.pass; });
  v.pass = complete && v.gaps_nonincreasing && v.gap_ratio_ok && v.recovery_nonincreasing &&
           v.recovery_bounds_minimum && v.s_share_decreasing && v.identities_ok;
  return v;
}

SweepReport run_sweep(const SweepConfig& config, SweepFields* fields) {
  const SurfaceGrid grid(config.surface);
  config.validate(grid.budget());
  const TargetManifold target(config.target);
  const Perturbation pert(config.perturbation, grid);
  const EllipticTensor tensor(config.tensor, grid);
  const EnergyModel model(grid, target, pert, tensor.is_identity() ? nullptr : &tensor);
  const EnergyForm limit_form = tensor.is_identity() ? EnergyForm::Limit : EnergyForm::LimitGeneral;

  SweepReport report;
  report.version = version();

  auto initial_surface = [&](int attempt) {
    if (config.initial == InitialGuess::Random || attempt > 0) {
      return random_field(grid, target, Layout::Surface, 1, config.seed + static_cast<std::uint64_t>(attempt));
    }
    return constant_field(grid, target, Layout::Surface, 1, config.initial_direction);
  };

  // (a) shared limit minimization, optionally with random restarts.
  DirectorField u0;
  MinimizeReport best;
  for (int attempt = 0; attempt <= config.restarts; ++attempt) {
    auto [field, rep] = minimize(model, limit_form, 0.0, initial_surface(attempt), config.minimizer);
    if (attempt == 0 || rep.final_energy.total < best.final_energy.total) {
      u0 = std::move(field);
      best = std::move(rep);
      report.limit.restarts_used = attempt;
    }
  }
  report.limit.min_energy = best.final_energy;
  report.limit.iterations = best.iterations;
  report.limit.termination = to_string(best.termination);
  report.limit.gradient_norm = best.final_gradient_norm;
  const double e_limit = best.final_energy.total;
  const std::vector<Vec3> d0 = optimal_corrector(u0, grid, target, pert, model.tensor());

  // (b) per-eps recovery field and thin minimization.
  const std::size_t n_eps = config.eps.size();
  report.entries.resize(n_eps);
  std::vector<DirectorField> thin_fields(n_eps);
  auto run_one = [&](std::size_t idx) {
    EpsResult& r = report.entries[idx];
    r.eps = config.eps[idx];
    try {
      DirectorField recovery = recovery_field(u0, d0, r.eps, config.n_s, target);
      r.recovery_energy = model.thin(recovery, r.eps);
      r.recovery_gap = r.recovery_energy.total - e_limit;
      DirectorField start = config.warm_start == WarmStart::LimitFirst
                                ? std::move(recovery)
                                : (config.initial == InitialGuess::Random
                                       ? random_field(grid, target, Layout::Thin, config.n_s, config.seed + 1000 + idx)
                                       : constant_field(grid, target, Layout::Thin, config.n_s, config.initial_direction));
      auto [thin, rep] = minimize(model, EnergyForm::Thin, r.eps, std::move(start), config.minimizer);
      r.min_energy = rep.final_energy;
      r.iterations = rep.iterations;
      r.termination = to_string(rep.termination);
      r.gradient_norm = rep.final_gradient_norm;
      r.gap = std::abs(r.min_energy.total - e_limit);
      r.h1_distance = h1_distance(thin, u0, grid);
      r.s_share = s_derivative_share(thin, grid);
      thin_fields[idx] = std::move(thin);
    } catch (const std::exception& ex) {
      r.failed = true;
      r.failure = ex.what();
    }
  };

  const int workers = std::max(1, std::min<int>(config.threads, static_cast<int>(n_eps)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n_eps; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n_eps; i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  // (c) identities and verdict.
  report.identities = check_vanishing_identities(grid, target, config.perturbation, config.identity_samples,
                                                 config.seed + 77);
  report.verdict = judge_sweep(report, 1e-10 * std::max(1.0, std::abs(e_limit)));

  if (fields) {
    fields->limit = std::move(u0);
    fields->thin = std::move(thin_fields);
  }
  return report;
}

}  // namespace chiralfilm
