#include "chiralfilm/minimizer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

using namespace chiralfilm;

namespace {

SurfaceSpec flat(int n, bool periodic) {
  SurfaceSpec s;
  s.kind = SurfaceKind::FlatPatch;
  s.periodic_u = s.periodic_v = periodic;
  s.n_u = s.n_v = n;
  return s;
}

PerturbationSpec bulk(double kappa) {
  PerturbationSpec p;
  p.kind = PerturbationKind::BulkDMI;
  p.kappa = kappa;
  return p;
}

void expect_nonincreasing(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) EXPECT_LE(trace[k], trace[k - 1]) << "step " << k;
}

}  // namespace

TEST(Minimizer, DirichletFromRandomStartReachesConstant) {
  const SurfaceGrid g(flat(12, false));
  const TargetManifold m{TargetSpec{}};
  const Perturbation p(PerturbationSpec{}, g);
  const EnergyModel model(g, m, p);
  MinimizeOptions o;
  o.gradient_tolerance = 1e-10;
  o.max_iterations = 20000;
  const auto [u, report] = minimize(model, EnergyForm::Limit, 0.0, random_field(g, m, Layout::Surface, 1, 7), o);
  EXPECT_LT(report.final_energy.tangential, 1e-8);
  EXPECT_LE(u.max_distance_to(m), 1e-12);
  expect_nonincreasing(report.energy_trace);
}

TEST(Minimizer, StationaryStartTerminatesImmediately) {
  const SurfaceGrid g(flat(8, false));
  const TargetManifold m{TargetSpec{}};
  const Perturbation p(PerturbationSpec{}, g);
  const EnergyModel model(g, m, p);
  const DirectorField start = constant_field(g, m, Layout::Surface, 1, Vec3(1, 2, 2));
  const auto [u, report] = minimize(model, EnergyForm::Limit, 0.0, start, MinimizeOptions{});
  EXPECT_EQ(report.iterations, 0);
  EXPECT_EQ(report.termination, Termination::Converged);
  EXPECT_EQ(report.final_gradient_norm, 0.0);
  EXPECT_EQ(u.values, start.values);
}

TEST(Minimizer, HelixCancelsFirstDirectionAndIsNotMadeWorse) {
  const double kappa = 2.0 * std::numbers::pi;
  const SurfaceGrid g(flat(48, true));
  const TargetManifold m{TargetSpec{}};
  const Perturbation p(bulk(kappa), g);
  const EnergyModel model(g, m, p);
  DirectorField helix = DirectorField::surface(g.size(), Vec3::Zero());
  double residual = 0.0;
  for (int node = 0; node < g.size(); ++node) {
    const double x = g.frame(node).xi.x();
    helix.at(node) = Vec3(0.0, std::sin(kappa * x), std::cos(kappa * x));
    // only |K tau_2|^2 = kappa^2 cos^2 survives
    residual += kappa * kappa * std::pow(std::cos(kappa * x), 2) * g.du() * g.dv();
  }
  const EnergyBreakdown e0 = model.limit(helix);
  EXPECT_NEAR(residual, kappa * kappa / 2.0, 1e-10);
  EXPECT_NEAR(e0.tangential, residual, 1e-2 * residual);  // stencil error in d_tau_1 only
  EXPECT_NEAR(e0.normal_or_anisotropy, 0.0, 1e-12);
  MinimizeOptions o;
  o.max_iterations = 200;
  const auto [u, report] = minimize(model, EnergyForm::Limit, 0.0, helix, o);
  EXPECT_LE(report.final_energy.total, e0.total);
  expect_nonincreasing(report.energy_trace);
}

TEST(Minimizer, StepRulesAgreeOnBulkMinimum) {
  SurfaceSpec s;
  s.n_u = s.n_v = 12;
  const SurfaceGrid g(s);
  const TargetManifold m{TargetSpec{}};
  const Perturbation p(bulk(1.0), g);
  const EnergyModel model(g, m, p);
  const DirectorField start = constant_field(g, m, Layout::Surface, 1, Vec3(0, 0, 1));
  double e[3];
  int k = 0;
  for (StepRule rule : {StepRule::BarzilaiBorwein, StepRule::FixedBacktracking, StepRule::LimitedMemoryBFGS}) {
    MinimizeOptions o;
    o.step_rule = rule;
    o.max_iterations = 20000;
    const auto [u, report] = minimize(model, EnergyForm::Limit, 0.0, start, o);
    expect_nonincreasing(report.energy_trace);
    EXPECT_LE(u.max_distance_to(m), 1e-12);
    EXPECT_NE(report.termination, Termination::LineSearchFailure);
    e[k++] = report.final_energy.total;
  }
  EXPECT_NEAR(e[1], e[0], 1e-6 * e[0]);
  EXPECT_NEAR(e[2], e[0], 1e-6 * e[0]);
}

TEST(Minimizer, ThinIteratesStayOnEllipsoid) {
  SurfaceSpec s;
  s.kind = SurfaceKind::Torus;
  s.n_u = s.n_v = 8;
  const SurfaceGrid g(s);
  TargetSpec t;
  t.kind = TargetKind::Ellipsoid;
  t.semi_axes = Vec3(2.0, 1.0, 1.0);
  const TargetManifold m(t);
  const Perturbation p(bulk(1.0), g);
  const EnergyModel model(g, m, p);
  MinimizeOptions o;
  o.max_iterations = 300;
  o.step_rule = StepRule::LimitedMemoryBFGS;
  const auto [u, report] = minimize(model, EnergyForm::Thin, 0.1, random_field(g, m, Layout::Thin, 4, 3), o);
  EXPECT_LE(u.max_distance_to(m), 1e-9);
  expect_nonincreasing(report.energy_trace);
  EXPECT_EQ(report.energy_trace.size(), static_cast<std::size_t>(report.iterations) + 1);
  EXPECT_EQ(report.energy_trace.back(), report.final_energy.total);
}

TEST(Minimizer, NonFiniteEnergyAborts) {
  const SurfaceGrid g(flat(4, false));
  const TargetManifold m{TargetSpec{}};
  const std::vector<double> w(static_cast<std::size_t>(g.size()), 1.0);
  const Objective nan = [](const DirectorField&, std::vector<Vec3>* grad) {
    if (grad) grad->assign(16, Vec3::Zero());
    return EnergyBreakdown::make(std::numeric_limits<double>::quiet_NaN(), 0.0);
  };
  EXPECT_THROW(minimize(nan, w, m, constant_field(g, m, Layout::Surface, 1, Vec3::UnitZ()), MinimizeOptions{}),
               NumericalFailure);
}

TEST(Minimizer, RandomFieldReproducibleAndOnTarget) {
  SurfaceSpec s;
  s.n_u = s.n_v = 6;
  const SurfaceGrid g(s);
  TargetSpec t;
  t.kind = TargetKind::Ellipsoid;
  t.semi_axes = Vec3(1.0, 1.5, 0.7);
  const TargetManifold m(t);
  const DirectorField a = random_field(g, m, Layout::Thin, 4, 99);
  EXPECT_EQ(a.values, random_field(g, m, Layout::Thin, 4, 99).values);
  EXPECT_NE(a.values, random_field(g, m, Layout::Thin, 4, 100).values);
  EXPECT_LE(a.max_distance_to(m), 1e-9);
  EXPECT_EQ(a.size(), static_cast<std::size_t>(4 * g.size()));
}

TEST(Minimizer, InvalidOptionsRejected) {
  MinimizeOptions o;
  o.shrink = 1.0;
  EXPECT_THROW(o.validate(), InvalidInput);
  o = MinimizeOptions{};
  o.armijo = 0.0;
  EXPECT_THROW(o.validate(), InvalidInput);
  o = MinimizeOptions{};
  o.max_iterations = -1;
  EXPECT_THROW(o.validate(), InvalidInput);
  o = MinimizeOptions{};
  o.memory = 0;
  EXPECT_THROW(o.validate(), InvalidInput);
}

TEST(Minimizer, TraceCsvHasHeaderAndOneRowPerIterate) {
  const SurfaceGrid g(flat(6, false));
  const TargetManifold m{TargetSpec{}};
  const Perturbation p(bulk(1.0), g);
  MinimizeOptions o;
  o.max_iterations = 5;
  const auto [u, report] =
      minimize(EnergyModel(g, m, p), EnergyForm::Limit, 0.0, constant_field(g, m, Layout::Surface, 1, Vec3::UnitZ()), o);
  std::ostringstream os;
  report.write_trace_csv(os);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "iteration,energy,grad_norm");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(report.energy_trace.size()) + 1);
}
