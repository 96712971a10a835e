// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include "chiralfilm/harness.hpp"
#include "chiralfilm/io.hpp"
#include "chiralfilm/sampling.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace chiralfilm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SurfaceSpec sphere_band(int n) {
  SurfaceSpec s;
  s.n_u = s.n_v = n;
  return s;
}

SurfaceSpec torus(int n) {
  SurfaceSpec s;
  s.kind = SurfaceKind::Torus;
  s.major = 2.0;
  s.minor = 0.5;
  s.n_u = s.n_v = n;
  return s;
}

TargetSpec ellipsoid() {
  TargetSpec t;
  t.kind = TargetKind::Ellipsoid;
  t.semi_axes = Vec3(2.0, 1.0, 1.0);
  return t;
}

Outcome pullback_equivalence() {
  PerturbationSpec ps;
  ps.kind = PerturbationKind::BulkDMI;
  const TargetManifold target{TargetSpec{}};
  const double eps = 0.1;
  double worst = 0.0, worst_order = 1e300;
  for (const auto& make : {sphere_band, torus}) {
    double coarse = 0.0, fine = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      double d[2];
      for (int level = 0; level < 2; ++level) {
        const int n = 64 << level, ns = 8 << level;
        const SurfaceGrid grid(make(n));
        const Perturbation pert(ps, grid);
        const DirectorField f = smooth_random_field(grid, target, Layout::Thin, ns, eps, 100 + trial);
        const double e = eval_thin_energy(f, grid, target, pert, eps).total;
        const double direct = oracle::direct_film_energy(f, grid, pert, eps);
        d[level] = std::abs(e - direct) / std::max(std::abs(e), 1.0);
      }
      worst = std::max(worst, d[0]);
      coarse += d[0];
      fine += d[1];
    }
    worst_order = std::min(worst_order, std::log2(coarse / fine));
  }
  return {worst <= 5e-3 && worst_order >= 1.8,
          "max rel discrepancy " + fmt("%.3e", worst) + ", observed order " + fmt("%.2f", worst_order)};
}

Outcome metric_factor() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double worst = 0.0;
  for (const SurfaceSpec& spec : {sphere_band(64), torus(64)}) {
    const SurfaceGrid grid(spec);
    const auto ub = spec.u_bounds(), vb = spec.v_bounds();
    for (int k = 0; k < 100; ++k) {
      const double u = ub[0] + (ub[1] - ub[0]) * uni(rng);
      const double v = vb[0] + (vb[1] - vb[0]) * uni(rng);
      const double s = -1.0 + 2.0 * uni(rng);
      const double eps = grid.budget().eps_max * (0.05 + 0.95 * uni(rng));
      const SurfaceFrame f = evaluate_frame(spec, u, v);
      const double exact = metric_volume_factor(f.kappa1, f.kappa2, eps, s);
      const double fd = oracle::fd_volume_factor(spec, u, v, eps, s);
      worst = std::max(worst, std::abs(exact - fd) / exact);
    }
  }
  return {worst <= 1e-5, "max rel error " + fmt("%.3e", worst) + " over 200 samples"};
}

Outcome gradients() {
  double worst = 0.0;
  int checked = 0;
  const double eps = 0.1;
  std::uint64_t seed = 1;
  for (const auto& name : preset_names()) {
    const RunConfig preset = preset_config(name);
    for (const SurfaceSpec& spec : {sphere_band(16), torus(16)}) {
      const SurfaceGrid grid(spec);
      const Perturbation pert(preset.sweep.perturbation, grid);
      const EllipticTensor tensor(preset.sweep.tensor, grid);
      for (const TargetSpec& ts : {TargetSpec{}, ellipsoid()}) {
        const TargetManifold target(ts);
        const EnergyModel model(grid, target, pert, &tensor);
        for (EnergyForm form : {EnergyForm::Thin, EnergyForm::Limit, EnergyForm::LimitGeneral}) {
          const Layout layout = form == EnergyForm::Thin ? Layout::Thin : Layout::Surface;
          const DirectorField f = random_field(grid, target, layout, 4, ++seed);
          std::vector<Vec3> g;
          model.evaluate(form, f, eps, &g);
          double gmax = 0.0;
          for (const Vec3& x : g) gmax = std::max(gmax, x.norm());
          auto energy = [&](const DirectorField& x) { return model.evaluate(form, x, eps).total; };
          std::mt19937_64 rng(seed);
          std::uniform_int_distribution<std::size_t> pick(0, f.values.size() - 1);
          for (int k = 0; k < 50; ++k) {
            const std::size_t p = pick(rng);
            const Vec3 fd = oracle::fd_value_gradient(energy, f, p);
            const double denom = std::max(g[p].norm(), 1e-3 * gmax);
            worst = std::max(worst, (fd - g[p]).norm() / denom);
            ++checked;
          }
        }
      }
    }
  }
  return {worst <= 1e-6, "max rel error " + fmt("%.3e", worst) + " over " + std::to_string(checked) + " values"};
}

Outcome identities() {
  const SurfaceGrid grid(sphere_band(64));
  struct Case {
    const char* preset;
    TargetSpec target;
    bool vanish;
  };
  const std::vector<Case> cases{{"bulk", TargetSpec{}, true},        {"anisotropic", TargetSpec{}, true},
                                {"interfacial", TargetSpec{}, true}, {"interfacial", ellipsoid(), true},
                                {"temperature", TargetSpec{}, true}, {"bulk", ellipsoid(), false}};
  bool ok = true;
  std::ostringstream detail;
  for (const Case& c : cases) {
    if (&c != &cases.front()) detail << "; ";
    const TargetManifold target(c.target);
    const auto checks = check_vanishing_identities(grid, target, preset_config(c.preset).sweep.perturbation, 1000);
    const IdentityCheck& a = checks.front();
    const bool pass = a.vanishing_predicted == c.vanish && a.pass;
    ok = ok && pass;
    detail << c.preset << "/" << (c.target.kind == TargetKind::Sphere ? "sphere" : "ellipsoid") << " "
           << fmt("%.2e", a.residual) << (pass ? "" : " (!)");
  }
  return {ok, detail.str()};
}

Outcome analytic_value() {
  const SurfaceGrid grid(sphere_band(128));
  PerturbationSpec ps;
  ps.kind = PerturbationKind::BulkDMI;
  const Perturbation pert(ps, grid);
  const TargetManifold target{TargetSpec{}};
  const DirectorField f = constant_field(grid, target, Layout::Surface, 1, Vec3::UnitZ());
  const double e = eval_limit_energy(f, grid, target, pert).total;
  const double zone = oracle::zone_integral(grid.spec().theta_cap, 1.0);
  const double rel = std::abs(e - zone) / zone;
  const double full = oracle::zone_integral(1e-12, 1.0);
  return {rel <= 1e-3 && std::abs(full - 16.0 * std::numbers::pi / 3.0) < 1e-9,
          "band E_N " + fmt("%.8f", e) + " vs zone " + fmt("%.8f", zone) + " (rel " + fmt("%.2e", rel) +
              "), full sphere " + fmt("%.6f", full)};
}

Outcome planar() {
  const PlanarCrosscheck r = planar_interfacial_crosscheck(64);
  return {r.max_relative_discrepancy <= 1e-10, "max rel discrepancy " + fmt("%.3e", r.max_relative_discrepancy)};
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "chiralfilm_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"chiralfilm", "--quiet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  if (rc != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return rc;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream s;
  s << is.rdbuf();
  return s.str();
}

Outcome sweeps(const std::filesystem::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream detail;
  for (const auto& name : preset_names()) {
    const auto cfg = dir / (name + ".json");
    const auto out = dir / name;
    if (run_cli({"preset", name, "--out", cfg.string()}) != 0 ||
        run_cli({"sweep", "--config", cfg.string(), "--out", out.string()}) != 0) {
      ok = false;
      detail << name << " run failed; ";
      continue;
    }
    const SweepReport r = report_from_json(slurp(out / "report.json"));
    const SweepVerdict& v = r.verdict;
    const bool pass = v.gaps_nonincreasing && v.gap_ratio_ok && v.recovery_nonincreasing && v.s_share_decreasing &&
                      v.pass;
    ok = ok && pass;
    detail << name << " ratio " << fmt("%.3f", v.gap_ratio) << (pass ? "" : " FAIL") << "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  detail << "budget 600 s";
  return {ok && secs <= 600.0, detail.str()};
}

Outcome reductions() {
  double worst_id = 0.0, worst_temp = 0.0;
  const double c = 1.7;
  const Mat3 J = preset_config("anisotropic").sweep.perturbation.J;
  for (const SurfaceSpec& spec : {sphere_band(32), torus(32)}) {
    const SurfaceGrid grid(spec);
    for (const TargetSpec& ts : {TargetSpec{}, ellipsoid()}) {
      const TargetManifold target(ts);
      for (const auto& name : preset_names()) {
        const Perturbation pert(preset_config(name).sweep.perturbation, grid);
        const EllipticTensor id(EllipticTensorSpec{}, grid);
        for (int k = 0; k < 20; ++k) {
          const DirectorField f = smooth_random_field(grid, target, Layout::Surface, 1, 0.0, 500 + k);
          const double a = eval_limit_energy(f, grid, target, pert).total;
          const double b = eval_limit_energy_general(f, grid, target, pert, id).total;
          worst_id = std::max(worst_id, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
      }
      PerturbationSpec temp;
      temp.kind = PerturbationKind::Temperature;
      temp.J = J;
      temp.ms = ScalarProfile{ProfileKind::Constant, c, Vec3::Zero(), 0.0};
      PerturbationSpec aniso;
      aniso.kind = PerturbationKind::AnisotropicDMI;
      aniso.J = J / c;
      const Perturbation pt(temp, grid), pa(aniso, grid);
      const EllipticTensor a_c(EllipticTensorSpec{TensorKind::ScalarField, temp.ms}, grid);
      for (int k = 0; k < 20; ++k) {
        const DirectorField f = smooth_random_field(grid, target, Layout::Surface, 1, 0.0, 700 + k);
        const double et = eval_limit_energy_general(f, grid, target, pt, a_c).total;
        const double ea = c * c * eval_limit_energy(f, grid, target, pa).total;
        worst_temp = std::max(worst_temp, std::abs(et - ea) / std::max(1.0, std::abs(et)));
      }
    }
  }
  return {worst_id <= 1e-12 && worst_temp <= 1e-10,
          "identity tensor " + fmt("%.2e", worst_id) + ", constant-Ms scaling " + fmt("%.2e", worst_temp)};
}

Outcome determinism(const std::filesystem::path& dir) {
  const std::string name = "interfacial";
  const auto first = dir / name / "report.json";
  const auto again = dir / (name + "_rerun");
  if (!std::filesystem::exists(first)) return {false, "no first run to compare"};
  if (run_cli({"sweep", "--config", (dir / (name + ".json")).string(), "--out", again.string()}) != 0) {
    return {false, "rerun failed"};
  }
  const std::string a = slurp(first), b = slurp(again / "report.json");
  return {!a.empty() && a == b, name + " report.json " + (a == b ? "byte-identical" : "differs") + " (" +
                                    std::to_string(a.size()) + " bytes, threads " +
                                    std::to_string(resolve_threads(1)) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  // optional criterion ids restrict the run (criterion 9 reuses the output of 7)
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("criterion %d %s: %s (%s; %.1f s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
  };
  const auto dir = scratch_dir();
  report(1, "pull-back equivalence", pullback_equivalence);
  report(2, "metric-factor Jacobian identity", metric_factor);
  report(3, "gradient correctness", gradients);
  report(4, "vanishing identities", identities);
  report(5, "analytic band value", analytic_value);
  report(6, "planar interfacial cross-check", planar);
  report(7, "thickness sweep", [&] { return sweeps(dir); });
  report(8, "generalized-limit reduction", reductions);
  report(9, "determinism", [&] { return determinism(dir); });
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
