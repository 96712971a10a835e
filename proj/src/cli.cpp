#include "chiralfilm/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>

namespace chiralfilm {

namespace {

using Json = nlohmann::ordered_json;

struct Common {
  std::string config_path;
  std::string out_dir;
  bool quiet = false;
  bool json = false;
};

struct Overrides {
  std::vector<double> eps;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

RunConfig resolve(const Common& common, const Overrides& ov) {
  RunConfig c = common.config_path.empty() ? RunConfig{} : load_config(common.config_path);
  if (!common.out_dir.empty()) c.output_dir = common.out_dir;
  if (!ov.eps.empty()) c.sweep.eps = ov.eps;
  if (ov.has_seed) {
    c.sweep.seed = ov.seed;
    c.sweep.minimizer.seed = ov.seed;
  }
  c.sweep.threads = resolve_threads(c.sweep.threads);
  // overrides pass through the same validation as the file
  return parse_config(echo_config(c));
}

void emit(std::ostream& out, const Common& common, const Json& payload, const std::string& text) {
  if (common.quiet) return;
  if (common.json) {
    out << payload.dump() << '\n';
  } else {
    out << text;
  }
}

EnergyForm parse_form(const std::string& s) {
  if (s == "thin") return EnergyForm::Thin;
  if (s == "limit") return EnergyForm::Limit;
  if (s == "general") return EnergyForm::LimitGeneral;
  throw InvalidInput("--form must be thin, limit or general");
}

Json energy_payload(const EnergyBreakdown& e) { return Json::parse(energy_to_json(e)); }

struct Model {
  SurfaceGrid grid;
  TargetManifold target;
  Perturbation pert;
  EllipticTensor tensor;
  EnergyModel energy;

  explicit Model(const SweepConfig& c)
      : grid(c.surface), target(c.target), pert(c.perturbation, grid), tensor(c.tensor, grid),
        energy(grid, target, pert, &tensor) {}
};

int describe_surface(const Common& common, std::ostream& out) {
  const RunConfig c = resolve(common, {});
  const SurfaceGrid grid(c.sweep.surface);
  write_run_echo(c, c.output_dir);
  std::ofstream os(std::filesystem::path(c.output_dir) / "surface.csv");
  if (!os) throw InvalidInput("cannot write " + (std::filesystem::path(c.output_dir) / "surface.csv").string());
  grid.write_csv(os);
  const auto& b = grid.budget();
  Json j{{"nodes", grid.size()}, {"area", grid.area()}, {"kappa_max", b.kappa_max}, {"eps_max", b.eps_max}, {"c_N", b.c_N}};
  std::ostringstream text;
  text << "nodes " << grid.size() << "  area " << grid.area() << "  kappa_max " << b.kappa_max << "  eps_max "
       << b.eps_max << "\n";
  emit(out, common, j, text.str());
  return 0;
}

int eval_energy(const Common& common, const std::string& form_name, const std::string& field_path, double eps,
                std::ostream& out) {
  const RunConfig c = resolve(common, {});
  const EnergyForm form = parse_form(form_name);
  const Model m(c.sweep);
  const DirectorField field = load_field_csv(field_path, m.grid);
  const EnergyBreakdown e = form == EnergyForm::Thin
                                ? eval_thin_energy(field, m.grid, m.target, m.pert, eps, &m.tensor)
                                : form == EnergyForm::Limit
                                      ? eval_limit_energy(field, m.grid, m.target, m.pert)
                                      : eval_limit_energy_general(field, m.grid, m.target, m.pert, m.tensor);
  write_run_echo(c, c.output_dir);
  Json j = energy_payload(e);
  emit(out, common, j, j.dump() + "\n");
  return 0;
}

int minimize_cmd(const Common& common, const std::string& form_name, const std::string& field_path, double eps,
                 std::ostream& out) {
  const RunConfig c = resolve(common, {});
  const EnergyForm form = parse_form(form_name);
  const Model m(c.sweep);
  const Layout layout = form == EnergyForm::Thin ? Layout::Thin : Layout::Surface;
  DirectorField init;
  if (!field_path.empty()) {
    init = load_field_csv(field_path, m.grid);
  } else if (c.sweep.initial == InitialGuess::Random) {
    init = random_field(m.grid, m.target, layout, c.sweep.n_s, c.sweep.seed);
  } else {
    init = constant_field(m.grid, m.target, layout, c.sweep.n_s, c.sweep.initial_direction);
  }
  auto [field, report] = minimize(m.energy, form, eps, std::move(init), c.sweep.minimizer);

  const std::filesystem::path dir = c.output_dir;
  write_run_echo(c, dir);
  {
    std::ofstream os(dir / "field.csv");
    if (!os) throw InvalidInput("cannot write " + (dir / "field.csv").string());
    write_field_csv(os, field, m.grid);
  }
  {
    std::ofstream os(dir / "trace.csv");
    if (!os) throw InvalidInput("cannot write " + (dir / "trace.csv").string());
    report.write_trace_csv(os);
  }
  Json j{{"iterations", report.iterations},
         {"termination", to_string(report.termination)},
         {"gradient_norm", report.final_gradient_norm},
         {"energy", energy_payload(report.final_energy)}};
  {
    std::ofstream os(dir / "minimize.json");
    if (!os) throw InvalidInput("cannot write " + (dir / "minimize.json").string());
    os << j.dump(2) << '\n';
  }
  std::ostringstream text;
  text << "energy " << report.final_energy.total << "  iterations " << report.iterations << "  "
       << to_string(report.termination) << "\n";
  emit(out, common, j, text.str());
  return 0;
}

int sweep_cmd(const Common& common, const Overrides& ov, std::ostream& out) {
  const RunConfig c = resolve(common, ov);
  SweepFields fields;
  const SweepReport report = run_sweep(c.sweep, &fields);
  const SurfaceGrid grid(c.sweep.surface);
  serialize_report(report, &fields, c, grid, c.output_dir);
  std::ostringstream text;
  text << "limit " << report.limit.min_energy.total << "\n";
  for (const EpsResult& e : report.entries) {
    text << "eps " << e.eps << "  gap " << e.gap << "  recovery_gap " << e.recovery_gap << "  h1 " << e.h1_distance
         << (e.failed ? "  FAILED: " + e.failure : std::string()) << "\n";
  }
  text << (report.verdict.pass ? "PASS" : "FAIL") << "\n";
  emit(out, common, Json::parse(report_to_json(report)), text.str());
  return 0;
}

int preset_cmd(const Common& common, const std::string& name, const std::string& file, std::ostream& out) {
  const RunConfig c = preset_config(name);
  const std::string text = echo_config(c);
  if (file.empty()) {
    if (!common.quiet) out << text;
    return 0;
  }
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidInput("cannot write " + file);
  os << text;
  if (!os) throw InvalidInput("write failed: " + file);
  if (!common.quiet && !common.json) out << "wrote " << file << "\n";
  if (common.json) out << Json{{"written", file}}.dump() << '\n';
  return 0;
}

int identities_cmd(const Common& common, std::ostream& out) {
  const RunConfig c = resolve(common, {});
  const SurfaceGrid grid(c.sweep.surface);
  const TargetManifold target(c.sweep.target);
  const auto checks = check_vanishing_identities(grid, target, c.sweep.perturbation, c.sweep.identity_samples,
                                                 c.sweep.seed);
  write_run_echo(c, c.output_dir);
  Json arr = Json::array();
  std::ostringstream text;
  for (const auto& k : checks) {
    arr.push_back(Json{{"name", k.name},
                       {"residual", k.residual},
                       {"scale", k.scale},
                       {"vanishing_predicted", k.vanishing_predicted},
                       {"pass", k.pass}});
    text << k.name << "  residual " << k.residual << "  scale " << k.scale << "  "
         << (k.vanishing_predicted ? "vanishing" : "positive") << "  " << (k.pass ? "ok" : "FAIL") << "\n";
  }
  emit(out, common, arr, text.str());
  return 0;
}

int planar_cmd(const Common& common, int resolution, double kappa, std::uint64_t seed, std::ostream& out) {
  const PlanarCrosscheck r = planar_interfacial_crosscheck(resolution, kappa, seed);
  if (!common.out_dir.empty()) {
    RunConfig c;
    c.output_dir = common.out_dir;
    write_run_echo(c, c.output_dir);
  }
  Json j{{"max_relative_discrepancy", r.max_relative_discrepancy},
         {"constant_e3_limit", r.constant_e3_limit},
         {"constant_e3_expanded", r.constant_e3_expanded},
         {"constant_e1_limit", r.constant_e1_limit},
         {"constant_e1_expanded", r.constant_e1_expanded},
         {"area", r.area},
         {"kappa", r.kappa}};
  std::ostringstream text;
  text << "max relative discrepancy " << r.max_relative_discrepancy << "\n";
  emit(out, common, j, text.str());
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thin chiral film energies and their surface limit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(version()));

  Common common;
  app.add_flag("--quiet", common.quiet, "Suppress console output");
  app.add_flag("--json", common.json, "Print machine-readable JSON");

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out_dir, "Output directory (overrides output_dir)");
  };

  auto* describe = app.add_subcommand("describe-surface", "Dump frames and thickness budget");
  add_config(describe);

  std::string form = "limit", field_path;
  double eps = 0.0;
  auto* evalc = app.add_subcommand("eval-energy", "Evaluate one energy form on a field");
  add_config(evalc);
  evalc->add_option("--form", form, "thin | limit | general")->check(CLI::IsMember({"thin", "limit", "general"}));
  evalc->add_option("--field", field_path, "Field CSV")->required()->check(CLI::ExistingFile);
  evalc->add_option("--eps", eps, "Thickness (thin form)");

  auto* minc = app.add_subcommand("minimize", "Run one minimization");
  add_config(minc);
  minc->add_option("--form", form, "thin | limit | general")->check(CLI::IsMember({"thin", "limit", "general"}));
  minc->add_option("--field", field_path, "Initial field CSV")->check(CLI::ExistingFile);
  minc->add_option("--eps", eps, "Thickness (thin form)");

  Overrides ov;
  auto* sweep = app.add_subcommand("sweep", "Full thickness sweep against the surface limit");
  add_config(sweep);
  sweep->add_option("--eps", ov.eps, "Comma-separated eps list")->delimiter(',');
  auto* seed_opt = sweep->add_option("--seed", ov.seed, "Seed override");

  std::string preset_name, preset_file;
  auto* preset = app.add_subcommand("preset", "Write a ready run configuration");
  preset->add_option("name", preset_name, "bulk | interfacial | anisotropic | temperature")->required();
  preset->add_option("--out", preset_file, "Config file to write (stdout when omitted)");

  auto* ident = app.add_subcommand("check-identities", "Anisotropy and corrector identities");
  add_config(ident);

  int resolution = 64;
  double kappa = 1.0;
  std::uint64_t planar_seed = 5;
  auto* planar = app.add_subcommand("crosscheck-planar", "Planar interfacial expansion cross-check");
  planar->add_option("--resolution", resolution, "Grid points per side")->check(CLI::Range(4, 4096));
  planar->add_option("--kappa", kappa, "DMI constant");
  planar->add_option("--seed", planar_seed, "Field seed");
  planar->add_option("--out", common.out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*describe) return describe_surface(common, out);
    if (*evalc) return eval_energy(common, form, field_path, eps, out);
    if (*minc) return minimize_cmd(common, form, field_path, eps, out);
    if (*sweep) {
      ov.has_seed = seed_opt->count() > 0;
      return sweep_cmd(common, ov, out);
    }
    if (*preset) return preset_cmd(common, preset_name, preset_file, out);
    if (*ident) return identities_cmd(common, out);
    if (*planar) return planar_cmd(common, resolution, kappa, planar_seed, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace chiralfilm
