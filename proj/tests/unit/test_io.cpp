#include "chiralfilm/io.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace chiralfilm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "chiralfilm_io_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "chiralfilm");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = cli_dispatch(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

std::string invalid_message(const std::string& text) {
  try {
    parse_config(text);
  } catch (const InvalidInput& e) {
    return e.what();
  }
  return "";
}

RunConfig small_config(const fs::path& dir) {
  RunConfig c = preset_config("interfacial");
  c.sweep.surface.n_u = c.sweep.surface.n_v = 8;
  c.sweep.eps = {0.2, 0.1};
  c.sweep.n_s = 4;
  c.sweep.minimizer.max_iterations = 50;
  c.output_dir = dir.string();
  return c;
}

}  // namespace

TEST(Io, DefaultConfigEchoIsStable) {
  const RunConfig c = parse_config("{}");
  const std::string echo = echo_config(c);
  EXPECT_EQ(echo_config(parse_config(echo)), echo);
  EXPECT_EQ(echo.back(), '\n');
}

TEST(Io, EveryPresetRoundTrips) {
  for (const std::string& name : preset_names()) {
    const RunConfig c = preset_config(name);
    const RunConfig back = parse_config(echo_config(c));
    EXPECT_EQ(echo_config(back), echo_config(c)) << name;
    EXPECT_EQ(back.sweep.perturbation.J, c.sweep.perturbation.J);
    EXPECT_EQ(back.sweep.minimizer.step_rule, c.sweep.minimizer.step_rule);
  }
  EXPECT_THROW(preset_config("chiral"), InvalidInput);
}

TEST(Io, NonDefaultValuesSurviveRoundTrip) {
  RunConfig c;
  c.sweep.surface.kind = SurfaceKind::Torus;
  c.sweep.target.kind = TargetKind::Ellipsoid;
  c.sweep.target.semi_axes = Vec3(2.0, 1.0, 1.0 / 3.0);
  c.sweep.perturbation.kind = PerturbationKind::Temperature;
  c.sweep.perturbation.ms = ScalarProfile{ProfileKind::Affine, 1.0, Vec3(0.1, 0.0, 0.05), 0.0};
  c.sweep.eps = {0.2, 0.1 / 3.0};
  c.sweep.seed = 18446744073709551615ull;
  c.sweep.minimizer.step_rule = StepRule::FixedBacktracking;
  c.sweep.warm_start = WarmStart::Independent;
  const RunConfig back = parse_config(echo_config(c));
  EXPECT_EQ(back.sweep.target.semi_axes, c.sweep.target.semi_axes);
  EXPECT_EQ(back.sweep.eps, c.sweep.eps);
  EXPECT_EQ(back.sweep.seed, c.sweep.seed);
  EXPECT_EQ(back.sweep.minimizer.seed, c.sweep.seed);
  EXPECT_EQ(back.sweep.perturbation.ms.c, c.sweep.perturbation.ms.c);
  EXPECT_EQ(back.sweep.warm_start, WarmStart::Independent);
}

TEST(Io, ErrorsNameTheJsonPath) {
  EXPECT_EQ(invalid_message(R"({"perturbation": {"J": [[1,0,0],[0,1,"x"],[0,0,1]]}})"),
            "/perturbation/J/1/2: expected a number");
  EXPECT_NE(invalid_message(R"({"surface": {"radus": 1}})").find("/surface/radus"), std::string::npos);
  EXPECT_NE(invalid_message(R"({"colour": 1})").find("/colour"), std::string::npos);
  EXPECT_NE(invalid_message(R"({"target": {"kind": "torus"}})").find("/target/kind"), std::string::npos);
  EXPECT_NE(invalid_message(R"({"surface": {"radius": -1}})").find("/surface"), std::string::npos);
  EXPECT_NE(invalid_message(R"({"sweep": {"eps": [0.1, 0.2]}})").find("/sweep"), std::string::npos);
  EXPECT_NE(invalid_message("[1, 2"), "");
}

TEST(Io, ThreadOverrideFromEnvironment) {
  ::unsetenv("CHIRALFILM_THREADS");
  EXPECT_EQ(resolve_threads(3), 3);
  ::setenv("CHIRALFILM_THREADS", "5", 1);
  EXPECT_EQ(resolve_threads(3), 5);
  ::setenv("CHIRALFILM_THREADS", "0", 1);
  EXPECT_THROW(resolve_threads(3), InvalidInput);
  ::setenv("CHIRALFILM_THREADS", "4x", 1);
  EXPECT_THROW(resolve_threads(3), InvalidInput);
  ::unsetenv("CHIRALFILM_THREADS");
}

TEST(Io, FieldCsvRoundTripIsExact) {
  SurfaceSpec s;
  s.kind = SurfaceKind::Torus;
  s.n_u = s.n_v = 6;
  const SurfaceGrid g(s);
  const TargetManifold m{TargetSpec{}};
  for (Layout layout : {Layout::Surface, Layout::Thin}) {
    const DirectorField f = random_field(g, m, layout, 4, 8);
    std::stringstream ss;
    write_field_csv(ss, f, g);
    const DirectorField back = read_field_csv(ss, g);
    EXPECT_EQ(back.layout, layout);
    EXPECT_EQ(back.values, f.values);
  }
}

TEST(Io, FieldCsvRejectsMismatchedGrid) {
  SurfaceSpec s;
  s.n_u = s.n_v = 6;
  const SurfaceGrid g(s);
  SurfaceSpec t = s;
  t.n_v = 7;
  const SurfaceGrid h(t);
  std::stringstream ss;
  write_field_csv(ss, DirectorField::surface(g.size(), Vec3::UnitZ()), g);
  EXPECT_THROW(read_field_csv(ss, h), InvalidInput);
  std::stringstream bad("u,v,x\n");
  EXPECT_THROW(read_field_csv(bad, g), InvalidInput);
}

TEST(Io, ReportJsonAndCsv) {
  const fs::path dir = scratch("report");
  const RunConfig c = small_config(dir);
  SweepFields fields;
  const SweepReport r = run_sweep(c.sweep, &fields);
  EXPECT_TRUE(report_from_json(report_to_json(r)) == r);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "eps,minE_eps,minE_limit,gap,recovery_gap,h1_dist");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(c.sweep.eps.size()) + 1);

  serialize_report(r, &fields, c, SurfaceGrid(c.sweep.surface), dir);
  for (const char* name : {"report.json", "sweep.csv", "config.echo.json", "version.txt", "fields/limit.csv",
                           "fields/eps_0.csv", "fields/eps_1.csv"}) {
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  }
  EXPECT_EQ(slurp(dir / "config.echo.json"), echo_config(c));
  EXPECT_TRUE(report_from_json(slurp(dir / "report.json")) == r);
}

TEST(Io, CliEvalEnergyMatchesLibraryBitForBit) {
  const fs::path dir = scratch("eval");
  RunConfig c = small_config(dir / "out");
  c.sweep.target.kind = TargetKind::Ellipsoid;
  c.sweep.target.semi_axes = Vec3(2.0, 1.0, 1.0);
  c.sweep.perturbation.kind = PerturbationKind::BulkDMI;
  spit(dir / "config.json", echo_config(c));
  const SurfaceGrid g(c.sweep.surface);
  const TargetManifold m(c.sweep.target);
  const Perturbation p(c.sweep.perturbation, g);
  const DirectorField surface = random_field(g, m, Layout::Surface, 1, 3);
  const DirectorField thin = random_field(g, m, Layout::Thin, 4, 4);
  {
    std::ofstream os(dir / "surface.csv");
    write_field_csv(os, surface, g);
    std::ofstream ot(dir / "thin.csv");
    write_field_csv(ot, thin, g);
  }
  auto cli_energy = [&](const std::vector<std::string>& extra) {
    std::vector<std::string> args{"eval-energy", "--config", (dir / "config.json").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    std::string out, err;
    EXPECT_EQ(run(args, &out, &err), 0) << err;
    const auto j = nlohmann::json::parse(out);
    return EnergyBreakdown{j.at("tangential").get<double>(), j.at("normal_or_anisotropy").get<double>(),
                           j.at("total").get<double>()};
  };
  EXPECT_EQ(cli_energy({"--form", "limit", "--field", (dir / "surface.csv").string()}),
            eval_limit_energy(surface, g, m, p));
  EXPECT_EQ(cli_energy({"--form", "thin", "--eps", "0.1", "--field", (dir / "thin.csv").string()}),
            eval_thin_energy(thin, g, m, p, 0.1));
}

TEST(Io, CliExitCodes) {
  const fs::path dir = scratch("codes");
  std::string out, err;
  EXPECT_EQ(run({"--help"}, &out), 0);
  EXPECT_NE(out.find("sweep"), std::string::npos);
  EXPECT_EQ(run({"no-such-command"}, &out, &err), 1);
  EXPECT_EQ(run({}, &out, &err), 1);
  spit(dir / "bad.json", R"({"surface": {"n_u": 1}})");
  EXPECT_EQ(run({"check-identities", "--config", (dir / "bad.json").string()}, &out, &err), 1);
  EXPECT_NE(err.find("/surface"), std::string::npos);
  EXPECT_EQ(run({"preset", "nonsense"}, &out, &err), 1);
}

TEST(Io, CliSweepIsByteReproducible) {
  const fs::path dir = scratch("sweep");
  spit(dir / "config.json", echo_config(small_config(dir / "unused")));
  std::string out, err;
  for (const char* run_dir : {"a", "b"}) {
    ASSERT_EQ(run({"--quiet", "sweep", "--config", (dir / "config.json").string(), "--out", (dir / run_dir).string()},
                  &out, &err),
              0)
        << err;
  }
  EXPECT_EQ(slurp(dir / "a/report.json"), slurp(dir / "b/report.json"));
  EXPECT_EQ(slurp(dir / "a/fields/eps_1.csv"), slurp(dir / "b/fields/eps_1.csv"));
}

TEST(Io, CliPresetWritesLoadableConfig) {
  const fs::path dir = scratch("preset");
  std::string out;
  ASSERT_EQ(run({"preset", "anisotropic", "--out", (dir / "a.json").string()}, &out), 0);
  EXPECT_EQ(echo_config(load_config(dir / "a.json")), echo_config(preset_config("anisotropic")));
}
