#include "chiralfilm/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace chiralfilm {

using Json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InvalidInput((path.empty() ? std::string("/") : path) + ": " + what);
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr std::array<EnumName<SurfaceKind>, 4> kSurfaceKinds{{{SurfaceKind::Sphere, "sphere"},
                                                              {SurfaceKind::Torus, "torus"},
                                                              {SurfaceKind::Cylinder, "cylinder"},
                                                              {SurfaceKind::FlatPatch, "flat_patch"}}};
constexpr std::array<EnumName<TargetKind>, 2> kTargetKinds{{{TargetKind::Sphere, "sphere"},
                                                            {TargetKind::Ellipsoid, "ellipsoid"}}};
constexpr std::array<EnumName<PerturbationKind>, 5> kPerturbationKinds{
    {{PerturbationKind::Zero, "zero"},
     {PerturbationKind::BulkDMI, "bulk"},
     {PerturbationKind::InterfacialDMI, "interfacial"},
     {PerturbationKind::AnisotropicDMI, "anisotropic"},
     {PerturbationKind::Temperature, "temperature"}}};
constexpr std::array<EnumName<ProfileKind>, 3> kProfileKinds{{{ProfileKind::Constant, "constant"},
                                                              {ProfileKind::Affine, "affine"},
                                                              {ProfileKind::Banded, "banded"}}};
constexpr std::array<EnumName<TensorKind>, 2> kTensorKinds{{{TensorKind::Identity, "identity"},
                                                            {TensorKind::ScalarField, "scalar_field"}}};
constexpr std::array<EnumName<StepRule>, 3> kStepRules{{{StepRule::BarzilaiBorwein, "barzilai_borwein"},
                                                        {StepRule::FixedBacktracking, "fixed_backtracking"},
                                                        {StepRule::LimitedMemoryBFGS, "lbfgs"}}};
constexpr std::array<EnumName<WarmStart>, 2> kWarmStarts{{{WarmStart::LimitFirst, "limit_first"},
                                                          {WarmStart::Independent, "independent"}}};
constexpr std::array<EnumName<InitialGuess>, 2> kInitialGuesses{{{InitialGuess::Constant, "constant"},
                                                                 {InitialGuess::Random, "random"}}};

template <class E, std::size_t N>
const char* enum_name(const std::array<EnumName<E>, N>& table, E value, const char* what) {
  for (const auto& e : table) {
    if (e.value == value) return e.name;
  }
  throw InvalidInput(std::string(what) + " cannot be written to a config");
}

// Reads one JSON object; remembers which keys were consumed so leftovers can be rejected.
class Section {
 public:
  Section(const Json* node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_->is_object()) fail(path_, "expected an object");
  }

  std::string child(const char* key) const { return path_ + "/" + key; }

  const Json* find(const char* key) {
    allowed_.emplace_back(key);
    if (!node_) return nullptr;
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  double number(const char* key, double def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_number()) fail(child(key), "expected a number");
    const double v = j->get<double>();
    if (!std::isfinite(v)) fail(child(key), "expected a finite number");
    return v;
  }

  int integer(const char* key, int def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_number_integer()) fail(child(key), "expected an integer");
    const auto v = j->get<long long>();
    if (v < -2147483647LL || v > 2147483647LL) fail(child(key), "integer out of range");
    return static_cast<int>(v);
  }

  std::uint64_t unsigned_integer(const char* key, std::uint64_t def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_number_unsigned()) fail(child(key), "expected a non-negative integer");
    return j->get<std::uint64_t>();
  }

  bool boolean(const char* key, bool def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_boolean()) fail(child(key), "expected true or false");
    return j->get<bool>();
  }

  std::string string(const char* key, const std::string& def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_string()) fail(child(key), "expected a string");
    return j->get<std::string>();
  }

  template <class E, std::size_t N>
  E choice(const char* key, const std::array<EnumName<E>, N>& table, E def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_string()) fail(child(key), "expected a string");
    const auto s = j->get<std::string>();
    for (const auto& e : table) {
      if (s == e.name) return e.value;
    }
    std::string options;
    for (const auto& e : table) options += std::string(options.empty() ? "" : ", ") + e.name;
    fail(child(key), "unknown value \"" + s + "\" (expected one of " + options + ")");
  }

  Vec3 vec3(const char* key, const Vec3& def) {
    const Json* j = find(key);
    if (!j) return def;
    return read_vec3(*j, child(key));
  }

  Mat3 mat3(const char* key, const Mat3& def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_array() || j->size() != 3) fail(child(key), "expected a 3x3 array of rows");
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = read_vec3((*j)[static_cast<std::size_t>(r)], child(key) + "/" + std::to_string(r)).transpose();
    return m;
  }

  std::vector<double> numbers(const char* key, const std::vector<double>& def) {
    const Json* j = find(key);
    if (!j) return def;
    if (!j->is_array()) fail(child(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j->size(); ++i) {
      const Json& e = (*j)[i];
      if (!e.is_number()) fail(child(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Section sub(const char* key) { return Section(find(key), child(key)); }

  void finish() const {
    if (!node_) return;
    for (auto it = node_->begin(); it != node_->end(); ++it) {
      if (std::find(allowed_.begin(), allowed_.end(), it.key()) == allowed_.end()) {
        fail(path_ + "/" + it.key(), "unknown key");
      }
    }
  }

  static Vec3 read_vec3(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) fail(path, "expected an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
      const Json& e = j[static_cast<std::size_t>(i)];
      if (!e.is_number()) fail(path + "/" + std::to_string(i), "expected a number");
      v[i] = e.get<double>();
      if (!std::isfinite(v[i])) fail(path + "/" + std::to_string(i), "expected a finite number");
    }
    return v;
  }

 private:
  const Json* node_;
  std::string path_;
  std::vector<std::string> allowed_;
};

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json mat_json(const Mat3& m) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(vec_json(m.row(r).transpose()));
  return rows;
}

ScalarProfile read_profile(Section s) {
  ScalarProfile p;
  p.kind = s.choice("kind", kProfileKinds, p.kind);
  p.c0 = s.number("c0", p.c0);
  p.c = s.vec3("c", p.c);
  p.c1 = s.number("c1", p.c1);
  s.finish();
  return p;
}

Json profile_json(const ScalarProfile& p) {
  Json j;
  j["kind"] = enum_name(kProfileKinds, p.kind, "profile kind");
  j["c0"] = p.c0;
  j["c"] = vec_json(p.c);
  j["c1"] = p.c1;
  return j;
}

template <class F>
void with_path(const std::string& path, F&& f) {
  try {
    f();
  } catch (const InvalidInput& e) {
    fail(path, e.what());
  }
}

Json config_json(const RunConfig& c) {
  const SweepConfig& w = c.sweep;
  Json j;
  Json& s = j["surface"];
  s["kind"] = enum_name(kSurfaceKinds, w.surface.kind, "surface kind");
  s["radius"] = w.surface.radius;
  s["theta_cap"] = w.surface.theta_cap;
  s["major"] = w.surface.major;
  s["minor"] = w.surface.minor;
  s["height"] = w.surface.height;
  s["lx"] = w.surface.lx;
  s["ly"] = w.surface.ly;
  s["periodic_u"] = w.surface.periodic_u;
  s["periodic_v"] = w.surface.periodic_v;
  s["n_u"] = w.surface.n_u;
  s["n_v"] = w.surface.n_v;
  s["default_eps_max"] = w.surface.default_eps_max;

  Json& t = j["target"];
  t["kind"] = enum_name(kTargetKinds, w.target.kind, "target kind");
  t["radius"] = w.target.radius;
  t["semi_axes"] = vec_json(w.target.semi_axes);
  t["projection_tolerance"] = w.target.projection_tolerance;
  t["max_projection_iterations"] = w.target.max_projection_iterations;

  Json& p = j["perturbation"];
  p["kind"] = enum_name(kPerturbationKinds, w.perturbation.kind, "perturbation kind");
  p["kappa"] = w.perturbation.kappa;
  p["J"] = mat_json(w.perturbation.J);
  p["ms"] = profile_json(w.perturbation.ms);

  Json& a = j["tensor"];
  a["kind"] = enum_name(kTensorKinds, w.tensor.kind, "tensor kind");
  a["a"] = profile_json(w.tensor.a);

  Json& m = j["minimizer"];
  m["max_iterations"] = w.minimizer.max_iterations;
  m["gradient_tolerance"] = w.minimizer.gradient_tolerance;
  m["step_rule"] = enum_name(kStepRules, w.minimizer.step_rule, "step rule");
  m["armijo"] = w.minimizer.armijo;
  m["shrink"] = w.minimizer.shrink;
  m["max_halvings"] = w.minimizer.max_halvings;
  m["initial_step"] = w.minimizer.initial_step;
  m["memory"] = w.minimizer.memory;

  Json& e = j["sweep"];
  e["eps"] = w.eps;
  e["n_s"] = w.n_s;
  e["warm_start"] = enum_name(kWarmStarts, w.warm_start, "warm start");
  e["initial"] = enum_name(kInitialGuesses, w.initial, "initial guess");
  e["initial_direction"] = vec_json(w.initial_direction);
  e["restarts"] = w.restarts;
  e["identity_samples"] = w.identity_samples;
  e["threads"] = w.threads;

  j["seed"] = w.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InvalidInput("cannot open " + path.string() + " for writing");
  os << content;
  os.flush();
  if (!os) throw InvalidInput("write failed: " + path.string());
}

Json energy_json(const EnergyBreakdown& e) {
  Json j;
  j["tangential"] = e.tangential;
  j["normal_or_anisotropy"] = e.normal_or_anisotropy;
  j["total"] = e.total;
  return j;
}

EnergyBreakdown energy_from(const Json& j) {
  return {j.at("tangential").get<double>(), j.at("normal_or_anisotropy").get<double>(), j.at("total").get<double>()};
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw InvalidInput(std::string("/: malformed JSON: ") + e.what());
  }
  RunConfig c;
  SweepConfig& w = c.sweep;
  Section top(&root, "");

  {
    Section s = top.sub("surface");
    SurfaceSpec& f = w.surface;
    f.kind = s.choice("kind", kSurfaceKinds, f.kind);
    f.radius = s.number("radius", f.radius);
    f.theta_cap = s.number("theta_cap", f.theta_cap);
    f.major = s.number("major", f.major);
    f.minor = s.number("minor", f.minor);
    f.height = s.number("height", f.height);
    f.lx = s.number("lx", f.lx);
    f.ly = s.number("ly", f.ly);
    f.periodic_u = s.boolean("periodic_u", f.periodic_u);
    f.periodic_v = s.boolean("periodic_v", f.periodic_v);
    f.n_u = s.integer("n_u", f.n_u);
    f.n_v = s.integer("n_v", f.n_v);
    f.default_eps_max = s.number("default_eps_max", f.default_eps_max);
    s.finish();
    with_path("/surface", [&] { f.validate(); });
  }
  {
    Section s = top.sub("target");
    TargetSpec& t = w.target;
    t.kind = s.choice("kind", kTargetKinds, t.kind);
    t.radius = s.number("radius", t.radius);
    t.semi_axes = s.vec3("semi_axes", t.semi_axes);
    t.projection_tolerance = s.number("projection_tolerance", t.projection_tolerance);
    t.max_projection_iterations = s.integer("max_projection_iterations", t.max_projection_iterations);
    s.finish();
    with_path("/target", [&] { t.validate(); });
  }
  {
    Section s = top.sub("perturbation");
    PerturbationSpec& p = w.perturbation;
    p.kind = s.choice("kind", kPerturbationKinds, p.kind);
    p.kappa = s.number("kappa", p.kappa);
    p.J = s.mat3("J", p.J);
    p.ms = read_profile(s.sub("ms"));
    s.finish();
    with_path("/perturbation", [&] { p.validate(); });
  }
  {
    Section s = top.sub("tensor");
    w.tensor.kind = s.choice("kind", kTensorKinds, w.tensor.kind);
    w.tensor.a = read_profile(s.sub("a"));
    s.finish();
  }
  {
    Section s = top.sub("minimizer");
    MinimizeOptions& m = w.minimizer;
    m.max_iterations = s.integer("max_iterations", m.max_iterations);
    m.gradient_tolerance = s.number("gradient_tolerance", m.gradient_tolerance);
    m.step_rule = s.choice("step_rule", kStepRules, m.step_rule);
    m.armijo = s.number("armijo", m.armijo);
    m.shrink = s.number("shrink", m.shrink);
    m.max_halvings = s.integer("max_halvings", m.max_halvings);
    m.initial_step = s.number("initial_step", m.initial_step);
    m.memory = s.integer("memory", m.memory);
    s.finish();
    with_path("/minimizer", [&] { m.validate(); });
  }
  {
    Section s = top.sub("sweep");
    w.eps = s.numbers("eps", w.eps);
    w.n_s = s.integer("n_s", w.n_s);
    w.warm_start = s.choice("warm_start", kWarmStarts, w.warm_start);
    w.initial = s.choice("initial", kInitialGuesses, w.initial);
    w.initial_direction = s.vec3("initial_direction", w.initial_direction);
    w.restarts = s.integer("restarts", w.restarts);
    w.identity_samples = s.integer("identity_samples", w.identity_samples);
    w.threads = s.integer("threads", w.threads);
    s.finish();
  }
  w.seed = top.unsigned_integer("seed", w.seed);
  w.minimizer.seed = w.seed;
  c.output_dir = top.string("output_dir", c.output_dir);
  if (c.output_dir.empty()) fail("/output_dir", "must not be empty");
  top.finish();

  with_path("/sweep", [&] {
    const SurfaceGrid grid(w.surface);
    w.validate(grid.budget());
    const TargetManifold target(w.target);
    EllipticTensor tensor(w.tensor, grid);
  });
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput("cannot read config " + path.string());
  std::ostringstream text;
  text << is.rdbuf();
  return parse_config(text.str());
}

std::string echo_config(const RunConfig& config) { return dump(config_json(config)); }

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"bulk", "interfacial", "anisotropic", "temperature"};
  return names;
}

RunConfig preset_config(std::string_view name) {
  RunConfig c;
  PerturbationSpec& p = c.sweep.perturbation;
  if (name == "bulk") {
    p.kind = PerturbationKind::BulkDMI;
  } else if (name == "interfacial") {
    p.kind = PerturbationKind::InterfacialDMI;
  } else if (name == "anisotropic") {
    p.kind = PerturbationKind::AnisotropicDMI;
    p.J << 1.0, 0.3, 0.0, 0.0, 0.7, 0.2, 0.1, 0.0, 0.9;
  } else if (name == "temperature") {
    p.kind = PerturbationKind::Temperature;
    p.ms = ScalarProfile{ProfileKind::Banded, 1.0, Vec3::Zero(), 0.2};
    c.sweep.tensor = EllipticTensorSpec{TensorKind::ScalarField, p.ms};
  } else {
    throw InvalidInput("unknown preset \"" + std::string(name) + "\" (expected bulk, interfacial, anisotropic or temperature)");
  }
  c.sweep.minimizer.step_rule = StepRule::LimitedMemoryBFGS;
  c.output_dir = "out/" + std::string(name);
  return c;
}

int resolve_threads(int configured) {
  const char* env = std::getenv("CHIRALFILM_THREADS");
  if (!env || !*env) return configured;
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (errno != 0 || *end != '\0' || v < 1 || v > 4096) {
    throw InvalidInput(std::string("CHIRALFILM_THREADS must be a positive integer, got \"") + env + "\"");
  }
  return static_cast<int>(v);
}

void write_field_csv(std::ostream& os, const DirectorField& field, const SurfaceGrid& grid) {
  if (field.n_nodes != grid.size()) throw InvalidInput("field does not match the surface grid");
  const bool thin = field.layout == Layout::Thin;
  os << (thin ? "u,v,s,ux,uy,uz\n" : "u,v,ux,uy,uz\n");
  std::string row;
  for (int k = 0; k < field.layers(); ++k) {
    for (int i = 0; i < grid.n_u(); ++i) {
      for (int j = 0; j < grid.n_v(); ++j) {
        const Vec3& x = field.at(grid.index(i, j), k);
        row = format17(grid.u(i)) + "," + format17(grid.v(j));
        if (thin) row += "," + format17(field.s(k));
        row += "," + format17(x.x()) + "," + format17(x.y()) + "," + format17(x.z()) + "\n";
        os << row;
      }
    }
  }
}

DirectorField read_field_csv(std::istream& is, const SurfaceGrid& grid) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("field csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool thin;
  if (line == "u,v,ux,uy,uz") {
    thin = false;
  } else if (line == "u,v,s,ux,uy,uz") {
    thin = true;
  } else {
    throw InvalidInput("field csv: unexpected header \"" + line + "\"");
  }
  const std::size_t cols = thin ? 6 : 5;
  std::vector<std::array<double, 6>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 6> r{};
    const char* p = line.c_str();
    for (std::size_t c = 0; c < cols; ++c) {
      char* end = nullptr;
      r[c] = std::strtod(p, &end);
      if (end == p || !std::isfinite(r[c])) {
        throw InvalidInput("field csv line " + std::to_string(lineno) + ": bad number in column " + std::to_string(c + 1));
      }
      p = end;
      if (c + 1 < cols) {
        if (*p != ',') throw InvalidInput("field csv line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " columns");
        ++p;
      }
    }
    if (*p != '\0') throw InvalidInput("field csv line " + std::to_string(lineno) + ": trailing data");
    rows.push_back(r);
  }
  const std::size_t n = static_cast<std::size_t>(grid.size());
  if (rows.empty() || rows.size() % n != 0) {
    throw InvalidInput("field csv: " + std::to_string(rows.size()) + " rows do not match " + std::to_string(n) + " grid nodes");
  }
  const int layers = static_cast<int>(rows.size() / n);
  if (!thin && layers != 1) throw InvalidInput("field csv: surface field has more rows than grid nodes");
  if (thin && layers < 2) throw InvalidInput("field csv: thin field needs at least 2 layers");
  DirectorField f = thin ? DirectorField::thin(grid.size(), layers, Vec3::Zero()) : DirectorField::surface(grid.size(), Vec3::Zero());
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  std::size_t r = 0;
  for (int k = 0; k < layers; ++k) {
    for (int i = 0; i < grid.n_u(); ++i) {
      for (int j = 0; j < grid.n_v(); ++j, ++r) {
        const auto& row = rows[r];
        if (!close(row[0], grid.u(i)) || !close(row[1], grid.v(j)) || (thin && !close(row[2], f.s(k)))) {
          throw InvalidInput("field csv row " + std::to_string(r + 1) + ": coordinates do not match the grid");
        }
        const std::size_t o = thin ? 3 : 2;
        f.at(grid.index(i, j), k) = Vec3(row[o], row[o + 1], row[o + 2]);
      }
    }
  }
  return f;
}

DirectorField load_field_csv(const std::filesystem::path& path, const SurfaceGrid& grid) {
  std::ifstream is(path);
  if (!is) throw InvalidInput("cannot read field " + path.string());
  return read_field_csv(is, grid);
}

std::string energy_to_json(const EnergyBreakdown& e) { return energy_json(e).dump(); }

std::string report_to_json(const SweepReport& report) {
  Json j;
  j["version"] = report.version;
  Json& l = j["limit"];
  l["min_energy"] = energy_json(report.limit.min_energy);
  l["iterations"] = report.limit.iterations;
  l["termination"] = report.limit.termination;
  l["gradient_norm"] = report.limit.gradient_norm;
  l["restarts_used"] = report.limit.restarts_used;
  Json entries = Json::array();
  for (const EpsResult& e : report.entries) {
    Json x;
    x["eps"] = e.eps;
    x["failed"] = e.failed;
    x["failure"] = e.failure;
    x["min_energy"] = energy_json(e.min_energy);
    x["iterations"] = e.iterations;
    x["termination"] = e.termination;
    x["gradient_norm"] = e.gradient_norm;
    x["recovery_energy"] = energy_json(e.recovery_energy);
    x["gap"] = e.gap;
    x["recovery_gap"] = e.recovery_gap;
    x["h1_distance"] = e.h1_distance;
    x["s_share"] = e.s_share;
    entries.push_back(std::move(x));
  }
  j["entries"] = std::move(entries);
  Json ids = Json::array();
  for (const IdentityCheck& c : report.identities) {
    ids.push_back(Json{{"name", c.name},
                       {"residual", c.residual},
                       {"scale", c.scale},
                       {"vanishing_predicted", c.vanishing_predicted},
                       {"pass", c.pass}});
  }
  j["identities"] = std::move(ids);
  const SweepVerdict& v = report.verdict;
  j["verdict"] = Json{{"tolerance", v.tolerance},
                      {"gaps_nonincreasing", v.gaps_nonincreasing},
                      {"gap_ratio", v.gap_ratio},
                      {"gap_ratio_ok", v.gap_ratio_ok},
                      {"recovery_nonincreasing", v.recovery_nonincreasing},
                      {"recovery_bounds_minimum", v.recovery_bounds_minimum},
                      {"h1_nonincreasing", v.h1_nonincreasing},
                      {"s_share_decreasing", v.s_share_decreasing},
                      {"identities_ok", v.identities_ok},
                      {"pass", v.pass}};
  return dump(j);
}

SweepReport report_from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text.begin(), text.end());
    SweepReport r;
    r.version = j.at("version").get<std::string>();
    const Json& l = j.at("limit");
    r.limit.min_energy = energy_from(l.at("min_energy"));
    r.limit.iterations = l.at("iterations").get<int>();
    r.limit.termination = l.at("termination").get<std::string>();
    r.limit.gradient_norm = l.at("gradient_norm").get<double>();
    r.limit.restarts_used = l.at("restarts_used").get<int>();
    for (const Json& x : j.at("entries")) {
      EpsResult e;
      e.eps = x.at("eps").get<double>();
      e.failed = x.at("failed").get<bool>();
      e.failure = x.at("failure").get<std::string>();
      e.min_energy = energy_from(x.at("min_energy"));
      e.iterations = x.at("iterations").get<int>();
      e.termination = x.at("termination").get<std::string>();
      e.gradient_norm = x.at("gradient_norm").get<double>();
      e.recovery_energy = energy_from(x.at("recovery_energy"));
      e.gap = x.at("gap").get<double>();
      e.recovery_gap = x.at("recovery_gap").get<double>();
      e.h1_distance = x.at("h1_distance").get<double>();
      e.s_share = x.at("s_share").get<double>();
      r.entries.push_back(std::move(e));
    }
    for (const Json& x : j.at("identities")) {
      r.identities.push_back(IdentityCheck{x.at("name").get<std::string>(), x.at("residual").get<double>(),
                                           x.at("scale").get<double>(), x.at("vanishing_predicted").get<bool>(),
                                           x.at("pass").get<bool>()});
    }
    const Json& v = j.at("verdict");
    SweepVerdict& d = r.verdict;
    d.tolerance = v.at("tolerance").get<double>();
    d.gaps_nonincreasing = v.at("gaps_nonincreasing").get<bool>();
    d.gap_ratio = v.at("gap_ratio").get<double>();
    d.gap_ratio_ok = v.at("gap_ratio_ok").get<bool>();
    d.recovery_nonincreasing = v.at("recovery_nonincreasing").get<bool>();
    d.recovery_bounds_minimum = v.at("recovery_bounds_minimum").get<bool>();
    d.h1_nonincreasing = v.at("h1_nonincreasing").get<bool>();
    d.s_share_decreasing = v.at("s_share_decreasing").get<bool>();
    d.identities_ok = v.at("identities_ok").get<bool>();
    d.pass = v.at("pass").get<bool>();
    return r;
  } catch (const Json::exception& e) {
    throw InvalidInput(std::string("malformed report: ") + e.what());
  }
}

void write_sweep_csv(std::ostream& os, const SweepReport& report) {
  os << "eps,minE_eps,minE_limit,gap,recovery_gap,h1_dist\n";
  for (const EpsResult& e : report.entries) {
    os << format17(e.eps) << ',' << format17(e.min_energy.total) << ',' << format17(report.limit.min_energy.total)
       << ',' << format17(e.gap) << ',' << format17(e.recovery_gap) << ',' << format17(e.h1_distance) << '\n';
  }
}

void write_run_echo(const RunConfig& config, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_file(dir / "config.echo.json", echo_config(config));
  write_file(dir / "version.txt", std::string(version()) + "\n");
}

void serialize_report(const SweepReport& report, const SweepFields* fields, const RunConfig& config,
                      const SurfaceGrid& grid, const std::filesystem::path& dir) {
  write_run_echo(config, dir);
  write_file(dir / "report.json", report_to_json(report));
  std::ostringstream csv;
  write_sweep_csv(csv, report);
  write_file(dir / "sweep.csv", csv.str());
  if (!fields) return;
  const auto fdir = dir / "fields";
  ensure_dir(fdir);
  std::ostringstream f;
  write_field_csv(f, fields->limit, grid);
  write_file(fdir / "limit.csv", f.str());
  for (std::size_t k = 0; k < fields->thin.size(); ++k) {
    if (fields->thin[k].values.empty()) continue;
    std::ostringstream t;
    write_field_csv(t, fields->thin[k], grid);
    write_file(fdir / ("eps_" + std::to_string(k) + ".csv"), t.str());
  }
}

}  // namespace chiralfilm
