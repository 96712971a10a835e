#include "chiralfilm/minimizer.hpp"

#include "chiralfilm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <ostream>

namespace chiralfilm {

void MinimizeOptions::validate() const {
  if (max_iterations < 0) throw InvalidInput("max_iterations must be non-negative");
  if (!(gradient_tolerance > 0.0)) throw InvalidInput("gradient_tolerance must be positive");
  if (!(armijo > 0.0 && armijo < 0.5)) throw InvalidInput("armijo constant must lie in (0, 0.5)");
  if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidInput("shrink factor must lie in (0, 1)");
  if (max_halvings < 1) throw InvalidInput("max_halvings must be at least 1");
  if (!(initial_step > 0.0)) throw InvalidInput("initial_step must be positive");
  if (memory < 1) throw InvalidInput("memory must be at least 1");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged: return "converged";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::LineSearchFailure: return "line_search_failure";
    case Termination::StepCollapse: return "step_collapse";
  }
  return "unknown";
}

void MinimizeReport::write_trace_csv(std::ostream& os) const {
  os << "iteration,energy,grad_norm\n";
  char buf[96];
  for (std::size_t i = 0; i < energy_trace.size(); ++i) {
    const double g = i < gradient_trace.size() ? gradient_trace[i] : 0.0;
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, energy_trace[i], g);
    os << buf;
  }
}

namespace {

struct Iterate {
  DirectorField field;
  EnergyBreakdown energy;
  std::vector<Vec3> gradient;
  std::vector<Vec3> direction;  // tangent-projected metric gradient
  double sup_norm = 0.0;
  double metric_sq = 0.0;  // sum w |direction|^2
};

void finish_iterate(Iterate& it, std::span<const double> w, const TargetManifold& target) {
  const std::size_t n = it.field.values.size();
  it.direction.resize(n);
  it.sup_norm = 0.0;
  it.metric_sq = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const Vec3 nm = target.normal_extension(it.field.values[p]);
    const Vec3 g = it.gradient[p] / w[p];
    const Vec3 d = g - g.dot(nm) * nm;
    it.direction[p] = d;
    it.sup_norm = std::max(it.sup_norm, d.norm());
    it.metric_sq += w[p] * d.squaredNorm();
  }
}

struct Pair {
  std::vector<Vec3> s, y;
  double rho = 0.0;
  double gamma = 1.0;
};

// Two-loop recursion: out = H g for the stored curvature pairs (metric inner product).
template <class Dot>
void two_loop(const std::deque<Pair>& memory, const std::vector<Vec3>& g, Dot&& dot, std::vector<Vec3>& out) {
  out = g;
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * dot(memory[k].s, out);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] -= alpha[k] * memory[k].y[p];
  }
  const double gamma = memory.back().gamma;
  for (Vec3& v : out) v *= gamma;
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * dot(memory[k].y, out);
    for (std::size_t p = 0; p < out.size(); ++p) out[p] += (alpha[k] - beta) * memory[k].s[p];
  }
}

bool evaluate(const Objective& objective, Iterate& it) {
  it.energy = objective(it.field, &it.gradient);
  if (!std::isfinite(it.energy.total)) {
    throw NumericalFailure("minimizer produced a non-finite energy");
  }
  return true;
}

}  // namespace

std::pair<DirectorField, MinimizeReport> minimize(const Objective& objective, std::span<const double> metric_weights,
                                                  const TargetManifold& target, DirectorField initial,
                                                  const MinimizeOptions& options) {
  options.validate();
  if (metric_weights.size() != initial.values.size()) throw InvalidInput("metric weights do not match the field");
  for (double w : metric_weights) {
    if (!(w > 0.0)) throw InvalidInput("metric weights must be positive");
  }
  initial.project_onto(target);

  Iterate cur;
  cur.field = std::move(initial);
  evaluate(objective, cur);
  finish_iterate(cur, metric_weights, target);

  MinimizeReport report;
  report.energy_scale = std::max(1.0, cur.energy.total);
  const double tol = options.gradient_tolerance * report.energy_scale;
  report.energy_trace.push_back(cur.energy.total);
  report.gradient_trace.push_back(cur.sup_norm);

  const double max_move = 0.5 * target.admissible_radius();
  const double rounding_floor = 64.0 * std::numeric_limits<double>::epsilon();
  const std::size_t n = cur.field.values.size();
  auto dot = [&](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double acc = 0.0;
    for (std::size_t p = 0; p < n; ++p) acc += metric_weights[p] * a[p].dot(b[p]);
    return acc;
  };

  double step = cur.sup_norm > 0.0 ? options.initial_step / cur.sup_norm : 0.0;
  std::deque<Pair> memory;
  std::vector<Vec3> dir(n);
  Termination reason = Termination::MaxIterations;
  int iter = 0;

  while (true) {
    if (cur.sup_norm < tol) {
      reason = Termination::Converged;
      break;
    }
    if (iter >= options.max_iterations) {
      reason = Termination::MaxIterations;
      break;
    }

    bool quasi_newton = options.step_rule == StepRule::LimitedMemoryBFGS && !memory.empty();
    if (quasi_newton) {
      two_loop(memory, cur.direction, dot, dir);
      for (std::size_t p = 0; p < n; ++p) {
        const Vec3 nm = target.normal_extension(cur.field.values[p]);
        dir[p] = -(dir[p] - dir[p].dot(nm) * nm);
      }
      if (!(dot(dir, cur.direction) < 0.0)) {
        memory.clear();
        quasi_newton = false;
      }
    }
    if (!quasi_newton) {
      for (std::size_t p = 0; p < n; ++p) dir[p] = -cur.direction[p];
    }
    double dir_sup = 0.0;
    for (const Vec3& d : dir) dir_sup = std::max(dir_sup, d.norm());
    const double slope = dot(dir, cur.direction);  // negative

    if (options.step_rule == StepRule::FixedBacktracking) step = options.initial_step / cur.sup_norm;
    if (options.step_rule == StepRule::LimitedMemoryBFGS) step = quasi_newton ? 1.0 : options.initial_step / cur.sup_norm;
    step = std::min(step, max_move / dir_sup);

    bool accepted = false;
    bool collapsed = false;
    Iterate trial;
    for (int h = 0; h <= options.max_halvings; ++h) {
      // predicted decrease no longer resolvable in floating point
      if (-step * slope < rounding_floor * std::max(1.0, std::abs(cur.energy.total))) {
        collapsed = true;
        break;
      }
      trial.field = cur.field;
      bool ok = true;
      try {
        for (std::size_t p = 0; p < n; ++p) {
          trial.field.values[p] = target.project(cur.field.values[p] + step * dir[p]);
        }
      } catch (const InvalidInput&) {
        ok = false;
      }
      if (ok) {
        evaluate(objective, trial);
        if (trial.energy.total <= cur.energy.total + options.armijo * step * slope) {
          accepted = true;
          break;
        }
      }
      step *= options.shrink;
    }
    if (collapsed) {
      reason = Termination::StepCollapse;
      break;
    }
    if (!accepted) {
      reason = Termination::LineSearchFailure;
      break;
    }
    finish_iterate(trial, metric_weights, target);

    Pair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    double move = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      pair.s[p] = trial.field.values[p] - cur.field.values[p];
      pair.y[p] = trial.direction[p] - cur.direction[p];
      move = std::max(move, pair.s[p].norm());
    }
    const double ss = dot(pair.s, pair.s), sy = dot(pair.s, pair.y);
    const double prev_step = step;
    cur = std::move(trial);
    ++iter;
    report.energy_trace.push_back(cur.energy.total);
    report.gradient_trace.push_back(cur.sup_norm);

    if (move == 0.0) {
      reason = Termination::StepCollapse;
      break;
    }
    if (options.step_rule == StepRule::BarzilaiBorwein) {
      // Barzilai-Borwein length from the metric inner product of the last step
      step = (sy > 0.0) ? ss / sy : 2.0 * prev_step;
    } else if (options.step_rule == StepRule::LimitedMemoryBFGS && sy > 1e-12 * ss) {
      pair.rho = 1.0 / sy;
      pair.gamma = sy / dot(pair.y, pair.y);
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
  }

  report.iterations = iter;
  report.final_energy = cur.energy;
  report.final_gradient_norm = cur.sup_norm;
  report.termination = reason;
  return {std::move(cur.field), std::move(report)};
}

std::pair<DirectorField, MinimizeReport> minimize(const EnergyModel& model, EnergyForm form, double eps,
                                                  DirectorField initial, const MinimizeOptions& options) {
  const auto weights = model.metric_weights(initial);
  Objective objective = [&model, form, eps](const DirectorField& f, std::vector<Vec3>* g) {
    return model.evaluate(form, f, eps, g);
  };
  return minimize(objective, weights, model.target(), std::move(initial), options);
}

DirectorField random_field(const SurfaceGrid& grid, const TargetManifold& target, Layout layout, int n_s,
                           std::uint64_t seed) {
  Rng rng(seed);
  DirectorField f = layout == Layout::Thin ? DirectorField::thin(grid.size(), n_s, Vec3::Zero())
                                           : DirectorField::surface(grid.size(), Vec3::Zero());
  for (Vec3& v : f.values) v = sample_on_target(target, rng);
  return f;
}

DirectorField constant_field(const SurfaceGrid& grid, const TargetManifold& target, Layout layout, int n_s,
                             const Vec3& direction) {
  const Vec3 value = target.project(direction);
  return layout == Layout::Thin ? DirectorField::thin(grid.size(), n_s, value)
                                : DirectorField::surface(grid.size(), value);
}

}  // namespace chiralfilm
