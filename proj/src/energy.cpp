#include "chiralfilm/energy.hpp"

#include <cmath>
#include <sstream>

namespace chiralfilm {

DirectorField DirectorField::surface(int n_nodes, const Vec3& fill) {
  DirectorField f;
  f.layout = Layout::Surface;
  f.n_nodes = n_nodes;
  f.n_s = 1;
  f.values.assign(static_cast<std::size_t>(n_nodes), fill);
  return f;
}

DirectorField DirectorField::thin(int n_nodes, int n_s, const Vec3& fill) {
  if (n_s < 2) throw InvalidInput("thin fields need at least two s-layers");
  DirectorField f;
  f.layout = Layout::Thin;
  f.n_nodes = n_nodes;
  f.n_s = n_s;
  f.values.assign(static_cast<std::size_t>(n_nodes) * static_cast<std::size_t>(n_s), fill);
  return f;
}

double DirectorField::s(int layer) const {
  if (layout == Layout::Surface) return 0.0;
  return -1.0 + 2.0 * layer / (n_s - 1);
}

void DirectorField::project_onto(const TargetManifold& target) {
  for (Vec3& v : values) v = target.project(v);
}

double DirectorField::max_distance_to(const TargetManifold& target) const {
  double worst = 0.0;
  for (const Vec3& v : values) worst = std::max(worst, std::abs(target.signed_distance(v)));
  return worst;
}

DirectorField extend_constant(const DirectorField& surface, int n_s) {
  if (surface.layout != Layout::Surface) throw InvalidInput("extend_constant expects a Surface field");
  DirectorField out = DirectorField::thin(surface.n_nodes, n_s, Vec3::Zero());
  for (int k = 0; k < n_s; ++k) {
    for (int p = 0; p < surface.n_nodes; ++p) out.at(p, k) = surface.at(p);
  }
  return out;
}

std::vector<double> s_weights(int n_s) {
  const double h = 2.0 / (n_s - 1);
  std::vector<double> w(static_cast<std::size_t>(n_s), h);
  w.front() = w.back() = 0.5 * h;
  return w;
}

namespace {

Stencil1D s_stencil(int n_s) { return Stencil1D{n_s, 2.0 / (n_s - 1), false}; }

// Chart derivatives of one layer at node (i, j), divided by the chart stretch.
struct LayerDerivatives {
  Vec3 d1;
  Vec3 d2;
};

inline LayerDerivatives tangential_at(const SurfaceGrid& g, const Vec3* layer, int i, int j, const SurfaceFrame& f) {
  const int nv = g.n_v();
  LayerDerivatives d;
  d.d1 = g.stencil_u().apply<Vec3>(i, [&](int ii) { return layer[ii * nv + j]; }) / f.chart_metric[0];
  d.d2 = g.stencil_v().apply<Vec3>(j, [&](int jj) { return layer[i * nv + jj]; }) / f.chart_metric[1];
  return d;
}

// Adds the transpose of the tangential stencils applied to per-point adjoints.
void scatter_tangential(const SurfaceGrid& g, const std::vector<Vec3>& adj1, const std::vector<Vec3>& adj2,
                        Vec3* out_layer, std::size_t offset) {
  const int nu = g.n_u(), nv = g.n_v();
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const std::size_t p = offset + static_cast<std::size_t>(i * nv + j);
      const auto tu = g.stencil_u().taps(i);
      for (int t = 0; t < g.stencil_u().count(i); ++t) out_layer[tu[t].index * nv + j] += tu[t].weight * adj1[p];
      const auto tv = g.stencil_v().taps(j);
      for (int t = 0; t < g.stencil_v().count(j); ++t) out_layer[i * nv + tv[t].index] += tv[t].weight * adj2[p];
    }
  }
}

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << what << " energy is not finite";
    throw NumericalFailure(msg.str());
  }
}

}  // namespace

EnergyModel::EnergyModel(const SurfaceGrid& grid, const TargetManifold& target, const Perturbation& perturbation,
                         const EllipticTensor* tensor)
    : grid_(&grid), target_(&target), pert_(&perturbation), tensor_(tensor) {
  if (&perturbation.grid() != &grid) throw InvalidInput("perturbation is bound to a different surface grid");
}

void EnergyModel::check_layout(const DirectorField& field, Layout expected) const {
  if (field.layout != expected) {
    throw InvalidInput(expected == Layout::Thin ? "expected a Thin field" : "expected a Surface field");
  }
  if (field.n_nodes != grid_->size() || field.values.size() != static_cast<std::size_t>(field.n_nodes * field.layers())) {
    throw InvalidInput("field does not match the surface grid");
  }
}

EnergyBreakdown EnergyModel::thin(const DirectorField& field, double eps, std::vector<Vec3>* gradient) const {
  check_layout(field, Layout::Thin);
  if (!grid_->budget().admits(eps)) {
    std::ostringstream msg;
    msg << "thickness eps = " << eps << " outside (0, " << grid_->budget().eps_max << "]";
    throw InvalidInput(msg.str());
  }
  const SurfaceGrid& g = *grid_;
  const int n = g.size(), ns = field.n_s, nu = g.n_u(), nv = g.n_v();
  const auto sw = s_weights(ns);
  const Stencil1D ss = s_stencil(ns);
  const double inv_eps = 1.0 / eps;

  std::vector<Vec3> adj1, adj2, adjs;
  if (gradient) {
    gradient->assign(field.values.size(), Vec3::Zero());
    adj1.assign(field.values.size(), Vec3::Zero());
    adj2.assign(field.values.size(), Vec3::Zero());
    adjs.assign(field.values.size(), Vec3::Zero());
  }

  double e_tan = 0.0, e_nor = 0.0;
  for (int k = 0; k < ns; ++k) {
    const double s = field.s(k);
    const Vec3* layer = field.values.data() + static_cast<std::size_t>(k) * n;
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nv; ++j) {
        const int node = g.index(i, j);
        const std::size_t p = static_cast<std::size_t>(k) * n + node;
        const SurfaceFrame& f = g.frame(node);
        const Vec3& u = field.values[p];
        const LayerDerivatives d = tangential_at(g, layer, i, j, f);
        const Vec3 ds = ss.apply<Vec3>(k, [&](int kk) { return field.values[static_cast<std::size_t>(kk) * n + node]; });

        const double an = a(node);
        const double h1 = metric_tangent_coeff(f.kappa1, eps, s);
        const double h2 = metric_tangent_coeff(f.kappa2, eps, s);
        const double sg = metric_volume_factor(f.kappa1, f.kappa2, eps, s);
        const Mat3 K = pert_->K(node, u);

        const Vec3 r1 = an * h1 * d.d1 + K * f.tau1;
        const Vec3 r2 = an * h2 * d.d2 + K * f.tau2;
        const Vec3 r3 = an * inv_eps * ds + K * f.normal;
        const double w = f.area_weight * sw[static_cast<std::size_t>(k)] * sg;
        e_tan += 0.5 * w * (r1.squaredNorm() + r2.squaredNorm());
        e_nor += 0.5 * w * r3.squaredNorm();

        if (gradient) {
          adj1[p] = (w * an * h1 / f.chart_metric[0]) * r1;
          adj2[p] = (w * an * h2 / f.chart_metric[1]) * r2;
          adjs[p] = (w * an * inv_eps) * r3;
          const Mat3 lam = w * (r1 * f.tau1.transpose() + r2 * f.tau2.transpose() + r3 * f.normal.transpose());
          (*gradient)[p] += pert_->sigma_gradient(node, u, lam);
        }
      }
    }
  }
  check_finite(e_tan + e_nor, "thin-film");

  if (gradient) {
    for (int k = 0; k < ns; ++k) {
      const std::size_t off = static_cast<std::size_t>(k) * n;
      scatter_tangential(g, adj1, adj2, gradient->data() + off, off);
      const auto taps = ss.taps(k);
      for (int t = 0; t < ss.count(k); ++t) {
        const std::size_t dst = static_cast<std::size_t>(taps[t].index) * n;
        for (int node = 0; node < n; ++node) (*gradient)[dst + node] += taps[t].weight * adjs[off + node];
      }
    }
  }
  return EnergyBreakdown::make(e_tan, e_nor);
}

EnergyBreakdown EnergyModel::limit(const DirectorField& field, std::vector<Vec3>* gradient) const {
  check_layout(field, Layout::Surface);
  const SurfaceGrid& g = *grid_;
  const int nu = g.n_u(), nv = g.n_v();
  std::vector<Vec3> adj1, adj2;
  if (gradient) {
    gradient->assign(field.values.size(), Vec3::Zero());
    adj1.assign(field.values.size(), Vec3::Zero());
    adj2.assign(field.values.size(), Vec3::Zero());
  }
  double e_tan = 0.0, e_ani = 0.0;
  const Vec3* layer = field.values.data();
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int node = g.index(i, j);
      const SurfaceFrame& f = g.frame(node);
      const Vec3& u = field.values[static_cast<std::size_t>(node)];
      const LayerDerivatives d = tangential_at(g, layer, i, j, f);
      const Mat3 K = pert_->K(node, u);
      const Vec3 nm = target_->normal_extension(u);
      const Vec3 kn = K * f.normal;

      const Vec3 r1 = d.d1 + K * f.tau1;
      const Vec3 r2 = d.d2 + K * f.tau2;
      const double q = kn.dot(nm);
      const double w = f.area_weight;
      e_tan += w * (r1.squaredNorm() + r2.squaredNorm());
      e_ani += w * q * q;

      if (gradient) {
        adj1[static_cast<std::size_t>(node)] = (2.0 * w / f.chart_metric[0]) * r1;
        adj2[static_cast<std::size_t>(node)] = (2.0 * w / f.chart_metric[1]) * r2;
        const Mat3 lam = 2.0 * w * (r1 * f.tau1.transpose() + r2 * f.tau2.transpose() + q * nm * f.normal.transpose());
        (*gradient)[static_cast<std::size_t>(node)] += pert_->sigma_gradient(node, u, lam) +
                                                      (2.0 * w * q) * (target_->normal_extension_jacobian(u).transpose() * kn);
      }
    }
  }
  check_finite(e_tan + e_ani, "limit");
  if (gradient) scatter_tangential(g, adj1, adj2, gradient->data(), 0);
  return EnergyBreakdown::make(e_tan, e_ani);
}

EnergyBreakdown EnergyModel::limit_general(const DirectorField& field, std::vector<Vec3>* gradient) const {
  check_layout(field, Layout::Surface);
  const SurfaceGrid& g = *grid_;
  const int nu = g.n_u(), nv = g.n_v();
  std::vector<Vec3> adj1, adj2;
  if (gradient) {
    gradient->assign(field.values.size(), Vec3::Zero());
    adj1.assign(field.values.size(), Vec3::Zero());
    adj2.assign(field.values.size(), Vec3::Zero());
  }
  double e_tan = 0.0, e_ani = 0.0;
  const Vec3* layer = field.values.data();
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int node = g.index(i, j);
      const SurfaceFrame& f = g.frame(node);
      const Vec3& u = field.values[static_cast<std::size_t>(node)];
      const LayerDerivatives d = tangential_at(g, layer, i, j, f);
      const Mat3 K = pert_->K(node, u);
      const Vec3 nm = target_->normal_extension(u);
      const Vec3 kn = K * f.normal;
      const double an = a(node);

      const Vec3 r1 = an * d.d1 + K * f.tau1;
      const Vec3 r2 = an * d.d2 + K * f.tau2;
      const double den = nm.squaredNorm() / an;
      const double q = (kn.dot(nm) / an) / den;
      const double w = f.area_weight;
      e_tan += w * (r1.squaredNorm() + r2.squaredNorm());
      e_ani += w * q * q;

      if (gradient) {
        adj1[static_cast<std::size_t>(node)] = (2.0 * w * an / f.chart_metric[0]) * r1;
        adj2[static_cast<std::size_t>(node)] = (2.0 * w * an / f.chart_metric[1]) * r2;
        const Vec3 dq_dkn = (nm / an) / den;
        const Vec3 dq_dnm = (kn / an) / den - q * (2.0 / an / den) * nm;
        const Mat3 lam = 2.0 * w * (r1 * f.tau1.transpose() + r2 * f.tau2.transpose() + q * dq_dkn * f.normal.transpose());
        (*gradient)[static_cast<std::size_t>(node)] +=
            pert_->sigma_gradient(node, u, lam) +
            (2.0 * w * q) * (target_->normal_extension_jacobian(u).transpose() * dq_dnm);
      }
    }
  }
  check_finite(e_tan + e_ani, "generalised limit");
  if (gradient) scatter_tangential(g, adj1, adj2, gradient->data(), 0);
  return EnergyBreakdown::make(e_tan, e_ani);
}

EnergyBreakdown EnergyModel::evaluate(EnergyForm form, const DirectorField& field, double eps,
                                      std::vector<Vec3>* gradient) const {
  switch (form) {
    case EnergyForm::Thin: return thin(field, eps, gradient);
    case EnergyForm::Limit: return limit(field, gradient);
    case EnergyForm::LimitGeneral: return limit_general(field, gradient);
  }
  return {};
}

std::vector<double> EnergyModel::metric_weights(const DirectorField& field) const {
  std::vector<double> w(field.values.size());
  const auto sw = field.layout == Layout::Thin ? s_weights(field.n_s) : std::vector<double>{1.0};
  for (int k = 0; k < field.layers(); ++k) {
    for (int node = 0; node < field.n_nodes; ++node) {
      w[static_cast<std::size_t>(k * field.n_nodes + node)] = grid_->frame(node).area_weight * sw[static_cast<std::size_t>(k)];
    }
  }
  return w;
}

EnergyBreakdown eval_thin_energy(const DirectorField& field, const SurfaceGrid& grid, const TargetManifold& target,
                                 const Perturbation& perturbation, double eps, const EllipticTensor* tensor) {
  return EnergyModel(grid, target, perturbation, tensor).thin(field, eps);
}

EnergyBreakdown eval_limit_energy(const DirectorField& field, const SurfaceGrid& grid, const TargetManifold& target,
                                  const Perturbation& perturbation) {
  return EnergyModel(grid, target, perturbation).limit(field);
}

EnergyBreakdown eval_limit_energy_general(const DirectorField& field, const SurfaceGrid& grid,
                                          const TargetManifold& target, const Perturbation& perturbation,
                                          const EllipticTensor& tensor) {
  return EnergyModel(grid, target, perturbation, &tensor).limit_general(field);
}

std::vector<Vec3> energy_gradient(EnergyForm form, const DirectorField& field, const SurfaceGrid& grid,
                                  const TargetManifold& target, const Perturbation& perturbation, double eps,
                                  const EllipticTensor* tensor) {
  std::vector<Vec3> grad;
  EnergyModel(grid, target, perturbation, tensor).evaluate(form, field, eps, &grad);
  return grad;
}

std::vector<Vec3> optimal_corrector(const DirectorField& field, const SurfaceGrid& grid, const TargetManifold& target,
                                    const Perturbation& perturbation, const EllipticTensor* tensor) {
  if (field.layout != Layout::Surface || field.n_nodes != grid.size()) {
    throw InvalidInput("optimal_corrector expects a Surface field on the grid");
  }
  std::vector<Vec3> d0(field.values.size());
  for (int node = 0; node < grid.size(); ++node) {
    const Vec3& u = field.at(node);
    const Vec3 nm = target.normal(u);
    const Vec3 kn = perturbation.K(node, u) * grid.frame(node).normal;
    const double an = tensor ? (*tensor)(node) : 1.0;
    d0[static_cast<std::size_t>(node)] = ((nm * nm.transpose() - Mat3::Identity()) * kn) / an;
  }
  return d0;
}

DirectorField recovery_field(const DirectorField& u0, std::span<const Vec3> d0, double eps, int n_s,
                             const TargetManifold& target) {
  if (u0.layout != Layout::Surface || d0.size() != u0.values.size()) {
    throw InvalidInput("recovery_field expects a Surface field and a matching corrector");
  }
  DirectorField out = DirectorField::thin(u0.n_nodes, n_s, Vec3::Zero());
  for (int k = 0; k < n_s; ++k) {
    const double shift = eps * out.s(k);
    for (int node = 0; node < u0.n_nodes; ++node) {
      const Vec3& base = u0.at(node);
      const Vec3 y = base + shift * d0[static_cast<std::size_t>(node)];
      if (y == base) {
        out.at(node, k) = base;
        continue;
      }
      if (!target.admissible(y)) {
        std::ostringstream msg;
        msg << "eps = " << eps << " too large: recovery point leaves the target's admissible neighbourhood";
        throw InvalidInput(msg.str());
      }
      out.at(node, k) = target.project(y);
    }
  }
  return out;
}

double h1_distance(const DirectorField& thin, const DirectorField& surface, const SurfaceGrid& grid) {
  if (thin.layout != Layout::Thin || surface.layout != Layout::Surface || thin.n_nodes != grid.size() ||
      surface.n_nodes != grid.size()) {
    throw InvalidInput("h1_distance expects a Thin and a Surface field on the same grid");
  }
  const int n = grid.size(), ns = thin.n_s;
  const auto sw = s_weights(ns);
  const Stencil1D ss = s_stencil(ns);
  std::vector<Vec3> diff(thin.values.size());
  for (int k = 0; k < ns; ++k) {
    for (int node = 0; node < n; ++node) diff[static_cast<std::size_t>(k * n + node)] = thin.at(node, k) - surface.at(node);
  }
  double acc = 0.0;
  for (int k = 0; k < ns; ++k) {
    const Vec3* layer = diff.data() + static_cast<std::size_t>(k) * n;
    for (int i = 0; i < grid.n_u(); ++i) {
      for (int j = 0; j < grid.n_v(); ++j) {
        const int node = grid.index(i, j);
        const SurfaceFrame& f = grid.frame(node);
        const LayerDerivatives d = tangential_at(grid, layer, i, j, f);
        const Vec3 ds = ss.apply<Vec3>(k, [&](int kk) { return diff[static_cast<std::size_t>(kk) * n + node]; });
        const double density = layer[node].squaredNorm() + d.d1.squaredNorm() + d.d2.squaredNorm() + ds.squaredNorm();
        acc += f.area_weight * sw[static_cast<std::size_t>(k)] * density;
      }
    }
  }
  return std::sqrt(acc);
}

double s_derivative_share(const DirectorField& thin, const SurfaceGrid& grid) {
  if (thin.layout != Layout::Thin || thin.n_nodes != grid.size()) {
    throw InvalidInput("s_derivative_share expects a Thin field on the grid");
  }
  const int n = grid.size(), ns = thin.n_s;
  const auto sw = s_weights(ns);
  const Stencil1D ss = s_stencil(ns);
  double normal = 0.0, tangential = 0.0;
  for (int k = 0; k < ns; ++k) {
    const Vec3* layer = thin.values.data() + static_cast<std::size_t>(k) * n;
    for (int i = 0; i < grid.n_u(); ++i) {
      for (int j = 0; j < grid.n_v(); ++j) {
        const int node = grid.index(i, j);
        const SurfaceFrame& f = grid.frame(node);
        const LayerDerivatives d = tangential_at(grid, layer, i, j, f);
        const Vec3 ds = ss.apply<Vec3>(k, [&](int kk) { return thin.values[static_cast<std::size_t>(kk) * n + node]; });
        const double w = f.area_weight * sw[static_cast<std::size_t>(k)];
        normal += w * ds.squaredNorm();
        tangential += w * (d.d1.squaredNorm() + d.d2.squaredNorm());
      }
    }
  }
  const double total = normal + tangential;
  return total > 0.0 ? normal / total : 0.0;
}

}  // namespace chiralfilm
