#include "memdd/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace memdd {

double internal_energy_density(double v, double alpha) {
  if (!(alpha > 1.0)) throw ParameterError("internal energy requires alpha > 1");
  if (!(v >= 0.0)) throw DomainError("internal energy requires a nonnegative density");
  return std::pow(v, alpha) / (alpha - 1.0);
}

double relative_density(double v, double vbar, double alpha) {
  if (!(alpha > 1.0)) throw ParameterError("relative entropy requires alpha > 1");
  if (!(v >= 0.0)) throw DomainError("relative entropy requires v >= 0");
  if (!(vbar > 0.0)) throw DomainError("relative entropy requires a strictly positive reference density");
  // vbar^alpha * [(1+t)^alpha - 1 - alpha t] / (alpha - 1),  t = (v - vbar)/vbar
  const double t = (v - vbar) / vbar;
  double core = 0.0;
  if (std::abs(t) < 0.5) {
    double c = 0.5 * alpha * (alpha - 1.0); // binomial(alpha, j) at j = 2
    double tj = t * t;
    for (int j = 2; j < 200; ++j) {
      const double term = c * tj;
      core += term;
      if (term == 0.0 || std::abs(term) < 1e-18 * std::abs(core)) break;
      c *= (alpha - j) / (j + 1.0);
      tj *= t;
    }
  } else {
    core = std::pow(1.0 + t, alpha) - 1.0 - alpha * t;
  }
  return std::pow(vbar, alpha) * core / (alpha - 1.0);
}

namespace {

// Internal energy per unit volume relative to the lifted contact density r.
double internal_term(double v, double r, double alpha, const CutoffFamily* cutoff) {
  if (cutoff) {
    const double shift = r > 0.0 ? cutoff->r_gamma(alpha, r) + alpha * cutoff->s_gamma(alpha - 1.0, r) * (v - r) : 0.0;
    return (cutoff->r_gamma(alpha, v) - shift) / (alpha - 1.0);
  }
  const double u = std::max(v, 0.0);
  return r > 0.0 ? relative_density(u, r, alpha) : internal_energy_density(u, alpha);
}

} // namespace

EnergyBreakdown free_energy(const DriftDiffusionSystem& system, const State& state) {
  const auto& mesh = system.mesh();
  const auto nc = static_cast<Eigen::Index>(mesh.num_cells());
  if (state.v.size() != nc) throw DataError("free energy needs the potential of the state");
  const Field v_lift = system.v_lift();
  EnergyBreakdown e;
  for (Eigen::Index c = 0; c < nc; ++c) {
    const double vol = mesh.cells[static_cast<std::size_t>(c)].volume;
    e.internal_n += vol * internal_term(state.n[c], system.n_lift()[c], system.alpha(Species::n), system.cutoff());
    e.internal_p += vol * internal_term(state.p[c], system.p_lift()[c], system.alpha(Species::p), system.cutoff());
    e.internal_d += vol * internal_term(state.d[c], 0.0, system.alpha(Species::d), system.cutoff());
    e.cross_term += vol * state.d[c] * v_lift[c];
  }
  e.electric = 0.5 * system.poisson().quadratic_form(state.v - v_lift);
  e.total = e.internal_n + e.internal_p + e.internal_d + e.cross_term + e.electric;
  return e;
}

std::array<double, 3> dissipation_by_species(const DriftDiffusionSystem& system, const State& state,
                                             const FluxOptions& flux) {
  const auto& mesh = system.mesh();
  const bool drift = system.params().drift;
  const auto contact_v = system.poisson().potential_contact_values(system.v_multiplier());
  const auto& contacts = system.poisson().contact_faces();
  std::array<double, 3> out{0.0, 0.0, 0.0};
  for (int si = 0; si < 3; ++si) {
    const Species s = all_species[si];
    const FluxForm form = flux_form(s);
    const double a = system.alpha(s);
    const Field& v = system.density(state, s);
    const double floor = flux.floor_for(system.params().cutoff_k);
    const double sign = drift ? form.drift_sign : 0.0;
    auto w = [&](double dens, double pot) { return scheme_potential(dens, a, system.cutoff(), floor) + sign * pot; };
    double sum = 0.0;
    for (const auto& f : mesh.interior_faces) {
      const auto e = evaluate_edge_flux(form, v[f.left], v[f.right], state.v[f.left], state.v[f.right], f.dist, a,
                                        system.cutoff(), flux, drift);
      const double jump = w(v[f.left], state.v[f.left]) - w(v[f.right], state.v[f.right]);
      sum += f.area * e.mobility * jump * jump / f.dist;
    }
    if (s != Species::d) {
      for (std::size_t i = 0; i < contacts.size(); ++i) {
        const auto& cf = contacts[i];
        const auto& bf = mesh.boundary_faces[cf.face];
        const double vd = system.contact_density(s, cf);
        const auto e = evaluate_edge_flux(form, v[cf.cell], vd, state.v[cf.cell], contact_v[i], bf.dist, a,
                                          system.cutoff(), flux, drift);
        const double jump = w(v[cf.cell], state.v[cf.cell]) - w(vd, contact_v[i]);
        sum += bf.area * e.mobility * jump * jump / bf.dist;
      }
    }
    out[static_cast<std::size_t>(si)] = sum;
  }
  return out;
}

double dissipation(const DriftDiffusionSystem& system, const State& state, const FluxOptions& flux) {
  const auto parts = dissipation_by_species(system, state, flux);
  return parts[0] + parts[1] + parts[2];
}

double relative_free_energy(const DriftDiffusionSystem& system, const State& state, const State& reference,
                            bool include_electric) {
  const auto& mesh = system.mesh();
  const auto nc = static_cast<Eigen::Index>(mesh.num_cells());
  double total = 0.0;
  for (Species s : all_species) {
    const Field& v = system.density(state, s);
    const Field& vbar = system.density(reference, s);
    if (v.size() != nc || vbar.size() != nc) throw DataError("relative free energy: field has wrong length");
    for (Eigen::Index c = 0; c < nc; ++c) {
      if (!(vbar[c] > 0.0)) throw DomainError("reference densities must be strictly positive");
      total += mesh.cells[static_cast<std::size_t>(c)].volume * relative_density(std::max(v[c], 0.0), vbar[c], system.alpha(s));
    }
  }
  if (include_electric) total += 0.5 * system.poisson().quadratic_form(state.v - reference.v);
  return total;
}

namespace {

double grid_inf_ratio(double alpha, double m, double M, std::size_t points, double* arg_v, double* arg_vbar) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points; ++i) {
    const double v = M * static_cast<double>(i) / static_cast<double>(points - 1);
    for (std::size_t j = 0; j < points; ++j) {
      const double vbar = m + (M - m) * static_cast<double>(j) / static_cast<double>(points - 1);
      if (v == vbar) continue;
      const double diff = v - vbar;
      const double ratio = relative_density(v, vbar, alpha) / (diff * diff);
      if (ratio < best) {
        best = ratio;
        if (arg_v) *arg_v = v;
        if (arg_vbar) *arg_vbar = vbar;
      }
    }
  }
  return best;
}

} // namespace

QuadraticBoundReport verify_quadratic_bound(double alpha, double m, double M, std::size_t points) {
  if (!(alpha > 1.0)) throw ParameterError("quadratic bound requires alpha > 1");
  if (!(m > 0.0)) throw ParameterError("quadratic bound requires m > 0");
  if (!(M > m)) throw ParameterError("quadratic bound requires M > m");
  if (points < 2) throw ParameterError("quadratic bound needs at least 2 grid points per axis");
  QuadraticBoundReport r;
  r.inf_ratio = grid_inf_ratio(alpha, m, M, points, &r.argmin_v, &r.argmin_vbar);
  r.refined_inf_ratio = grid_inf_ratio(alpha, m, M, 4 * (points - 1) + 1, nullptr, nullptr);
  r.positive = r.inf_ratio > 0.0 && r.refined_inf_ratio > 0.0;
  r.stable = std::abs(r.refined_inf_ratio - r.inf_ratio) < 1e-2 * r.inf_ratio;
  return r;
}

double lq_norm(const Mesh& mesh, const Field& field, double q) {
  if (!(q >= 1.0)) throw ParameterError("lq_norm requires q >= 1");
  if (static_cast<std::size_t>(field.size()) != mesh.num_cells()) throw DataError("field has wrong length");
  if (std::isinf(q)) return field.size() ? field.cwiseAbs().maxCoeff() : 0.0;
  double sum = 0.0;
  for (Eigen::Index c = 0; c < field.size(); ++c)
    sum += mesh.cells[static_cast<std::size_t>(c)].volume * std::pow(std::abs(field[c]), q);
  return std::pow(sum, 1.0 / q);
}

} // namespace memdd
