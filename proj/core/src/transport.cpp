#include "memdd/transport.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace memdd {

std::string to_string(Species s) {
  switch (s) {
  case Species::n: return "n";
  case Species::p: return "p";
  case Species::d: return "d";
  }
  return "?";
}

FluxForm flux_form(Species s) { return {s, s == Species::n ? -1 : +1}; }

double chemical_potential(double v, double alpha) {
  if (!(alpha > 1.0)) throw ParameterError("chemical potential requires alpha > 1");
  if (!(v >= 0.0)) throw DomainError("chemical potential requires a nonnegative density");
  return alpha / (alpha - 1.0) * std::pow(v, alpha - 1.0);
}

double scheme_potential(double v, double alpha, const CutoffFamily* cutoff, double floor) {
  const double c = alpha / (alpha - 1.0);
  if (cutoff) return c * cutoff->s_gamma(alpha - 1.0, v);
  return c * std::pow(std::max(v, floor), alpha - 1.0);
}

double scheme_potential_derivative(double v, double alpha, const CutoffFamily* cutoff, double floor) {
  if (cutoff) return alpha * std::pow(cutoff->truncate(v), alpha - 2.0);
  const double u = std::max(v, floor);
  if (u == 0.0) return alpha == 2.0 ? 2.0 : 0.0;
  return alpha * std::pow(u, alpha - 2.0);
}

double scheme_mobility(double v, const CutoffFamily* cutoff) { return cutoff ? cutoff->truncate(v) : v; }

namespace {
double scheme_mobility_derivative(double v, const CutoffFamily* cutoff) {
  return cutoff ? cutoff->truncate_derivative(v) : 1.0;
}
} // namespace

FluxEvaluation evaluate_edge_flux(const FluxForm& form, double v_left, double v_right, double pot_left,
                                  double pot_right, double dist, double alpha, const CutoffFamily* cutoff,
                                  const FluxOptions& options, bool drift) {
  if (!(dist > 0.0)) throw ParameterError("edge distance must be positive");
  const double floor = options.floor_for(cutoff ? std::optional<double>(cutoff->k()) : std::nullopt);
  const double s = drift ? static_cast<double>(form.drift_sign) : 0.0;
  const double w_left = scheme_potential(v_left, alpha, cutoff, floor) + s * pot_left;
  const double w_right = scheme_potential(v_right, alpha, cutoff, floor) + s * pot_right;
  const double dw = (w_left - w_right) / dist;

  double m = 0.0, dm_left = 0.0, dm_right = 0.0;
  if (options.mobility == MobilityAverage::arithmetic) {
    m = 0.5 * (scheme_mobility(v_left, cutoff) + scheme_mobility(v_right, cutoff));
    dm_left = 0.5 * scheme_mobility_derivative(v_left, cutoff);
    dm_right = 0.5 * scheme_mobility_derivative(v_right, cutoff);
  } else if (w_left >= w_right) {
    m = scheme_mobility(v_left, cutoff);
    dm_left = scheme_mobility_derivative(v_left, cutoff);
  } else {
    m = scheme_mobility(v_right, cutoff);
    dm_right = scheme_mobility_derivative(v_right, cutoff);
  }

  FluxEvaluation e;
  e.mobility = m;
  e.value = m * dw;
  e.d_left = dm_left * dw + m * scheme_potential_derivative(v_left, alpha, cutoff, floor) / dist;
  e.d_right = dm_right * dw - m * scheme_potential_derivative(v_right, alpha, cutoff, floor) / dist;
  e.d_pot_left = m * s / dist;
  e.d_pot_right = -m * s / dist;
  return e;
}

double edge_flux(const FluxForm& form, double v_left, double v_right, double pot_left, double pot_right, double dist,
                 double alpha, const std::optional<CutoffFamily>& cutoff, const FluxOptions& options) {
  return evaluate_edge_flux(form, v_left, v_right, pot_left, pot_right, dist, alpha, cutoff ? &*cutoff : nullptr,
                            options)
      .value;
}

void TimeStepper::validate() const {
  if (!(dt > 0.0)) throw ParameterError("dt must be positive");
  if (!(newton_tol > 0.0)) throw ParameterError("newton_tol must be positive");
  if (newton_max_iter < 1) throw ParameterError("newton_max_iter must be at least 1");
  if (max_damping_halvings < 0) throw ParameterError("max_damping_halvings must be nonnegative");
  if (!(dt_floor > 0.0)) throw ParameterError("dt_floor must be positive");
  if (flux.floor_epsilon && !(*flux.floor_epsilon >= 0.0)) throw ParameterError("floor_epsilon must be nonnegative");
}

// ---------------------------------------------------------------------------

DriftDiffusionSystem::DriftDiffusionSystem(const Mesh& mesh, BoundarySpec bc, ModelParams params,
                                           PoissonOptions poisson)
    : mesh_(&mesh), bc_(std::move(bc)), params_(std::move(params)),
      poisson_(mesh, bc_, params_.lambda, poisson) {
  if (params_.doping.size() == 0) params_.doping = Field::Zero(static_cast<Eigen::Index>(mesh.num_cells()));
  params_.validate_for_solver(mesh.num_cells());
  if (params_.cutoff_k) cutoff_.emplace(*params_.cutoff_k);

  const auto nc = static_cast<Eigen::Index>(mesh.num_cells());
  for (const auto& cf : poisson_.contact_faces()) {
    const Contact* c = bc_.contact_for_segment(mesh, cf.segment);
    contact_n_.push_back(c->n.at(cf.local));
    contact_p_.push_back(c->p.at(cf.local));
  }
  if (bc_.has_contacts()) {
    const Field zero = Field::Zero(nc);
    n_lift_ = poisson_.solve_with_contact_values(zero, contact_n_);
    p_lift_ = poisson_.solve_with_contact_values(zero, contact_p_);
    v_lift_ = poisson_.solve(zero, 1.0);
  } else {
    n_lift_ = p_lift_ = v_lift_ = Field::Zero(nc);
  }
}

double DriftDiffusionSystem::alpha(Species s) const {
  switch (s) {
  case Species::n: return params_.alpha_n;
  case Species::p: return params_.alpha_p;
  case Species::d: return params_.alpha_d;
  }
  return 0.0;
}

const Field& DriftDiffusionSystem::density(const State& st, Species s) const {
  return s == Species::n ? st.n : (s == Species::p ? st.p : st.d);
}

Field& DriftDiffusionSystem::density(State& st, Species s) const {
  return s == Species::n ? st.n : (s == Species::p ? st.p : st.d);
}

Field DriftDiffusionSystem::potential(const State& st) const {
  return poisson_.solve(charge_density(params_, st.n, st.p, st.d), bc_.v_multiplier);
}

void DriftDiffusionSystem::update_potential(State& st) const { st.v = potential(st); }

namespace {
std::size_t contact_slot(const PoissonSolver& poisson, const ContactFace& cf) {
  return static_cast<std::size_t>(&cf - poisson.contact_faces().data());
}
} // namespace

double DriftDiffusionSystem::contact_density(Species s, const ContactFace& cf) const {
  const auto i = contact_slot(poisson_, cf);
  if (s == Species::n) return contact_n_.at(i);
  if (s == Species::p) return contact_p_.at(i);
  throw DomainError("vacancies carry no Dirichlet data");
}

double DriftDiffusionSystem::contact_potential(const ContactFace& cf) const {
  return poisson_.potential_contact_values(bc_.v_multiplier).at(contact_slot(poisson_, cf));
}

void DriftDiffusionSystem::accumulate(const State& old_state, const State& cand, double dt, const FluxOptions& flux,
                                      Field& res, std::vector<Eigen::Triplet<double>>* trip) const {
  const auto nc = static_cast<Eigen::Index>(mesh_->num_cells());
  const auto check = [nc](const Field& f, const char* what) {
    if (f.size() != nc) throw Error(std::string("internal: field ") + what + " has wrong length");
  };
  check(old_state.n, "n_old"), check(old_state.p, "p_old"), check(old_state.d, "d_old");
  check(cand.n, "n"), check(cand.p, "p"), check(cand.d, "d"), check(cand.v, "v");

  res = Field::Zero(3 * nc);
  const double inv_dt = std::isfinite(dt) ? 1.0 / dt : 0.0;
  const auto vidx = [nc](std::size_t c) { return static_cast<int>(3 * nc + static_cast<Eigen::Index>(c)); };
  const std::vector<double> contact_v = poisson_.potential_contact_values(bc_.v_multiplier);

  for (int si = 0; si < 3; ++si) {
    const Species s = all_species[si];
    const FluxForm form = flux_form(s);
    const double a = alpha(s);
    const Field& v = density(cand, s);
    const Field& v_old = density(old_state, s);
    const Eigen::Index off = si * nc;
    const auto row = [off](std::size_t c) { return static_cast<int>(off + static_cast<Eigen::Index>(c)); };

    for (Eigen::Index c = 0; c < nc; ++c) {
      const double vol = mesh_->cells[static_cast<std::size_t>(c)].volume;
      res[off + c] += vol * (v[c] - v_old[c]) * inv_dt;
      if (trip) trip->emplace_back(static_cast<int>(off + c), static_cast<int>(off + c), vol * inv_dt);
    }
    for (const auto& f : mesh_->interior_faces) {
      const auto e = evaluate_edge_flux(form, v[f.left], v[f.right], cand.v[f.left], cand.v[f.right], f.dist, a,
                                        cutoff(), flux, params_.drift);
      res[row(f.left)] += f.area * e.value;
      res[row(f.right)] -= f.area * e.value;
      if (trip) {
        trip->emplace_back(row(f.left), row(f.left), f.area * e.d_left);
        trip->emplace_back(row(f.left), row(f.right), f.area * e.d_right);
        trip->emplace_back(row(f.right), row(f.left), -f.area * e.d_left);
        trip->emplace_back(row(f.right), row(f.right), -f.area * e.d_right);
        if (params_.drift) {
          trip->emplace_back(row(f.left), vidx(f.left), f.area * e.d_pot_left);
          trip->emplace_back(row(f.left), vidx(f.right), f.area * e.d_pot_right);
          trip->emplace_back(row(f.right), vidx(f.left), -f.area * e.d_pot_left);
          trip->emplace_back(row(f.right), vidx(f.right), -f.area * e.d_pot_right);
        }
      }
    }
    if (s == Species::d) continue; // no-flux on the whole boundary
    const auto& contacts = poisson_.contact_faces();
    for (std::size_t i = 0; i < contacts.size(); ++i) {
      const auto& cf = contacts[i];
      const auto& bf = mesh_->boundary_faces[cf.face];
      const double v_dir = s == Species::n ? contact_n_[i] : contact_p_[i];
      const auto e = evaluate_edge_flux(form, v[cf.cell], v_dir, cand.v[cf.cell], contact_v[i], bf.dist, a, cutoff(),
                                        flux, params_.drift);
      res[row(cf.cell)] += bf.area * e.value;
      if (trip) {
        trip->emplace_back(row(cf.cell), row(cf.cell), bf.area * e.d_left);
        if (params_.drift) trip->emplace_back(row(cf.cell), vidx(cf.cell), bf.area * e.d_pot_left);
      }
    }
  }
}

Field DriftDiffusionSystem::residual(const State& old_state, const State& candidate, double dt,
                                     const FluxOptions& flux) const {
  Field res;
  accumulate(old_state, candidate, dt, flux, res, nullptr);
  return res;
}

Field DriftDiffusionSystem::residual_and_jacobian(const State& old_state, const State& candidate, double dt,
                                                  const FluxOptions& flux,
                                                  Eigen::SparseMatrix<double>& jacobian) const {
  Field res;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(48 * mesh_->num_cells());
  accumulate(old_state, candidate, dt, flux, res, &trip);

  // Poisson rows: K V + M (n - p - d + A - mean) - g = 0.
  const auto nc = static_cast<Eigen::Index>(mesh_->num_cells());
  const auto& K = poisson_.stiffness();
  for (Eigen::Index col = 0; col < K.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, col); it; ++it)
      trip.emplace_back(static_cast<int>(3 * nc + it.row()), static_cast<int>(3 * nc + it.col()), it.value());
  for (Eigen::Index c = 0; c < nc; ++c) {
    const double vol = mesh_->cells[static_cast<std::size_t>(c)].volume;
    const int r = static_cast<int>(3 * nc + c);
    trip.emplace_back(r, static_cast<int>(c), vol);
    trip.emplace_back(r, static_cast<int>(nc + c), -vol);
    trip.emplace_back(r, static_cast<int>(2 * nc + c), -vol);
    if (poisson_.gauge_mode()) {
      trip.emplace_back(r, static_cast<int>(4 * nc), vol);
      trip.emplace_back(static_cast<int>(4 * nc), r, vol);
    }
  }
  const Eigen::Index size = poisson_.gauge_mode() ? 4 * nc + 1 : 4 * nc;
  jacobian.resize(size, size);
  jacobian.setFromTriplets(trip.begin(), trip.end());
  jacobian.makeCompressed();
  return res;
}

Field assemble_residual(const DriftDiffusionSystem& system, const State& old_state, const State& candidate, double dt,
                        const FluxOptions& flux) {
  return system.residual(old_state, candidate, dt, flux);
}

double scaled_residual_norm(const DriftDiffusionSystem& system, const Field& residual, double dt) {
  const auto nc = static_cast<Eigen::Index>(system.mesh().num_cells());
  const double scale = std::isfinite(dt) ? dt : 1.0;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    const double vol = system.mesh().cells[static_cast<std::size_t>(i % nc)].volume;
    const double r = std::abs(residual[i]) * scale / vol;
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, r);
  }
  return worst;
}

StepResult advance(const DriftDiffusionSystem& system, const TimeStepper& stepper, const State& state) {
  stepper.validate();
  const double dt = stepper.dt;
  const auto nc = static_cast<Eigen::Index>(system.mesh().num_cells());

  State old_state = state;
  if (old_state.v.size() != nc) system.update_potential(old_state);
  State cur = old_state;
  cur.time = state.time + dt;
  system.update_potential(cur);

  NewtonReport report;
  Field res = system.residual(old_state, cur, dt, stepper.flux);
  double norm = scaled_residual_norm(system, res, dt);
  report.initial_residual = norm;

  Eigen::SparseMatrix<double> jac;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool pattern_ready = false;

  while (true) {
    report.final_residual = norm;
    if (norm <= stepper.newton_tol) {
      report.converged = true;
      return {cur, report};
    }
    if (report.iterations >= stepper.newton_max_iter) {
      std::ostringstream msg;
      msg << "Newton did not converge in " << report.iterations << " iterations (residual " << norm << ")";
      throw StepFailure(msg.str(), report);
    }
    system.residual_and_jacobian(old_state, cur, dt, stepper.flux, jac);
    if (!pattern_ready) {
      lu.analyzePattern(jac);
      pattern_ready = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success)
      throw StepFailure("Newton Jacobian is singular: " + lu.lastErrorMessage(), report);
    Field rhs = Field::Zero(jac.rows());
    rhs.head(3 * nc) = -res;
    const Field delta = lu.solve(rhs);
    ++report.iterations;

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= stepper.max_damping_halvings; ++h) {
      State trial = cur;
      trial.n += t * delta.segment(0, nc);
      trial.p += t * delta.segment(nc, nc);
      trial.d += t * delta.segment(2 * nc, nc);
      system.update_potential(trial);
      Field trial_res = system.residual(old_state, trial, dt, stepper.flux);
      const double trial_norm = scaled_residual_norm(system, trial_res, dt);
      if (trial_norm < norm) {
        cur = std::move(trial);
        res = std::move(trial_res);
        norm = trial_norm;
        accepted = true;
        break;
      }
      t *= 0.5;
      ++report.damping_events;
    }
    if (!accepted) {
      report.final_residual = norm;
      std::ostringstream msg;
      msg << "Newton damping exhausted after " << stepper.max_damping_halvings << " halvings (residual " << norm
          << ")";
      throw StepFailure(msg.str(), report);
    }
  }
}

AdaptiveStepResult advance_adaptive(const DriftDiffusionSystem& system, const TimeStepper& stepper,
                                    const State& state) {
  stepper.validate();
  AdaptiveStepResult out;
  out.state = state;
  const double t0 = state.time;
  const double t_end = t0 + stepper.dt;
  double h = stepper.dt;
  double covered = 0.0;
  while (covered < stepper.dt) {
    const double remaining = stepper.dt - covered;
    const bool last = h >= remaining;
    TimeStepper sub = stepper;
    sub.dt = last ? remaining : h;
    try {
      StepResult r = advance(system, sub, out.state);
      out.state = std::move(r.state);
      out.total_newton_iterations += r.report.iterations;
      out.reports.push_back(r.report);
      ++out.substeps;
      covered = last ? stepper.dt : covered + sub.dt;
      out.state.time = last ? t_end : t0 + covered;
      h = std::min(2.0 * sub.dt, stepper.dt);
    } catch (const StepFailure& f) {
      ++out.failures;
      h = 0.5 * sub.dt;
      if (h < stepper.dt_floor) {
        std::ostringstream msg;
        msg << "time step fell below dt_floor " << stepper.dt_floor << " at t=" << out.state.time << ": "
            << f.what();
        throw StepFailure(msg.str(), f.report());
      }
    }
  }
  return out;
}

double terminal_current(const DriftDiffusionSystem& system, const State& state, const std::string& segment,
                        const FluxOptions& flux) {
  const auto& mesh = system.mesh();
  const std::size_t seg = mesh.segment_index(segment);
  if (!system.bc().contact_for_segment(mesh, seg))
    throw ConfigError("segment '" + segment + "' is not a Dirichlet contact");
  const std::vector<double> contact_v = system.poisson().potential_contact_values(system.v_multiplier());
  const auto& contacts = system.poisson().contact_faces();
  double current = 0.0;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const auto& cf = contacts[i];
    if (cf.segment != seg) continue;
    const auto& bf = mesh.boundary_faces[cf.face];
    double outflow[2];
    for (int k = 0; k < 2; ++k) {
      const Species s = k == 0 ? Species::n : Species::p;
      const Field& v = system.density(state, s);
      outflow[k] = bf.area * evaluate_edge_flux(flux_form(s), v[cf.cell], system.contact_density(s, cf),
                                                state.v[cf.cell], contact_v[i], bf.dist, system.alpha(s),
                                                system.cutoff(), flux, system.params().drift)
                                 .value;
    }
    // Holes carry current along their mass flow, electrons against it.
    current += outflow[1] - outflow[0];
  }
  return current;
}

} // namespace memdd
