#pragma once

#include <optional>
#include <string>
#include <vector>

#include "memdd/cutoff.hpp"
#include "memdd/errors.hpp"
#include "memdd/mesh.hpp"
#include "memdd/model.hpp"
#include "memdd/poisson.hpp"

namespace memdd {

enum class Species { n, p, d };

inline constexpr Species all_species[] = {Species::n, Species::p, Species::d};

std::string to_string(Species s);

/// Entropy-variable form of a species flux. Every species obeys
/// d_t v = div( v grad w ) with w = mu(v) + sign * V, sign = -1 for electrons
/// and +1 for holes and vacancies.
struct FluxForm {
  Species species = Species::n;
  int drift_sign = -1;
};

FluxForm flux_form(Species s);

enum class MobilityAverage { arithmetic, upwind };

struct FluxOptions {
  MobilityAverage mobility = MobilityAverage::arithmetic;
  /// Density floor inside mu for the direct scheme. Empty selects 0 with a
  /// cutoff and 1e-14 without.
  std::optional<double> floor_epsilon;

  double floor_for(const std::optional<double>& cutoff_k) const {
    return floor_epsilon ? *floor_epsilon : (cutoff_k ? 0.0 : 1e-14);
  }
};

/// h'(v) = alpha/(alpha-1) v^(alpha-1). Throws DomainError for v < 0.
double chemical_potential(double v, double alpha);

/// mu used by the scheme: alpha/(alpha-1) S_k^(alpha-1)(v) with a cutoff,
/// alpha/(alpha-1) max(v, floor)^(alpha-1) otherwise.
double scheme_potential(double v, double alpha, const CutoffFamily* cutoff, double floor);
double scheme_potential_derivative(double v, double alpha, const CutoffFamily* cutoff, double floor);

/// Nodal mobility: T_k(v) with a cutoff, v otherwise.
double scheme_mobility(double v, const CutoffFamily* cutoff);

struct FluxEvaluation {
  double value = 0.0;
  double mobility = 0.0;
  double d_left = 0.0;  // d/d v_left
  double d_right = 0.0; // d/d v_right
  double d_pot_left = 0.0;
  double d_pot_right = 0.0;
};

/// Mass flow per unit face area from left to right:
///   m_edge * [ (mu_L + s V_L) - (mu_R + s V_R) ] / dist.
/// `drift` = false drops the V terms.
FluxEvaluation evaluate_edge_flux(const FluxForm& form, double v_left, double v_right, double pot_left,
                                  double pot_right, double dist, double alpha, const CutoffFamily* cutoff,
                                  const FluxOptions& options = {}, bool drift = true);

double edge_flux(const FluxForm& form, double v_left, double v_right, double pot_left, double pot_right,
                 double dist, double alpha, const std::optional<CutoffFamily>& cutoff = std::nullopt,
                 const FluxOptions& options = {});

struct TimeStepper {
  double dt = 1e-3;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  int max_damping_halvings = 30;
  double dt_floor = 1e-10;
  FluxOptions flux;

  void validate() const;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  int damping_events = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
};

class StepFailure : public NumericalError {
public:
  StepFailure(const std::string& what, NewtonReport report) : NumericalError(what), report_(report) {}
  const NewtonReport& report() const { return report_; }

private:
  NewtonReport report_;
};

/// Model, mesh, boundary data and the cached Poisson factorisation for one
/// scenario. Holds a reference to the mesh; the mesh must outlive it.
class DriftDiffusionSystem {
public:
  DriftDiffusionSystem(const Mesh& mesh, BoundarySpec bc, ModelParams params, PoissonOptions poisson = {});

  const Mesh& mesh() const { return *mesh_; }
  const BoundarySpec& bc() const { return bc_; }
  const ModelParams& params() const { return params_; }
  const PoissonSolver& poisson() const { return poisson_; }
  const CutoffFamily* cutoff() const { return cutoff_ ? &*cutoff_ : nullptr; }

  double alpha(Species s) const;
  const Field& density(const State& st, Species s) const;
  Field& density(State& st, Species s) const;

  void set_v_multiplier(double m) { bc_.v_multiplier = m; }
  double v_multiplier() const { return bc_.v_multiplier; }

  /// Potential consistent with the densities of `st` at the current multiplier.
  Field potential(const State& st) const;
  void update_potential(State& st) const;

  /// Harmonic extensions of n_D, p_D and (unscaled) V_D into the domain;
  /// zero without contacts.
  const Field& n_lift() const { return n_lift_; }
  const Field& p_lift() const { return p_lift_; }
  Field v_lift() const { return bc_.v_multiplier * v_lift_; }

  /// Dirichlet value of species s on contact face `cf` (n and p only).
  double contact_density(Species s, const ContactFace& cf) const;
  double contact_potential(const ContactFace& cf) const;

  /// Backward-Euler residual of all species, blocks ordered (n, p, d):
  ///   vol_i (v_i - v_old_i) / dt + sum_faces area * outward flow.
  /// `dt` may be +inf (steady-state divergence form).
  Field residual(const State& old_state, const State& candidate, double dt, const FluxOptions& flux = {}) const;

  /// Residual plus the Jacobian of the V-augmented system (4N unknowns, 4N+1
  /// in gauge mode): density rows followed by the linear Poisson rows.
  Field residual_and_jacobian(const State& old_state, const State& candidate, double dt, const FluxOptions& flux,
                              Eigen::SparseMatrix<double>& jacobian) const;

private:
  void accumulate(const State& old_state, const State& candidate, double dt, const FluxOptions& flux, Field& res,
                  std::vector<Eigen::Triplet<double>>* trip) const;

  const Mesh* mesh_;
  BoundarySpec bc_;
  ModelParams params_;
  PoissonSolver poisson_;
  std::optional<CutoffFamily> cutoff_;
  Field n_lift_;
  Field p_lift_;
  Field v_lift_;
  std::vector<double> contact_n_;
  std::vector<double> contact_p_;
};

/// Free-function form of DriftDiffusionSystem::residual.
Field assemble_residual(const DriftDiffusionSystem& system, const State& old_state, const State& candidate, double dt,
                        const FluxOptions& flux = {});

/// Scaled residual norm max_i |F_i| * dt / vol_i used by the Newton test.
double scaled_residual_norm(const DriftDiffusionSystem& system, const Field& residual, double dt);

struct StepResult {
  State state;
  NewtonReport report;
};

/// One implicit-Euler step of size stepper.dt solved by damped Newton on the
/// fully coupled system. Throws StepFailure when Newton does not converge.
StepResult advance(const DriftDiffusionSystem& system, const TimeStepper& stepper, const State& state);

struct AdaptiveStepResult {
  State state;
  std::vector<NewtonReport> reports; // accepted substeps
  int substeps = 0;
  int failures = 0;
  int total_newton_iterations = 0;
};

/// Covers the interval stepper.dt, halving the substep after every Newton
/// failure and doubling it again (up to stepper.dt) after every success.
/// Throws StepFailure once the substep would drop below dt_floor.
AdaptiveStepResult advance_adaptive(const DriftDiffusionSystem& system, const TimeStepper& stepper,
                                    const State& state);

/// Conduction current int (J_n + J_p) . nu over a contact segment, assembled
/// from the residual's boundary fluxes.
double terminal_current(const DriftDiffusionSystem& system, const State& state, const std::string& segment,
                        const FluxOptions& flux = {});

} // namespace memdd
