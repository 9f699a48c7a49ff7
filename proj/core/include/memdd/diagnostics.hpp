#pragma once

#include <array>
#include <limits>

#include "memdd/model.hpp"
#include "memdd/transport.hpp"

namespace memdd {

/// Parts of the discrete free energy
///   H = sum_cells vol [h_n(n) + h_p(p) + h_d(d) + d V_D] + lambda^2/2 |grad(V - V_D)|^2.
/// h_n and h_p are Bregman distances to the lifted contact densities; with a
/// cutoff the internal energies use R_k^alpha / (alpha - 1) instead of
/// v^alpha / (alpha - 1).
struct EnergyBreakdown {
  double internal_n = 0.0;
  double internal_p = 0.0;
  double internal_d = 0.0;
  double electric = 0.0;
  double cross_term = 0.0;
  double total = 0.0;
};

EnergyBreakdown free_energy(const DriftDiffusionSystem& system, const State& state);

/// sum over species and faces of area * m_edge * (jump of mu -+ V)^2 / dist,
/// using the same edges, mobilities and contact ghosts as the residual.
double dissipation(const DriftDiffusionSystem& system, const State& state, const FluxOptions& flux = {});
std::array<double, 3> dissipation_by_species(const DriftDiffusionSystem& system, const State& state,
                                             const FluxOptions& flux = {});

/// h(v) = v^alpha / (alpha - 1).
double internal_energy_density(double v, double alpha);

/// Bregman distance h(v) - h(vbar) - h'(vbar)(v - vbar), evaluated without
/// cancellation for v close to vbar. Requires v >= 0 and vbar > 0.
double relative_density(double v, double vbar, double alpha);

/// Relative free energy of `state` with respect to `reference` (reference
/// densities strictly positive). `include_electric` = false drops the
/// lambda^2/2 |grad(V - Vbar)|^2 part.
double relative_free_energy(const DriftDiffusionSystem& system, const State& state, const State& reference,
                            bool include_electric = true);

struct QuadraticBoundReport {
  double inf_ratio = 0.0;         // min over the grid of h(v|vbar) / |v - vbar|^2
  double refined_inf_ratio = 0.0; // same on the 4x refined grid
  double argmin_v = 0.0;
  double argmin_vbar = 0.0;
  bool positive = false;
  bool stable = false; // relative change under refinement < 1%
  bool passed() const { return positive && stable; }
};

/// Grid search of h(v|vbar) / |v - vbar|^2 over v in [0, M], vbar in [m, M]
/// with `points` nodes per axis; v == vbar pairs are skipped.
QuadraticBoundReport verify_quadratic_bound(double alpha, double m, double M, std::size_t points = 200);

/// ( sum vol |f|^q )^(1/q), or max |f| for q = infinity.
double lq_norm(const Mesh& mesh, const Field& field, double q);

inline constexpr double infinity_norm = std::numeric_limits<double>::infinity();

} // namespace memdd
