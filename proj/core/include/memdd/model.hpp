#pragma once

#include <Eigen/Core>

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memdd/mesh.hpp"

namespace memdd {

using Field = Eigen::VectorXd;

/// Physical and numerical parameters of the three-species model.
struct ModelParams {
  double alpha_n = 5.0 / 3.0;
  double alpha_p = 5.0 / 3.0;
  double alpha_d = 5.0 / 3.0;
  double lambda = 1.0;
  Field doping;                    // acceptor density A per cell
  std::optional<double> cutoff_k;  // truncation level; empty = direct scheme
  bool drift = true;               // false decouples the densities from V

  /// Checks alpha in (1, 2], lambda > 0, cutoff_k >= 2 and the doping size.
  void validate_for_solver(std::size_t num_cells) const;
};

/// Cell-averaged fields at one time level.
struct State {
  double time = 0.0;
  Field n;
  Field p;
  Field d;
  Field v;
};

/// Dirichlet value on a contact segment: a constant or one value per face.
struct ContactValue {
  double constant = 0.0;
  std::vector<double> per_face;

  double at(std::size_t local_face) const {
    return per_face.empty() ? constant : per_face.at(local_face);
  }
};

/// Ohmic contact: n, p and V are prescribed together on the segment.
struct Contact {
  ContactValue n;
  ContactValue p;
  ContactValue v;
};

/// Boundary data. Segments without a contact entry are no-flux for every
/// unknown; the vacancy density is no-flux on all segments.
struct BoundarySpec {
  std::map<std::string, Contact> contacts;
  double v_multiplier = 1.0; // scales V_D (voltage sweeps)
  bool gauge_mode = false;   // all-Neumann Poisson with zero-mean potential

  bool has_contacts() const { return !contacts.empty(); }
  const Contact* contact_for_segment(const Mesh& mesh, std::size_t segment) const;
  void validate(const Mesh& mesh) const;
};

using CellInitializer = std::function<double(double x, double y)>;

/// Samples the initializers at cell centres. V is left empty until the first
/// Poisson solve. Throws DataError on negative values.
State initial_state(const Mesh& mesh, const CellInitializer& n0,
                    const CellInitializer& p0, const CellInitializer& d0);

CellInitializer constant_profile(double value);

} // namespace memdd
