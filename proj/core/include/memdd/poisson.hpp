#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <memory>
#include <vector>

#include "memdd/mesh.hpp"
#include "memdd/model.hpp"

namespace memdd {

enum class LinearSolverKind { direct, conjugate_gradient };

struct PoissonOptions {
  LinearSolverKind solver = LinearSolverKind::direct;
  double cg_tolerance = 1e-14;
  int cg_max_iterations = 10000;
  double residual_tolerance = 1e-12; // relative, checked after every solve
};

/// A boundary face carrying Dirichlet data, with its two-point coefficient
/// lambda^2 * area / dist (dist = half a cell).
struct ContactFace {
  std::size_t face = 0;
  std::size_t cell = 0;
  std::size_t segment = 0;
  std::size_t local = 0; // position within the segment
  double coefficient = 0.0;
};

/// Two-point finite-volume discretisation of lambda^2 Lap V = f with Dirichlet
/// contacts imposed at half-cell faces and no-flux elsewhere:
///
///   K V = g(V_D) - M f,
///
/// where K is symmetric positive (semi-)definite and M holds cell volumes.
/// Without contacts the system is bordered with a zero-mean constraint and
/// the right-hand side is projected to zero mean. The factorisation is built
/// once and reused for every solve. The mesh must outlive the solver.
class PoissonSolver {
public:
  PoissonSolver(const Mesh& mesh, const BoundarySpec& bc, double lambda, PoissonOptions options = {});
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;

  /// Potential for source f with V_D scaled by `v_multiplier`.
  Field solve(const Field& source, double v_multiplier = 1.0) const;

  /// Same operator with arbitrary contact values (one per contact face, in
  /// `contact_faces()` order). Used for harmonic lifts of boundary data.
  Field solve_with_contact_values(const Field& source, const std::vector<double>& face_values) const;

  /// Contact values of V_D (times multiplier) in `contact_faces()` order.
  std::vector<double> potential_contact_values(double v_multiplier = 1.0) const;

  /// w^T K w: lambda^2 * sum over faces of area/dist * (jump of w)^2 with w = 0
  /// on contact faces.
  double quadratic_form(const Field& w) const;

  const Eigen::SparseMatrix<double>& stiffness() const { return stiffness_; }
  const std::vector<ContactFace>& contact_faces() const { return contact_faces_; }
  bool gauge_mode() const { return gauge_; }
  double lambda() const { return lambda_; }
  const Mesh& mesh() const { return *mesh_; }

private:
  Field solve_system(const Field& rhs) const;

  const Mesh* mesh_;
  double lambda_;
  PoissonOptions options_;
  bool gauge_ = false;
  Eigen::SparseMatrix<double> stiffness_; // K, N x N
  Eigen::SparseMatrix<double> system_;    // K or bordered K
  std::vector<ContactFace> contact_faces_;
  std::vector<double> contact_potential_; // unscaled V_D per contact face
  struct Factorization;
  std::unique_ptr<Factorization> factor_;
};

/// Net charge source n - p - d + A.
Field charge_density(const ModelParams& params, const Field& n, const Field& p, const Field& d);

/// One-shot solve of lambda^2 Lap V = n - p - d + A.
Field solve_poisson(const Mesh& mesh, const BoundarySpec& bc, const ModelParams& params, const Field& n,
                    const Field& p, const Field& d);

/// Edge-based discrete L^r norm of grad V:
///   ( sum_faces area * dist * |dV/dist|^r )^(1/r).
/// Boundary half-faces carry the gradient of the adjacent interior face on the
/// same axis, so the weights of each axis sum to the domain measure.
double grad_lr_norm(const Mesh& mesh, const Field& v, double r);

} // namespace memdd
