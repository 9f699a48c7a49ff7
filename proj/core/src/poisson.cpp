#include "memdd/poisson.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <sstream>

#include "memdd/errors.hpp"

namespace memdd {

struct PoissonSolver::Factorization {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
};

PoissonSolver::PoissonSolver(const Mesh& mesh, const BoundarySpec& bc, double lambda, PoissonOptions options)
    : mesh_(&mesh), lambda_(lambda), options_(options), factor_(std::make_unique<Factorization>()) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be positive");
  bc.validate(mesh);
  gauge_ = bc.gauge_mode;
  const auto n = static_cast<Eigen::Index>(mesh.num_cells());
  const double l2 = lambda * lambda;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * mesh.interior_faces.size() + mesh.boundary_faces.size() + 2 * static_cast<std::size_t>(n));
  for (const auto& f : mesh.interior_faces) {
    const double c = l2 * f.area / f.dist;
    const auto l = static_cast<int>(f.left), r = static_cast<int>(f.right);
    trip.emplace_back(l, l, c);
    trip.emplace_back(r, r, c);
    trip.emplace_back(l, r, -c);
    trip.emplace_back(r, l, -c);
  }
  for (std::size_t s = 0; s < mesh.segments.size(); ++s) {
    if (!bc.contact_for_segment(mesh, s)) continue;
    const auto& faces = mesh.segments[s].faces;
    for (std::size_t local = 0; local < faces.size(); ++local) {
      const auto& bf = mesh.boundary_faces[faces[local]];
      const double c = l2 * bf.area / bf.dist;
      contact_faces_.push_back({faces[local], bf.cell, s, local, c});
      contact_potential_.push_back(bc.contact_for_segment(mesh, s)->v.at(local));
      trip.emplace_back(static_cast<int>(bf.cell), static_cast<int>(bf.cell), c);
    }
  }
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(trip.begin(), trip.end());

  if (gauge_) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double vol = mesh.cells[static_cast<std::size_t>(c)].volume;
      trip.emplace_back(static_cast<int>(c), static_cast<int>(n), vol);
      trip.emplace_back(static_cast<int>(n), static_cast<int>(c), vol);
    }
    system_.resize(n + 1, n + 1);
    system_.setFromTriplets(trip.begin(), trip.end());
  } else {
    system_ = stiffness_;
  }
  system_.makeCompressed();

  if (options_.solver == LinearSolverKind::conjugate_gradient && !gauge_) {
    factor_->cg.setTolerance(options_.cg_tolerance);
    factor_->cg.setMaxIterations(options_.cg_max_iterations);
    factor_->cg.compute(system_);
  } else {
    factor_->lu.compute(system_);
    if (factor_->lu.info() != Eigen::Success)
      throw NumericalError("Poisson factorisation failed: " + factor_->lu.lastErrorMessage());
  }
}

PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

std::vector<double> PoissonSolver::potential_contact_values(double v_multiplier) const {
  std::vector<double> values;
  values.reserve(contact_faces_.size());
  for (double v : contact_potential_) values.push_back(v_multiplier * v);
  return values;
}

Field PoissonSolver::solve(const Field& source, double v_multiplier) const {
  return solve_with_contact_values(source, potential_contact_values(v_multiplier));
}

Field PoissonSolver::solve_with_contact_values(const Field& source, const std::vector<double>& face_values) const {
  const auto n = static_cast<Eigen::Index>(mesh_->num_cells());
  if (source.size() != n) throw DataError("Poisson source has wrong length");
  if (face_values.size() != contact_faces_.size()) throw DataError("wrong number of contact values");
  Field rhs = Field::Zero(gauge_ ? n + 1 : n);
  double mean = 0.0;
  if (gauge_) {
    for (Eigen::Index c = 0; c < n; ++c) mean += mesh_->cells[static_cast<std::size_t>(c)].volume * source[c];
    mean /= mesh_->measure();
  }
  for (Eigen::Index c = 0; c < n; ++c)
    rhs[c] = -mesh_->cells[static_cast<std::size_t>(c)].volume * (source[c] - mean);
  for (std::size_t i = 0; i < contact_faces_.size(); ++i)
    rhs[static_cast<Eigen::Index>(contact_faces_[i].cell)] += contact_faces_[i].coefficient * face_values[i];
  Field x = solve_system(rhs);
  return gauge_ ? Field(x.head(n)) : x;
}

Field PoissonSolver::solve_system(const Field& rhs) const {
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Field::Zero(rhs.size());
  const bool use_cg = options_.solver == LinearSolverKind::conjugate_gradient && !gauge_;
  Field x;
  if (use_cg) {
    x = factor_->cg.solve(rhs);
    if (factor_->cg.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "Poisson CG did not converge: " << factor_->cg.iterations() << " iterations, estimated error "
          << factor_->cg.error();
      throw NumericalError(msg.str());
    }
  } else {
    x = factor_->lu.solve(rhs);
  }
  // Iterative refinement until the relative residual meets the contract.
  Field r = rhs - system_ * x;
  for (int it = 0; it < 3 && r.norm() > options_.residual_tolerance * bnorm; ++it) {
    x += use_cg ? Field(factor_->cg.solve(r)) : Field(factor_->lu.solve(r));
    r = rhs - system_ * x;
  }
  if (!(r.norm() <= options_.residual_tolerance * bnorm)) {
    std::ostringstream msg;
    msg << "Poisson solve residual " << r.norm() / bnorm << " exceeds tolerance " << options_.residual_tolerance;
    throw NumericalError(msg.str());
  }
  return x;
}

double PoissonSolver::quadratic_form(const Field& w) const { return w.dot(stiffness_ * w); }

Field charge_density(const ModelParams& params, const Field& n, const Field& p, const Field& d) {
  Field f = n - p - d;
  if (params.doping.size() == f.size()) f += params.doping;
  else if (params.doping.size() != 0) throw DataError("doping profile has wrong length");
  return f;
}

Field solve_poisson(const Mesh& mesh, const BoundarySpec& bc, const ModelParams& params, const Field& n,
                    const Field& p, const Field& d) {
  PoissonSolver solver(mesh, bc, params.lambda);
  return solver.solve(charge_density(params, n, p, d), bc.v_multiplier);
}

double grad_lr_norm(const Mesh& mesh, const Field& v, double r) {
  if (!(r >= 1.0)) throw ParameterError("grad_lr_norm requires r >= 1");
  if (static_cast<std::size_t>(v.size()) != mesh.num_cells()) throw DataError("field has wrong length");
  const auto nx = mesh.cell_counts[0];
  const auto ny = mesh.cell_counts[1];
  double sum = 0.0;
  auto add = [&](double area, double dist, double grad) { sum += area * dist * std::pow(std::abs(grad), r); };
  for (const auto& f : mesh.interior_faces) add(f.area, f.dist, (v[f.right] - v[f.left]) / f.dist);
  // Boundary half-faces reuse the first/last interior gradient of their line.
  const double hx = mesh.cell_size[0];
  const double ax = mesh.dim == 1 ? 1.0 : mesh.cell_size[1];
  for (std::size_t j = 0; j < ny; ++j) {
    const auto c0 = mesh.cell_index(0, j), c1 = mesh.cell_index(1, j);
    const auto cn = mesh.cell_index(nx - 1, j), cm = mesh.cell_index(nx - 2, j);
    add(ax, 0.5 * hx, (v[c1] - v[c0]) / hx);
    add(ax, 0.5 * hx, (v[cn] - v[cm]) / hx);
  }
  if (mesh.dim == 2) {
    const double hy = mesh.cell_size[1];
    for (std::size_t i = 0; i < nx; ++i) {
      const auto c0 = mesh.cell_index(i, 0), c1 = mesh.cell_index(i, 1);
      const auto cn = mesh.cell_index(i, ny - 1), cm = mesh.cell_index(i, ny - 2);
      add(hx, 0.5 * hy, (v[c1] - v[c0]) / hy);
      add(hx, 0.5 * hy, (v[cn] - v[cm]) / hy);
    }
  }
  return std::pow(sum, 1.0 / r);
}

} // namespace memdd
