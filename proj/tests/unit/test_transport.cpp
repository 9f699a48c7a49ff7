#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "memdd/diagnostics.hpp"
#include "memdd/errors.hpp"
#include "memdd/transport.hpp"

using namespace memdd;

namespace {

const double pi = std::acos(-1.0);

BoundarySpec device(double nd, double pd, double vl, double vr) {
  BoundarySpec bc;
  Contact l, r;
  l.n.constant = r.n.constant = nd;
  l.p.constant = r.p.constant = pd;
  l.v.constant = vl;
  r.v.constant = vr;
  bc.contacts["left"] = l;
  bc.contacts["right"] = r;
  return bc;
}

BoundarySpec insulated() {
  BoundarySpec bc;
  bc.gauge_mode = true;
  return bc;
}

ModelParams params(std::size_t nc, double a = 5.0 / 3.0, double doping = 0.0) {
  ModelParams p;
  p.alpha_n = p.alpha_p = p.alpha_d = a;
  p.doping = Field::Constant(static_cast<Eigen::Index>(nc), doping);
  return p;
}

double charge(const Mesh& m, const State& s) {
  double q = 0.0;
  for (std::size_t c = 0; c < m.num_cells(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    q += m.cells[c].volume * (s.p[i] + s.d[i] - s.n[i]);
  }
  return q;
}

} // namespace

TEST_SUITE("transport") {

TEST_CASE("chemical potential reference values") {
  CHECK(chemical_potential(3.0, 2.0) == doctest::Approx(6.0));
  CHECK(chemical_potential(0.0, 5.0 / 3.0) == 0.0);
  CHECK(chemical_potential(8.0, 5.0 / 3.0) == doctest::Approx(10.0).epsilon(1e-14));
  CHECK_THROWS_AS(chemical_potential(-1e-3, 2.0), DomainError);
}

TEST_CASE("edge flux reference values") {
  const FluxForm n = flux_form(Species::n);
  const FluxForm p = flux_form(Species::p);
  CHECK(edge_flux(n, 0.7, 0.7, 0.3, 0.3, 0.5, 5.0 / 3.0) == 0.0);
  const auto e = evaluate_edge_flux(n, 1.0, 0.0, 0.0, 0.0, 1.0, 2.0, nullptr);
  CHECK(e.mobility == doctest::Approx(0.5));
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(edge_flux(p, 1.0, 1.0, 0.0, 1.0, 1.0, 2.0) == doctest::Approx(-1.0));
  CHECK(edge_flux(n, 1.0, 1.0, 0.0, 1.0, 1.0, 2.0) == doctest::Approx(1.0));
  CHECK(flux_form(Species::d).drift_sign == 1);
  CHECK_THROWS_AS(edge_flux(n, 1.0, 1.0, 0.0, 0.0, 0.0, 2.0), ParameterError);
}

TEST_CASE("alpha = 2 flux is the exact two-point difference of v^2") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng), h = 0.01 + u(rng);
    const double f = edge_flux(flux_form(Species::d), a, b, 0.0, 0.0, h, 2.0);
    CHECK(f == doctest::Approx((a * a - b * b) / h).epsilon(1e-12));
  }
}

TEST_CASE("upwind mobility takes the donor density") {
  FluxOptions up;
  up.mobility = MobilityAverage::upwind;
  const auto e = evaluate_edge_flux(flux_form(Species::d), 2.0, 0.0, 0.0, 0.0, 1.0, 2.0, nullptr, up);
  CHECK(e.mobility == doctest::Approx(2.0));
  const auto r = evaluate_edge_flux(flux_form(Species::d), 0.0, 2.0, 0.0, 0.0, 1.0, 2.0, nullptr, up);
  CHECK(r.mobility == doctest::Approx(2.0));
  CHECK(r.value < 0.0);
}

TEST_CASE("analytic Jacobian matches finite differences") {
  for (bool with_cutoff : {false, true}) {
    for (bool upwind : {false, true}) {
      const auto m = build_uniform_mesh(2, {1.0, 0.8}, {4, 3});
      auto p = params(m.num_cells(), 5.0 / 3.0, 0.3);
      p.alpha_d = 1.5;
      if (with_cutoff) p.cutoff_k = 3.0;
      DriftDiffusionSystem sys(m, device(1.0, 0.5, 0.0, 0.7), p);
      FluxOptions flux;
      if (upwind) flux.mobility = MobilityAverage::upwind;
      std::mt19937_64 rng(5);
      std::uniform_real_distribution<double> u(0.2, 2.5);
      State old = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(1.0));
      State cand = old;
      for (Eigen::Index i = 0; i < cand.n.size(); ++i) cand.n[i] = u(rng), cand.p[i] = u(rng), cand.d[i] = u(rng);
      sys.update_potential(old);
      cand.v = Field::NullaryExpr(cand.n.size(), [&](Eigen::Index) { return u(rng) - 1.0; });
      const double dt = 0.01;
      Eigen::SparseMatrix<double> jac;
      const Field r0 = sys.residual_and_jacobian(old, cand, dt, flux, jac);
      const Eigen::MatrixXd J(jac);
      const auto nc = cand.n.size();
      double worst = 0.0;
      for (Eigen::Index col = 0; col < 4 * nc; ++col) {
        const double h = 1e-6;
        State plus = cand, minus = cand;
        Field* fp[] = {&plus.n, &plus.p, &plus.d, &plus.v};
        Field* fm[] = {&minus.n, &minus.p, &minus.d, &minus.v};
        (*fp[col / nc])[col % nc] += h;
        (*fm[col / nc])[col % nc] -= h;
        const Field fd = (sys.residual(old, plus, dt, flux) - sys.residual(old, minus, dt, flux)) / (2 * h);
        for (Eigen::Index row = 0; row < 3 * nc; ++row)
          worst = std::max(worst, std::abs(fd[row] - J(row, col)) / (1.0 + std::abs(J(row, col))));
      }
      CHECK(worst < 1e-6);
      CHECK(r0.size() == 3 * nc);
      // Poisson rows: K on V, +vol on n, -vol on p and d.
      const Eigen::MatrixXd K(sys.poisson().stiffness());
      CHECK((J.block(3 * nc, 3 * nc, nc, nc) - K).cwiseAbs().maxCoeff() < 1e-14);
      CHECK(J(3 * nc, 0) == doctest::Approx(m.cells[0].volume));
      CHECK(J(3 * nc, nc) == doctest::Approx(-m.cells[0].volume));
      CHECK(J(3 * nc, 2 * nc) == doctest::Approx(-m.cells[0].volume));
    }
  }
}

TEST_CASE("gauge mode Jacobian is bordered") {
  const auto m = build_uniform_mesh(1, {1.0}, {6});
  DriftDiffusionSystem sys(m, insulated(), params(6));
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.5));
  sys.update_potential(s);
  Eigen::SparseMatrix<double> jac;
  sys.residual_and_jacobian(s, s, 0.1, {}, jac);
  CHECK(jac.rows() == 4 * 6 + 1);
}

TEST_CASE("equilibrium residual vanishes, also in the steady limit") {
  const auto m = build_uniform_mesh(2, {1.0, 1.0}, {6, 5});
  auto p = params(m.num_cells(), 5.0 / 3.0, 0.5 - 1.0); // A = p_D - n_D
  DriftDiffusionSystem sys(m, device(1.0, 0.5, 0.0, 0.0), p);
  State s = initial_state(m, constant_profile(1.0), constant_profile(0.5), constant_profile(0.0));
  sys.update_potential(s);
  CHECK(s.v.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sys.residual(s, s, 0.1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(assemble_residual(sys, s, s, std::numeric_limits<double>::infinity()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("infinite dt drops the time derivative") {
  const auto m = build_uniform_mesh(1, {1.0}, {8});
  DriftDiffusionSystem sys(m, device(1.0, 1.0, 0.0, 0.3), params(8));
  State old = initial_state(m, constant_profile(2.0), constant_profile(1.0), constant_profile(0.2));
  State cand = initial_state(m, [](double x, double) { return 1.0 + x; }, constant_profile(1.0), constant_profile(0.2));
  sys.update_potential(old);
  sys.update_potential(cand);
  const Field a = sys.residual(old, cand, std::numeric_limits<double>::infinity());
  const Field b = sys.residual(cand, cand, 0.5);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("residual is local: one-cell perturbation touches its stencil only") {
  const auto m = build_uniform_mesh(2, {1.0, 1.0}, {5, 5});
  DriftDiffusionSystem sys(m, insulated(), params(25));
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(1.0));
  s.v = Field::Zero(25);
  const Field base = sys.residual(s, s, 0.1);
  State q = s;
  const std::size_t c = m.cell_index(2, 2);
  q.d[static_cast<Eigen::Index>(c)] += 0.1;
  const Field diff = sys.residual(s, q, 0.1) - base;
  const std::vector<std::size_t> stencil{c, m.cell_index(1, 2), m.cell_index(3, 2), m.cell_index(2, 1), m.cell_index(2, 3)};
  for (Eigen::Index i = 0; i < diff.size(); ++i) {
    const auto cell = static_cast<std::size_t>(i % 25);
    const bool in = i / 25 == 2 && std::find(stencil.begin(), stencil.end(), cell) != stencil.end();
    if (!in) CHECK(diff[i] == 0.0);
    else CHECK(diff[i] != 0.0);
  }
}

TEST_CASE("truncated and direct residuals agree inside [2/k, k/2]") {
  const auto m = build_uniform_mesh(1, {1.0}, {10});
  auto pd = params(10, 5.0 / 3.0, 0.2);
  auto pc = pd;
  pc.cutoff_k = 8.0;
  const auto bc = device(1.0, 2.0, 0.0, 0.4);
  DriftDiffusionSystem direct(m, bc, pd), cut(m, bc, pc);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.25, 4.0);
  State old = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(1.0));
  State cand = old;
  for (Eigen::Index i = 0; i < 10; ++i) cand.n[i] = u(rng), cand.p[i] = u(rng), cand.d[i] = u(rng);
  direct.update_potential(old);
  direct.update_potential(cand);
  const Field a = direct.residual(old, cand, 0.01);
  const Field b = cut.residual(old, cand, 0.01);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("equilibrium data stays put") {
  const auto m = build_uniform_mesh(1, {1.0}, {16});
  DriftDiffusionSystem sys(m, device(1.0, 1.0, 0.0, 0.0), params(16));
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.0));
  sys.update_potential(s);
  TimeStepper ts;
  ts.dt = 0.05;
  for (int i = 0; i < 10; ++i) s = advance(sys, ts, s).state;
  CHECK((s.n.array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK((s.p.array() - 1.0).abs().maxCoeff() < 1e-10);
  CHECK(s.d.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(s.time == doctest::Approx(0.5));
  CHECK(std::abs(terminal_current(sys, s, "left")) < 1e-10);
}

TEST_CASE("decoupled porous-medium blob conserves mass and spreads") {
  const auto m = build_uniform_mesh(1, {1.0}, {80});
  auto p = params(80, 2.0);
  p.drift = false;
  DriftDiffusionSystem sys(m, insulated(), p);
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), [](double x, double) {
    const double r = (x - 0.5) / 0.1;
    return std::max(0.0, 1.0 - r * r);
  });
  sys.update_potential(s);
  const double m0 = s.d.sum() / 80.0;
  const auto support = [](const Field& d) { return (d.array() > 0.0).count(); };
  const auto s0 = support(s.d);
  TimeStepper ts;
  ts.dt = 2e-3;
  for (int i = 0; i < 10; ++i) s = advance(sys, ts, s).state;
  CHECK(std::abs(s.d.sum() / 80.0 - m0) < 1e-12);
  CHECK(support(s.d) > s0);
  CHECK(support(s.d) < 80); // finite propagation speed
  CHECK(s.d.minCoeff() >= 0.0);
}

TEST_CASE("forced Newton failure halves dt with exact time accounting") {
  const auto m = build_uniform_mesh(1, {1.0}, {16});
  DriftDiffusionSystem sys(m, insulated(), params(16));
  State s = initial_state(m, [](double x, double) { return 1.0 + 0.5 * std::cos(pi * x); }, constant_profile(1.0),
                          constant_profile(1.0));
  sys.update_potential(s);
  TimeStepper ts;
  ts.dt = 0.1;
  ts.newton_max_iter = 1;
  ts.newton_tol = 1e-6;
  CHECK_THROWS_AS(advance(sys, ts, s), StepFailure);
  const auto r = advance_adaptive(sys, ts, s);
  CHECK(r.failures > 0);
  CHECK(r.substeps > 1);
  CHECK(r.state.time == 0.1);
  TimeStepper tight = ts;
  tight.dt_floor = 0.06;
  CHECK_THROWS_AS(advance_adaptive(sys, tight, s), StepFailure);
}

TEST_CASE("stepper validation") {
  TimeStepper ts;
  CHECK_NOTHROW(ts.validate());
  ts.dt = 0.0;
  CHECK_THROWS_AS(ts.validate(), ParameterError);
  ts.dt = 1e-3;
  ts.newton_tol = -1.0;
  CHECK_THROWS_AS(ts.validate(), ParameterError);
  ts.newton_tol = 1e-10;
  ts.flux.floor_epsilon = -1.0;
  CHECK_THROWS_AS(ts.validate(), ParameterError);
}

TEST_CASE("bias flip negates the current") {
  const auto m = build_uniform_mesh(1, {1.0}, {32});
  auto run = [&](double bias) {
    DriftDiffusionSystem sys(m, device(1.0, 1.0, 0.0, bias), params(32));
    State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.0));
    sys.update_potential(s);
    TimeStepper ts;
    ts.dt = 0.01;
    for (int i = 0; i < 5; ++i) s = advance(sys, ts, s).state;
    return terminal_current(sys, s, "right");
  };
  const double a = run(0.8), b = run(-0.8);
  CHECK(std::abs(a) > 1e-3);
  CHECK(std::abs(a + b) < 1e-8);
}

TEST_CASE("contact currents balance the change of total charge") {
  const auto m = build_uniform_mesh(2, {1.0, 0.5}, {12, 6});
  SegmentLayout layout{{"anode", Side::left, 0.0, 0.25}};
  const auto mesh = build_uniform_mesh(2, {1.0, 0.5}, {12, 6}, layout);
  BoundarySpec bc;
  Contact a, c;
  a.n.constant = 0.8, a.p.constant = 1.2, a.v.constant = 0.6;
  c.n.constant = 1.0, c.p.constant = 1.0, c.v.constant = 0.0;
  bc.contacts["anode"] = a;
  bc.contacts["right"] = c;
  DriftDiffusionSystem sys(mesh, bc, params(72, 5.0 / 3.0, 0.3));
  State s = initial_state(mesh, constant_profile(1.0), constant_profile(1.0),
                          [](double x, double y) { return 0.3 + 0.2 * std::cos(pi * x) * std::cos(2 * pi * y); });
  sys.update_potential(s);
  TimeStepper ts;
  ts.dt = 0.02;
  for (int i = 0; i < 5; ++i) {
    const double q0 = charge(mesh, s);
    s = advance(sys, ts, s).state;
    const double balance = terminal_current(sys, s, "anode") + terminal_current(sys, s, "right") +
                           (charge(mesh, s) - q0) / ts.dt;
    CHECK(std::abs(balance) < 1e-9);
  }
  CHECK_THROWS_AS(terminal_current(sys, s, "top"), ConfigError);
  CHECK_THROWS_AS(terminal_current(sys, s, "nowhere"), ConfigError);
  (void)m;
}

TEST_CASE("vacancy mass is conserved with contacts present") {
  const auto m = build_uniform_mesh(1, {1.0}, {40});
  DriftDiffusionSystem sys(m, device(1.0, 1.0, 0.0, 2.0), params(40, 5.0 / 3.0, 0.5));
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.5));
  sys.update_potential(s);
  const double m0 = s.d.sum() / 40.0;
  TimeStepper ts;
  ts.dt = 0.01;
  for (int i = 0; i < 20; ++i) {
    const double before = s.d.sum() / 40.0;
    s = advance(sys, ts, s).state;
    CHECK(std::abs(s.d.sum() / 40.0 - before) < 1e-12);
  }
  CHECK(std::abs(s.d.sum() / 40.0 - m0) < 1e-12);
}

TEST_CASE("insulated steps never increase the free energy") {
  const auto m = build_uniform_mesh(2, {1.0, 1.0}, {10, 10});
  DriftDiffusionSystem sys(m, insulated(), params(100, 5.0 / 3.0, 1.0));
  State s = initial_state(
      m, [](double x, double y) { return 1.0 + 0.4 * std::cos(pi * x) * std::cos(pi * y); },
      [](double x, double) { return 1.0 - 0.3 * std::cos(2 * pi * x); },
      [](double x, double y) { return 1.0 + 0.5 * std::cos(pi * y) + 0.1 * x; });
  sys.update_potential(s);
  TimeStepper ts;
  ts.dt = 5e-3;
  double h = free_energy(sys, s).total;
  for (int i = 0; i < 20; ++i) {
    s = advance(sys, ts, s).state;
    const double next = free_energy(sys, s).total;
    CHECK(next <= h + 1e-10);
    CHECK(next - h <= -ts.dt * dissipation(sys, s) + 1e-8 * ts.dt);
    h = next;
  }
}

TEST_CASE("cutoff scheme advances and conserves vacancy mass") {
  const auto m = build_uniform_mesh(1, {1.0}, {32});
  auto p = params(32, 5.0 / 3.0, 0.5);
  p.cutoff_k = 10.0;
  DriftDiffusionSystem sys(m, device(1.0, 1.0, 0.0, 0.5), p);
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0),
                          [](double x, double) { return 0.5 + 0.4 * std::cos(pi * x); });
  sys.update_potential(s);
  const double m0 = s.d.sum();
  TimeStepper ts;
  ts.dt = 0.01;
  for (int i = 0; i < 10; ++i) s = advance(sys, ts, s).state;
  CHECK(std::abs(s.d.sum() - m0) / 32.0 < 1e-12);
}

}
