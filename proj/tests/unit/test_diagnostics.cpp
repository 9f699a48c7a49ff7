#include <doctest.h>

#include <cmath>
#include <random>

#include "memdd/diagnostics.hpp"
#include "memdd/errors.hpp"

using namespace memdd;

namespace {

const double pi = std::acos(-1.0);

BoundarySpec grounded(double nd, double pd, double vl = 0.0, double vr = 0.0) {
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

ModelParams params(std::size_t nc, double a, double doping) {
  ModelParams p;
  p.alpha_n = p.alpha_p = p.alpha_d = a;
  p.doping = Field::Constant(static_cast<Eigen::Index>(nc), doping);
  return p;
}

} // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("equilibrium has zero free energy and zero dissipation") {
  const auto m = build_uniform_mesh(1, {1.0}, {32});
  DriftDiffusionSystem sys(m, grounded(1.2, 0.7, 0.3, 0.3), params(32, 5.0 / 3.0, 0.7 - 1.2));
  State s = initial_state(m, constant_profile(1.2), constant_profile(0.7), constant_profile(0.0));
  sys.update_potential(s);
  CHECK((s.v.array() - 0.3).abs().maxCoeff() < 1e-12);
  const auto e = free_energy(sys, s);
  CHECK(std::abs(e.total) < 1e-12);
  CHECK(e.cross_term == 0.0);
  CHECK(dissipation(sys, s) < 1e-20);
}

TEST_CASE("constant vacancy density: internal part exact, electric part converges") {
  // lambda^2 V'' = -c with V(0) = V(1) = 0 gives lambda^2/2 int |V'|^2 = c^2 / (24 lambda^2).
  const double c = 0.4, lam = 0.5, a = 5.0 / 3.0;
  double prev = 0.0;
  for (std::size_t n : {64, 128, 256}) {
    const auto m = build_uniform_mesh(1, {1.0}, {n});
    auto p = params(n, a, 0.0);
    p.lambda = lam;
    DriftDiffusionSystem sys(m, grounded(1.0, 1.0), p);
    State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(c));
    sys.update_potential(s);
    const auto e = free_energy(sys, s);
    CHECK(e.internal_d == doctest::Approx(std::pow(c, a) / (a - 1.0)).epsilon(1e-12));
    CHECK(std::abs(e.internal_n) < 1e-14);
    CHECK(e.cross_term == 0.0);
    const double err = std::abs(e.electric - c * c / (24.0 * lam * lam));
    if (prev > 0.0) CHECK(prev / err > 3.5);
    prev = err;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("cross term vanishes for d = 0 or V_D = 0") {
  const auto m = build_uniform_mesh(1, {1.0}, {16});
  DriftDiffusionSystem biased(m, grounded(1.0, 1.0, 0.0, 1.0), params(16, 2.0, 0.0));
  State s = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.0));
  biased.update_potential(s);
  CHECK(free_energy(biased, s).cross_term == 0.0);
  DriftDiffusionSystem flat(m, grounded(1.0, 1.0), params(16, 2.0, 0.0));
  State t = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.3));
  flat.update_potential(t);
  CHECK(free_energy(flat, t).cross_term == 0.0);
}

TEST_CASE("dissipation for constant n and linear V is sum n |grad V|^2") {
  const std::size_t n = 20;
  const auto m = build_uniform_mesh(1, {1.0}, {n});
  BoundarySpec bc;
  bc.gauge_mode = true;
  DriftDiffusionSystem sys(m, bc, params(n, 5.0 / 3.0, 0.0));
  State s = initial_state(m, constant_profile(0.7), constant_profile(0.0), constant_profile(0.0));
  const double slope = 2.5;
  s.v = Field::NullaryExpr(static_cast<Eigen::Index>(n), [&](Eigen::Index i) { return slope * m.cells[i].center[0]; });
  const auto parts = dissipation_by_species(sys, s);
  const double h = 1.0 / static_cast<double>(n);
  CHECK(parts[0] == doctest::Approx(0.7 * slope * slope * h * static_cast<double>(n - 1)).epsilon(1e-12));
  CHECK(parts[1] == 0.0);
  CHECK(parts[2] == 0.0);
}

TEST_CASE("alpha = 2 dissipation scales with the cube of the densities") {
  const std::size_t n = 24;
  const auto m = build_uniform_mesh(1, {1.0}, {n});
  BoundarySpec bc;
  bc.gauge_mode = true;
  DriftDiffusionSystem sys(m, bc, params(n, 2.0, 0.0));
  State s = initial_state(m, [](double x, double) { return 1.0 + x; }, [](double x, double) { return 2.0 - x * x; },
                          [](double x, double) { return 0.5 + std::sin(pi * x); });
  s.v = Field::NullaryExpr(static_cast<Eigen::Index>(n), [&](Eigen::Index i) { return std::cos(3 * m.cells[i].center[0]); });
  const double d1 = dissipation(sys, s);
  const double c = 1.7;
  State t = s;
  t.n *= c, t.p *= c, t.d *= c, t.v *= c;
  CHECK(dissipation(sys, t) == doctest::Approx(c * c * c * d1).epsilon(1e-12));
}

TEST_CASE("relative density reference values") {
  CHECK(relative_density(3.0, 1.0, 2.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(relative_density(2.5, 2.5, 5.0 / 3.0) == 0.0);
  CHECK(relative_density(8.0, 1.0, 5.0 / 3.0) == doctest::Approx(29.0).epsilon(1e-13));
  CHECK(relative_density(0.0, 1.0, 2.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_density(-1.0, 1.0, 2.0), DomainError);
  CHECK_THROWS_AS(relative_density(1.0, 0.0, 2.0), DomainError);
  CHECK_THROWS_AS(relative_density(1.0, 1.0, 1.0), ParameterError);
}

TEST_CASE("relative density near the diagonal follows the Taylor expansion") {
  for (double a : {4.0 / 3.0, 5.0 / 3.0, 2.0}) {
    for (double vbar : {0.5, 1.0, 3.0}) {
      for (double t : {1e-7, -1e-6, 1e-5, -3e-4}) {
        const double v = vbar * (1.0 + t);
        const double taylor = std::pow(vbar, a) * 0.5 * a * t * t * (1.0 + (a - 2.0) * t / 3.0);
        CHECK(relative_density(v, vbar, a) == doctest::Approx(taylor).epsilon(1e-7));
      }
    }
  }
  // Exact square for alpha = 2, on both sides of the series switch.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    const double v = u(rng), vb = 0.1 + u(rng);
    CHECK(relative_density(v, vb, 2.0) == doctest::Approx((v - vb) * (v - vb)).epsilon(1e-12));
  }
}

TEST_CASE("relative density is nonnegative and continuous across the series switch") {
  for (double a : {1.1, 1.5, 5.0 / 3.0, 2.0}) {
    const double lo = relative_density(std::nextafter(1.5, 0.0), 1.0, a);
    const double hi = relative_density(std::nextafter(1.5, 2.0), 1.0, a);
    CHECK(hi == doctest::Approx(lo).epsilon(1e-13));
    for (double v = 0.0; v < 5.0; v += 0.01) CHECK(relative_density(v, 1.3, a) >= 0.0);
  }
}

TEST_CASE("relative free energy") {
  const auto m = build_uniform_mesh(1, {1.0}, {16});
  DriftDiffusionSystem sys(m, grounded(1.0, 1.0), params(16, 2.0, 0.0));
  State ref = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.5));
  sys.update_potential(ref);
  CHECK(relative_free_energy(sys, ref, ref) == 0.0);
  State s = initial_state(m, [](double x, double) { return 1.0 + 0.1 * x; }, constant_profile(0.9),
                          [](double x, double) { return 0.5 + 0.2 * std::cos(pi * x); });
  sys.update_potential(s);
  double expect = 0.0;
  for (Eigen::Index i = 0; i < 16; ++i)
    expect += (std::pow(s.n[i] - ref.n[i], 2) + std::pow(s.p[i] - ref.p[i], 2) + std::pow(s.d[i] - ref.d[i], 2)) / 16.0;
  CHECK(relative_free_energy(sys, s, ref, false) == doctest::Approx(expect).epsilon(1e-13));
  CHECK(relative_free_energy(sys, s, ref) > relative_free_energy(sys, s, ref, false));
  State bad = ref;
  bad.d[3] = 0.0;
  CHECK_THROWS_AS(relative_free_energy(sys, s, bad), DomainError);
}

TEST_CASE("relative free energy to the equilibrium decays") {
  const auto m = build_uniform_mesh(1, {1.0}, {32});
  DriftDiffusionSystem sys(m, grounded(1.0, 1.0), params(32, 5.0 / 3.0, 0.5));
  State ref = initial_state(m, constant_profile(1.0), constant_profile(1.0), constant_profile(0.5));
  State s = initial_state(m, [](double x, double) { return 1.0 + 0.05 * std::sin(pi * x); }, constant_profile(1.0),
                          constant_profile(0.5));
  sys.update_potential(ref);
  sys.update_potential(s);
  TimeStepper ts;
  ts.dt = 0.01;
  double prev = relative_free_energy(sys, s, ref);
  CHECK(prev > 0.0);
  for (int i = 0; i < 10; ++i) {
    s = advance(sys, ts, s).state;
    const double h = relative_free_energy(sys, s, ref);
    CHECK(h < prev);
    prev = h;
  }
}

TEST_CASE("quadratic lower bound") {
  const auto two = verify_quadratic_bound(2.0, 0.5, 2.0, 60);
  CHECK(two.inf_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(two.refined_inf_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(two.passed());
  const auto r = verify_quadratic_bound(5.0 / 3.0, 0.5, 2.0, 200);
  CHECK(r.positive);
  CHECK(r.passed());
  // Along v -> vbar the ratio tends to h''(vbar)/2 = alpha vbar^(alpha-2) / 2.
  for (double vb : {0.5, 1.0, 2.0}) {
    const double d = 1e-4;
    const double a = 5.0 / 3.0;
    CHECK(relative_density(vb + d, vb, a) / (d * d) == doctest::Approx(0.5 * a * std::pow(vb, a - 2.0)).epsilon(1e-3));
  }
  CHECK_THROWS_AS(verify_quadratic_bound(2.0, 0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(verify_quadratic_bound(2.0, 1.0, 1.0), ParameterError);
}

TEST_CASE("Lq norms") {
  const auto m = build_uniform_mesh(2, {1.0, 1.0}, {4, 5});
  for (double q : {1.0, 2.0, 7.0, infinity_norm}) CHECK(lq_norm(m, Field::Constant(20, -2.5), q) == doctest::Approx(2.5));
  const auto m3 = build_uniform_mesh(1, {3.0}, {3});
  Field f(3);
  f << 1.0, -3.0, 2.0;
  CHECK(lq_norm(m3, f, infinity_norm) == 3.0);
  const auto fine = build_uniform_mesh(1, {1.0}, {400});
  const Field x = Field::NullaryExpr(400, [&](Eigen::Index i) { return fine.cells[i].center[0]; });
  CHECK(lq_norm(fine, x, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-5));
  CHECK_THROWS_AS(lq_norm(m3, f, 0.5), ParameterError);
}

TEST_CASE("insulated chain H(m+1) - H(m) <= -dt D(m+1)") {
  const auto m = build_uniform_mesh(1, {1.0}, {48});
  BoundarySpec bc;
  bc.gauge_mode = true;
  DriftDiffusionSystem sys(m, bc, params(48, 5.0 / 3.0, 1.0));
  State s = initial_state(m, [](double x, double) { return 1.0 + 0.3 * std::cos(pi * x); },
                          [](double x, double) { return 1.0 - 0.2 * std::cos(2 * pi * x); },
                          [](double x, double) { return 1.0 + 0.5 * std::cos(pi * x); });
  sys.update_potential(s);
  TimeStepper ts;
  ts.dt = 2e-3;
  double h = free_energy(sys, s).total;
  for (int i = 0; i < 30; ++i) {
    s = advance(sys, ts, s).state;
    const double next = free_energy(sys, s).total;
    CHECK(next - h <= -ts.dt * dissipation(sys, s) + 1e-8 * ts.dt);
    h = next;
  }
}

TEST_CASE("free energy with a cutoff reduces to the direct one inside the identity region") {
  const auto m = build_uniform_mesh(1, {1.0}, {16});
  auto pd = params(16, 5.0 / 3.0, 0.0);
  auto pc = pd;
  pc.cutoff_k = 8.0;
  const auto bc = grounded(1.0, 1.0, 0.0, 0.2);
  DriftDiffusionSystem direct(m, bc, pd), cut(m, bc, pc);
  State s = initial_state(m, [](double x, double) { return 1.0 + 0.5 * x; }, constant_profile(1.5),
                          [](double x, double) { return 0.5 + x; });
  direct.update_potential(s);
  const auto a = free_energy(direct, s);
  const auto b = free_energy(cut, s);
  CHECK(b.internal_n == doctest::Approx(a.internal_n).epsilon(1e-12));
  CHECK(b.internal_p == doctest::Approx(a.internal_p).epsilon(1e-12));
  // The vacancy energy differs by the affine shift of R_k in the middle branch.
  CHECK(std::isfinite(b.internal_d));
}

}
