#include <benchmark/benchmark.h>

#include <cmath>

#include "memdd/cutoff.hpp"
#include "memdd/transport.hpp"

using namespace memdd;

namespace {

struct Device {
  Mesh mesh;
  std::unique_ptr<DriftDiffusionSystem> system;
  State state;

  explicit Device(std::size_t cells, int dim = 1) {
    mesh = dim == 1 ? build_uniform_mesh(1, {1.0}, {cells}) : build_uniform_mesh(2, {1.0, 1.0}, {cells, cells});
    BoundarySpec bc;
    Contact l, r;
    r.v.constant = 1.0;
    bc.contacts["left"] = l;
    bc.contacts["right"] = r;
    for (auto* c : {&bc.contacts["left"], &bc.contacts["right"]}) c->n.constant = c->p.constant = 1.0;
    ModelParams p;
    p.doping = Field::Constant(static_cast<Eigen::Index>(mesh.num_cells()), 0.5);
    system = std::make_unique<DriftDiffusionSystem>(mesh, bc, p);
    state = initial_state(mesh, constant_profile(1.0), constant_profile(1.0),
                          [](double x, double) { return 0.5 + 0.3 * std::cos(3.0 * x); });
    system->update_potential(state);
  }
};

void residual(benchmark::State& st) {
  Device dev(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(dev.system->residual(dev.state, dev.state, 1e-3));
}
BENCHMARK(residual)->Arg(256)->Arg(4096);

void jacobian(benchmark::State& st) {
  Device dev(static_cast<std::size_t>(st.range(0)));
  Eigen::SparseMatrix<double> j;
  for (auto _ : st) benchmark::DoNotOptimize(dev.system->residual_and_jacobian(dev.state, dev.state, 1e-3, {}, j));
}
BENCHMARK(jacobian)->Arg(256)->Arg(4096);

void poisson_solve(benchmark::State& st) {
  Device dev(static_cast<std::size_t>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(dev.system->potential(dev.state));
}
BENCHMARK(poisson_solve)->Arg(32)->Arg(128);

void implicit_step(benchmark::State& st) {
  Device dev(static_cast<std::size_t>(st.range(0)));
  TimeStepper ts;
  ts.dt = 1e-3;
  for (auto _ : st) benchmark::DoNotOptimize(advance(*dev.system, ts, dev.state));
}
BENCHMARK(implicit_step)->Arg(256);

void cutoff_eval(benchmark::State& st) {
  const CutoffFamily f(16.0);
  double v = -20.0;
  for (auto _ : st) {
    v = v > 40.0 ? -20.0 : v + 0.37;
    benchmark::DoNotOptimize(f.r_gamma(5.0 / 3.0, v) + f.s_gamma(5.0 / 3.0, v) + f.s_zero(v));
  }
}
BENCHMARK(cutoff_eval);

} // namespace
BENCHMARK_MAIN();
