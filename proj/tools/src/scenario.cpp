#include "memdd/harness/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "memdd/errors.hpp"
#include "memdd/exponents.hpp"

namespace memdd::harness {

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string q_label(double q) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", q);
  return buf;
}

double cell_mass(const Mesh& mesh, const Field& f) {
  double m = 0.0;
  for (Eigen::Index c = 0; c < f.size(); ++c) m += mesh.cells[static_cast<std::size_t>(c)].volume * f[c];
  return m;
}

double min_density(const State& s) { return std::min({s.n.minCoeff(), s.p.minCoeff(), s.d.minCoeff()}); }

// Owns the lock file of an output directory for the lifetime of a run.
class DirectoryLock {
public:
  explicit DirectoryLock(const std::filesystem::path& dir) : path_(dir / "run.lock") {
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw ConfigError("output directory '" + dir.string() + "' is locked by another run (" + path_.string() + ")");
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

private:
  std::filesystem::path path_;
};

struct Snapshot {
  std::string label;
  State state;
};

struct SimulationOutput {
  ScenarioResult result;
  std::vector<Snapshot> snapshots;
  State last_good;
};

SimulationOutput run_simulation(const ScenarioConfig& config) {
  if (config.kind == ScenarioKind::convergence)
    throw ConfigError("scenario.kind: convergence configs are run through convergence_study");
  SimulationOutput out;
  ScenarioResult& res = out.result;

  const Mesh mesh = build_mesh(config);
  DriftDiffusionSystem system(mesh, build_boundary(config), build_params(config, mesh), build_poisson_options(config));
  const TimeStepper stepper = build_stepper(config);
  const bool sweep = config.kind == ScenarioKind::sweep;
  if (sweep) system.set_v_multiplier(schedule_multiplier(config.sweep.schedule, 0.0));

  State state = build_initial_state(config, mesh);
  system.update_potential(state);

  auto monitor_enabled = [&](const std::string& name) {
    return std::find(config.monitors.begin(), config.monitors.end(), name) != config.monitors.end();
  };
  MonitorVerdict energy{"energy", true, 0.0, {}};
  MonitorVerdict dmass{"d_mass", true, 0.0, {}};
  MonitorVerdict nonneg{"nonnegativity", true, 0.0, {}};
  double lowest = min_density(state);
  nonneg.worst = std::max(0.0, -lowest);
  if (lowest < -1e-8) ++res.scheme_quality_events;

  std::vector<double> snap_times = config.snapshot_times;
  std::sort(snap_times.begin(), snap_times.end());
  std::size_t next_snap = 0;
  auto take_snapshots = [&](double t_reached) {
    while (next_snap < snap_times.size() && snap_times[next_snap] <= t_reached * (1.0 + 1e-12) + 1e-300) {
      out.snapshots.push_back({std::to_string(next_snap), state});
      ++next_snap;
    }
  };

  res.records.push_back(make_record(system, state, config, 0));
  if (sweep) res.iv.push_back({0.0, system.v_multiplier(), terminal_current(system, state, config.sweep.contact, stepper.flux)});
  take_snapshots(0.0);

  double energy_prev = res.records.back().energy.total;
  double dmass_prev = cell_mass(mesh, state.d);
  const double t_end = config.t_end;
  const double eps = 1e-12 * t_end;
  int step = 0;
  out.last_good = state;
  while (state.time < t_end - eps) {
    TimeStepper s = stepper;
    s.dt = std::min(stepper.dt, t_end - state.time);
    // Snap the final step onto t_end instead of leaving a sliver.
    if (t_end - (state.time + s.dt) < eps) s.dt = t_end - state.time;
    if (sweep) system.set_v_multiplier(schedule_multiplier(config.sweep.schedule, state.time + s.dt));
    AdaptiveStepResult step_result;
    try {
      step_result = advance_adaptive(system, s, state);
    } catch (const StepFailure& e) {
      res.failure = std::string("step failure at t = ") + g6(state.time) + ": " + e.what();
      res.exit_code = exit_numerical_failure;
      break;
    }
    state = std::move(step_result.state);
    if (t_end - state.time < eps) state.time = t_end;
    ++step;
    res.substeps += step_result.substeps;
    res.step_failures += step_result.failures;
    out.last_good = state;

    const double h = free_energy(system, state).total;
    energy.worst = std::max(energy.worst, h - energy_prev);
    energy_prev = h;
    const double dm = cell_mass(mesh, state.d);
    dmass.worst = std::max(dmass.worst, std::abs(dm - dmass_prev) / std::max(1.0, std::abs(dmass_prev)));
    dmass_prev = dm;
    const double low = min_density(state);
    lowest = std::min(lowest, low);
    nonneg.worst = std::max(nonneg.worst, -low);
    if (low < -1e-8) ++res.scheme_quality_events;

    const bool last = state.time >= t_end - eps;
    if (step % config.record_every == 0 || last)
      res.records.push_back(make_record(system, state, config, step_result.total_newton_iterations));
    if (sweep)
      res.iv.push_back({state.time, system.v_multiplier(),
                        terminal_current(system, state, config.sweep.contact, stepper.flux)});
    take_snapshots(state.time);
  }
  res.steps = step;
  res.completed = res.failure.empty();

  energy.passed = energy.worst <= config.energy_tolerance;
  energy.detail = "largest per-step increase " + g6(energy.worst) + " (tolerance " + g6(config.energy_tolerance) + ")";
  dmass.passed = dmass.worst <= config.mass_tolerance;
  dmass.detail = "largest per-step relative change " + g6(dmass.worst) + " (tolerance " + g6(config.mass_tolerance) + ")";
  nonneg.passed = nonneg.worst <= config.negativity_tolerance;
  nonneg.detail = "smallest density " + g6(lowest) + " (tolerance " + g6(config.negativity_tolerance) + ")";
  for (auto* m : {&energy, &dmass, &nonneg}) {
    if (!monitor_enabled(m->name)) continue;
    res.monitors.push_back(*m);
    if (!m->passed && res.exit_code == exit_ok) res.exit_code = exit_numerical_failure;
  }
  if (sweep && res.iv.size() >= 2) res.hysteresis_area = hysteresis_area(res.iv);
  res.final_state = state;
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

std::string summary_text(const ScenarioConfig& config, const ScenarioResult& res) {
  std::ostringstream os;
  os << "scenario = " << to_string(config.kind) << "\n"
     << "status = " << (res.completed ? "completed" : "step_failure") << "\n";
  if (!res.failure.empty()) os << "failure = " << res.failure << "\n";
  os << "steps = " << res.steps << "\n"
     << "substeps = " << res.substeps << "\n"
     << "newton_failures = " << res.step_failures << "\n"
     << "scheme_quality_events = " << res.scheme_quality_events << "\n"
     << "final_time = " << g17(res.final_state.time) << "\n";
  for (const auto& m : res.monitors)
    os << "monitor " << m.name << " = " << (m.passed ? "pass" : "FAIL") << " : " << m.detail << "\n";
  if (res.hysteresis_area) os << "hysteresis_area = " << g17(*res.hysteresis_area) << "\n";
  os << "exit_code = " << res.exit_code << "\n";
  return os.str();
}

// Mean of each block of `factor` consecutive fine cells.
Field restrict_average(const Field& fine, std::size_t factor) {
  const auto coarse = static_cast<Eigen::Index>(static_cast<std::size_t>(fine.size()) / factor);
  Field out(coarse);
  for (Eigen::Index i = 0; i < coarse; ++i)
    out[i] = fine.segment(i * static_cast<Eigen::Index>(factor), static_cast<Eigen::Index>(factor)).mean();
  return out;
}

} // namespace

DiagnosticsRecord make_record(const DriftDiffusionSystem& system, const State& state, const ScenarioConfig& config,
                              int newton_iterations) {
  const Mesh& mesh = system.mesh();
  const TimeStepper stepper = build_stepper(config);
  DiagnosticsRecord r;
  r.time = state.time;
  r.energy = free_energy(system, state);
  r.dissipation = dissipation(system, state, stepper.flux);
  const Field* fields[] = {&state.n, &state.p, &state.d};
  for (std::size_t s = 0; s < 3; ++s) {
    r.mass[s] = cell_mass(mesh, *fields[s]);
    r.min[s] = fields[s]->minCoeff();
    r.max[s] = fields[s]->maxCoeff();
  }
  for (double q : config.lq) {
    std::array<double, 3> row{};
    for (std::size_t s = 0; s < 3; ++s) row[s] = lq_norm(mesh, *fields[s], q);
    r.lq.push_back(row);
  }
  r.grad_v_l3 = grad_lr_norm(mesh, state.v, 3.0);
  for (const auto& c : config.contacts) r.currents.push_back(terminal_current(system, state, c.segment, stepper.flux));
  r.newton_iterations = newton_iterations;
  return r;
}

std::vector<std::string> diagnostics_columns(const ScenarioConfig& config) {
  std::vector<std::string> cols{"time",     "energy",   "energy_n", "energy_p", "energy_d", "energy_electric",
                                "energy_cross", "dissipation", "mass_n", "mass_p", "mass_d", "min_n",
                                "max_n",    "min_p",    "max_p",    "min_d",    "max_d"};
  for (double q : config.lq)
    for (const char* s : {"n", "p", "d"}) cols.push_back("L" + q_label(q) + "_" + s);
  cols.push_back("grad_v_L3");
  for (const auto& c : config.contacts) cols.push_back("current_" + c.segment);
  cols.push_back("newton_iterations");
  return cols;
}

std::string format_record(const DiagnosticsRecord& r) {
  std::string line = g17(r.time);
  auto add = [&](double v) { line += "," + g17(v); };
  add(r.energy.total);
  add(r.energy.internal_n);
  add(r.energy.internal_p);
  add(r.energy.internal_d);
  add(r.energy.electric);
  add(r.energy.cross_term);
  add(r.dissipation);
  for (double m : r.mass) add(m);
  for (std::size_t s = 0; s < 3; ++s) {
    add(r.min[s]);
    add(r.max[s]);
  }
  for (const auto& row : r.lq)
    for (double v : row) add(v);
  add(r.grad_v_l3);
  for (double c : r.currents) add(c);
  line += "," + std::to_string(r.newton_iterations);
  return line;
}

ScenarioResult simulate(const ScenarioConfig& config) { return run_simulation(config).result; }

ScenarioResult run_scenario(const ScenarioConfig& config) {
  const std::filesystem::path dir(config.output);
  std::filesystem::create_directories(dir);
  DirectoryLock lock(dir);

  SimulationOutput out = run_simulation(config);
  const ScenarioResult& res = out.result;
  const Mesh mesh = build_mesh(config);

  std::string csv;
  const auto cols = diagnostics_columns(config);
  for (std::size_t i = 0; i < cols.size(); ++i) csv += (i ? "," : "") + cols[i];
  csv += "\n";
  for (const auto& r : res.records) csv += format_record(r) + "\n";
  write_text(dir / "diagnostics.csv", csv);

  for (const auto& s : out.snapshots) write_snapshot(dir / ("snapshot_" + s.label + ".csv"), mesh, s.state);
  if (!res.completed) write_snapshot(dir / "snapshot_last_good.csv", mesh, out.last_good);

  if (config.kind == ScenarioKind::sweep) {
    std::string iv = "time,multiplier,current_" + config.sweep.contact + "\n";
    for (const auto& p : res.iv) iv += g17(p.time) + "," + g17(p.multiplier) + "," + g17(p.current) + "\n";
    write_text(dir / "iv.csv", iv);
  }
  write_text(dir / "config.echo.ini", echo_config(config));
  write_text(dir / "summary.txt", summary_text(config, res));
  return res;
}

double hysteresis_area(const std::vector<IvPoint>& iv) {
  double area = 0.0;
  for (std::size_t i = 1; i < iv.size(); ++i)
    area += 0.5 * (iv[i].current + iv[i - 1].current) * (iv[i].multiplier - iv[i - 1].multiplier);
  return area;
}

void write_snapshot(const std::filesystem::path& path, const Mesh& mesh, const State& state) {
  std::string text = mesh.dim == 2 ? "x,y,n,p,d,v\n" : "x,n,p,d,v\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const auto i = static_cast<Eigen::Index>(c);
    text += g17(mesh.cells[c].center[0]);
    if (mesh.dim == 2) text += "," + g17(mesh.cells[c].center[1]);
    text += "," + g17(state.n[i]) + "," + g17(state.p[i]) + "," + g17(state.d[i]) + "," +
            (state.v.size() ? g17(state.v[i]) : std::string("nan")) + "\n";
  }
  write_text(path, text);
}

namespace {

double poisson_level_error(const ScenarioConfig& config, std::size_t factor) {
  const double pi = std::acos(-1.0);
  const double lam = config.model.lambda;
  const double lam2 = lam * lam;
  const std::string& ref = config.convergence.reference;
  std::vector<std::size_t> counts = config.mesh.cells;
  for (auto& n : counts) n *= factor;
  const Mesh mesh = build_uniform_mesh(config.mesh.dim, config.mesh.lengths, counts);
  const double lx = config.mesh.lengths[0];
  const double ly = config.mesh.dim == 2 ? config.mesh.lengths[1] : 1.0;

  BoundarySpec bc;
  Contact ground;
  bc.contacts["left"] = ground;
  if (ref != "poisson-mixed") bc.contacts["right"] = ground;

  auto exact = [&](double x, double y) {
    if (ref == "poisson-sin") return std::sin(pi * x / lx);
    if (ref == "poisson-mixed") return 0.5 * x * x - lx * x;
    return std::sin(pi * x / lx) * std::cos(pi * y / ly);
  };
  auto source = [&](double x, double y) {
    if (ref == "poisson-sin") return -lam2 * (pi / lx) * (pi / lx) * exact(x, y);
    if (ref == "poisson-mixed") return lam2;
    return -lam2 * pi * pi * (1.0 / (lx * lx) + 1.0 / (ly * ly)) * exact(x, y);
  };
  Field f(static_cast<Eigen::Index>(mesh.num_cells()));
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    f[static_cast<Eigen::Index>(c)] = source(mesh.cells[c].center[0], mesh.cells[c].center[1]);
  PoissonSolver solver(mesh, bc, lam, build_poisson_options(config));
  const Field v = solver.solve(f);
  double err = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double e = v[static_cast<Eigen::Index>(c)] - exact(mesh.cells[c].center[0], mesh.cells[c].center[1]);
    err += mesh.cells[c].volume * e * e;
  }
  return std::sqrt(err);
}

// Decoupled run to t_end on `cells` cells with time step dt; returns d.
Field porous_run(const ScenarioConfig& config, std::size_t cells, double dt, double* mass_drift) {
  ScenarioConfig c = config;
  c.mesh.cells = {cells};
  c.mesh.segments.clear();
  c.contacts.clear();
  c.gauge = true;
  c.model.drift = false;
  const Mesh mesh = build_mesh(c);
  ModelParams params = build_params(c, mesh);
  DriftDiffusionSystem system(mesh, build_boundary(c), params, build_poisson_options(c));
  State state = build_initial_state(c, mesh);
  system.update_potential(state);
  const double m0 = cell_mass(mesh, state.d);
  TimeStepper stepper = build_stepper(c);
  const double eps = 1e-12 * c.t_end;
  while (state.time < c.t_end - eps) {
    TimeStepper s = stepper;
    s.dt = std::min(dt, c.t_end - state.time);
    if (c.t_end - (state.time + s.dt) < eps) s.dt = c.t_end - state.time;
    state = advance_adaptive(system, s, state).state;
  }
  if (mass_drift) *mass_drift = std::max(*mass_drift, std::abs(cell_mass(mesh, state.d) - m0));
  return state.d;
}

} // namespace

ConvergenceTable convergence_study(const ScenarioConfig& config, int levels) {
  if (levels < 2) throw ParameterError("convergence study needs at least 2 levels");
  ConvergenceTable table;
  table.reference = config.convergence.reference;
  const bool porous = table.reference == "porous-medium";
  table.norm = porous ? "L1" : "L2";
  if (table.reference != "poisson-sin" && table.reference != "poisson-mixed" && table.reference != "poisson-2d" &&
      !porous)
    throw ConfigError("convergence.reference: unknown reference '" + table.reference + "'");

  const std::size_t base = config.mesh.cells[0];
  Field reference;
  std::size_t ref_cells = 0;
  if (porous) {
    if (config.mesh.dim != 1) throw ConfigError("porous-medium convergence runs in 1D");
    ref_cells = base * (std::size_t{1} << (levels - 1)) * static_cast<std::size_t>(config.convergence.reference_factor);
    const double dt_ref = config.stepper.dt * static_cast<double>(base) / static_cast<double>(ref_cells);
    reference = porous_run(config, ref_cells, dt_ref, &table.mass_drift);
  }
  for (int l = 0; l < levels; ++l) {
    const std::size_t factor = std::size_t{1} << l;
    ConvergenceLevel level;
    level.cells = base * factor;
    level.h = config.mesh.lengths[0] / static_cast<double>(level.cells);
    if (porous) {
      const double dt = config.stepper.dt / static_cast<double>(factor);
      const Field d = porous_run(config, level.cells, dt, &table.mass_drift);
      const Field r = restrict_average(reference, ref_cells / level.cells);
      level.error = level.h * (d - r).cwiseAbs().sum();
    } else {
      level.error = poisson_level_error(config, factor);
    }
    if (!table.levels.empty()) {
      const auto& prev = table.levels.back();
      level.ratio = prev.error / level.error;
      level.order = std::log(*level.ratio) / std::log(prev.h / level.h);
    }
    table.levels.push_back(level);
  }
  return table;
}

std::string format_convergence(const ConvergenceTable& t) {
  std::ostringstream os;
  os << "reference = " << t.reference << "\n";
  os << "cells,h,error_" << t.norm << ",ratio,order\n";
  for (const auto& l : t.levels)
    os << l.cells << "," << g17(l.h) << "," << g17(l.error) << "," << (l.ratio ? g17(*l.ratio) : "") << ","
       << (l.order ? g17(*l.order) : "") << "\n";
  if (t.reference == "porous-medium") os << "mass_drift = " << g17(t.mass_drift) << "\n";
  return os.str();
}

std::vector<ExponentRow> exponent_rows(const std::vector<double>& alphas) {
  std::vector<ExponentRow> rows;
  for (double a : alphas) {
    ExponentRow row;
    row.report = exponent_report(a);
    if (a > 1.2 && a < 1.5) row.moser_limit_plus_one = moser_sequence(a, 0).limit_plus_one;
    rows.push_back(row);
  }
  return rows;
}

std::string exponent_table(const std::vector<double>& alphas) {
  const auto rows = exponent_rows(alphas);
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-10s %-10s %-10s %-10s %-9s %-10s %-10s\n", "alpha", "theta", "theta_t",
                "grad_exp", "beta", "a>6/5", "a>a*", "moser+1");
  os << buf;
  for (const auto& r : rows) {
    const auto& e = r.report;
    const std::string tt = e.theta_tilde ? q_label(*e.theta_tilde) : "-";
    const std::string mo = r.moser_limit_plus_one ? q_label(*r.moser_limit_plus_one) : "-";
    std::snprintf(buf, sizeof buf, "%-10.6g %-10.6g %-10s %-10.6g %-10.6g %-9s %-10s %-10s\n", e.alpha, e.theta,
                  tt.c_str(), e.gradient_exponent, e.beta_dual, e.passes_6_5 ? "yes" : "no",
                  e.passes_alpha_star ? "yes" : "no", mo.c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "alpha* = %.17g\n", alpha_star());
  os << buf;
  return os.str();
}

} // namespace memdd::harness
