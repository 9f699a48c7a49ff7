#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memdd/diagnostics.hpp"
#include "memdd/exponents.hpp"
#include "memdd/harness/config.hpp"

namespace memdd::harness {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numerical_failure = 3;

/// One row of diagnostics.csv.
struct DiagnosticsRecord {
  double time = 0.0;
  EnergyBreakdown energy;
  double dissipation = 0.0;
  std::array<double, 3> mass{};
  std::array<double, 3> min{};
  std::array<double, 3> max{};
  std::vector<std::array<double, 3>> lq; // per configured q, species n, p, d
  double grad_v_l3 = 0.0;
  std::vector<double> currents; // per contact, config order
  int newton_iterations = 0;
};

DiagnosticsRecord make_record(const DriftDiffusionSystem& system, const State& state, const ScenarioConfig& config,
                              int newton_iterations);

std::vector<std::string> diagnostics_columns(const ScenarioConfig& config);
std::string format_record(const DiagnosticsRecord& record);

struct MonitorVerdict {
  std::string name;
  bool passed = true;
  double worst = 0.0; // largest violation seen
  std::string detail;
};

struct IvPoint {
  double time = 0.0;
  double multiplier = 0.0;
  double current = 0.0;
};

struct ScenarioResult {
  int exit_code = exit_ok;
  bool completed = false;
  std::string failure;
  int steps = 0;
  int substeps = 0;
  int step_failures = 0;
  int scheme_quality_events = 0; // recorded states with a density below -1e-8
  std::vector<DiagnosticsRecord> records;
  std::vector<MonitorVerdict> monitors;
  std::vector<IvPoint> iv;
  std::optional<double> hysteresis_area;
  State final_state;
};

/// Time-marches the scenario and writes diagnostics.csv, snapshot_*.csv,
/// iv.csv (sweeps) and summary.txt into config.output. A lock file rejects a
/// second job on the same directory. On step failure the last accepted state
/// is written to snapshot_last_good.csv and exit_code is exit_numerical_failure.
ScenarioResult run_scenario(const ScenarioConfig& config);

/// Same run without touching the file system.
ScenarioResult simulate(const ScenarioConfig& config);

/// Signed trapezoid area enclosed by the (multiplier, current) polyline.
double hysteresis_area(const std::vector<IvPoint>& iv);

struct ConvergenceLevel {
  std::size_t cells = 0; // along x
  double h = 0.0;
  double error = 0.0;
  std::optional<double> ratio; // previous error / this error
  std::optional<double> order;
};

struct ConvergenceTable {
  std::string reference;
  std::string norm; // "L2" or "L1"
  std::vector<ConvergenceLevel> levels;
  double mass_drift = 0.0; // porous-medium only: worst |mass change| over levels
};

/// Mesh refinement study. Poisson references are analytic; the porous-medium
/// reference is a run reference_factor times finer than the finest level,
/// with dt refined alongside h. Throws ParameterError for levels < 2.
ConvergenceTable convergence_study(const ScenarioConfig& config, int levels);

std::string format_convergence(const ConvergenceTable& table);

struct ExponentRow {
  ExponentReport report;
  std::optional<double> moser_limit_plus_one; // alpha in (6/5, 3/2) only
};

std::vector<ExponentRow> exponent_rows(const std::vector<double>& alphas);
std::string exponent_table(const std::vector<double>& alphas);

/// Cell-centre coordinates and fields, one row per cell.
void write_snapshot(const std::filesystem::path& path, const Mesh& mesh, const State& state);

} // namespace memdd::harness
