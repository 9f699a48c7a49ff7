#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memdd/model.hpp"
#include "memdd/transport.hpp"

namespace memdd::harness {

enum class ScenarioKind { relax, sweep, convergence, insulated_energy_test };

std::string to_string(ScenarioKind kind);

/// Initial or doping profile. Kinds and arguments:
///   const c | linear a b (a + b x) | cos base amp kx [ky] | sin base amp kx [ky]
///   | bump height cx [cy] radius (height * max(0, 1 - (r/radius)^2)) | table v0 v1 ...
struct ProfileSpec {
  std::string kind = "const";
  std::vector<double> args{0.0};

  bool operator==(const ProfileSpec&) const = default;
};

ProfileSpec parse_profile(const std::string& text);
std::string format_profile(const ProfileSpec& profile);
/// Per-cell values of a profile on the mesh.
Field sample_profile(const ProfileSpec& profile, const Mesh& mesh);

struct SegmentSpec {
  std::string name;
  std::string side;
  double from = -1e300;
  double to = 1e300;

  bool operator==(const SegmentSpec&) const = default;
};

struct ContactSpec {
  std::string segment;
  std::vector<double> n{1.0};
  std::vector<double> p{1.0};
  std::vector<double> v{0.0};

  bool operator==(const ContactSpec&) const = default;
};

struct MeshSpec {
  int dim = 1;
  std::vector<double> lengths{1.0};
  std::vector<std::size_t> cells{64};
  std::vector<SegmentSpec> segments;

  bool operator==(const MeshSpec&) const = default;
};

struct ModelSpec {
  double alpha_n = 5.0 / 3.0;
  double alpha_p = 5.0 / 3.0;
  double alpha_d = 5.0 / 3.0;
  double lambda = 1.0;
  ProfileSpec doping;
  std::optional<double> cutoff_k;
  bool drift = true;

  bool operator==(const ModelSpec&) const = default;
};

struct StepperSpec {
  double dt = 1e-3;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  int max_damping_halvings = 30;
  double dt_floor = 1e-10;
  std::string mobility = "arithmetic";
  std::optional<double> floor_epsilon;
  std::string linear_solver = "direct";

  bool operator==(const StepperSpec&) const = default;
};

struct Breakpoint {
  double time = 0.0;
  double multiplier = 0.0;

  bool operator==(const Breakpoint&) const = default;
};

struct SweepSpec {
  std::vector<Breakpoint> schedule;
  std::string contact; // segment whose current forms the I-V record

  bool operator==(const SweepSpec&) const = default;
};

struct ConvergenceSpec {
  /// poisson-sin | poisson-mixed | poisson-2d | porous-medium
  std::string reference = "poisson-sin";
  int levels = 4;
  int reference_factor = 4;

  bool operator==(const ConvergenceSpec&) const = default;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::relax;
  std::string output;
  double t_end = 0.1;
  int record_every = 1;
  std::vector<double> snapshot_times;
  std::vector<double> lq{2.0, 4.0, 8.0, 16.0};
  std::vector<std::string> monitors;
  double energy_tolerance = 1e-10;
  double mass_tolerance = 1e-12;
  double negativity_tolerance = 1e-12;

  MeshSpec mesh;
  ModelSpec model;
  bool gauge = false;
  double v_multiplier = 1.0;
  std::vector<ContactSpec> contacts;
  ProfileSpec initial_n{"const", {1.0}};
  ProfileSpec initial_p{"const", {1.0}};
  ProfileSpec initial_d{"const", {0.0}};
  StepperSpec stepper;
  SweepSpec sweep;
  ConvergenceSpec convergence;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Reads and validates an INI config. Parse errors carry the line number;
/// validation errors name the offending key. Throws ConfigError.
ScenarioConfig load_config(const std::filesystem::path& path);
ScenarioConfig parse_config(const std::string& text, const std::string& source_name = "<string>");

/// Full config with every default made explicit; parse_config(echo_config(c)) == c.
std::string echo_config(const ScenarioConfig& config);

/// Throws ConfigError naming the key when a field is out of range.
void validate_config(const ScenarioConfig& config);

Mesh build_mesh(const ScenarioConfig& config);
ModelParams build_params(const ScenarioConfig& config, const Mesh& mesh);
BoundarySpec build_boundary(const ScenarioConfig& config);
TimeStepper build_stepper(const ScenarioConfig& config);
PoissonOptions build_poisson_options(const ScenarioConfig& config);
State build_initial_state(const ScenarioConfig& config, const Mesh& mesh);

/// Piecewise-linear V_D multiplier at time t; constant outside the schedule.
double schedule_multiplier(const std::vector<Breakpoint>& schedule, double t);

} // namespace memdd::harness
