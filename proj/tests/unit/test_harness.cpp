#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "memdd/errors.hpp"
#include "memdd/harness/config.hpp"
#include "memdd/harness/scenario.hpp"

using namespace memdd;
using namespace memdd::harness;
namespace fs = std::filesystem;

namespace {

const char* equilibrium_ini = R"([scenario]
kind = relax
t_end = 0.02
[mesh]
dim = 1
lengths = 1
cells = 32
[model]
doping = 0.25
[contact.left]
n = 0.75
p = 1
v = 0.1
[contact.right]
n = 0.75
p = 1
v = 0.1
[initial]
n = 0.75
p = 1
d = 0
[stepper]
dt = 0.005
)";

const char* insulated_ini = R"([scenario]
kind = insulated-energy-test
t_end = 0.04
[mesh]
cells = 32
[model]
doping = 1
[initial]
n = cos 1 0.3 1
p = cos 1 -0.2 2
d = cos 1 0.5 1
[stepper]
dt = 0.002
)";

const char* sweep_ini = R"([scenario]
kind = sweep
t_end = 2
record_every = 5
[mesh]
cells = 32
[model]
lambda = 0.2
doping = 0.5
[contact.left]
n = 1
p = 0.5
v = 0
[contact.right]
n = 1
p = 0.5
v = 1
[initial]
n = 1
p = 0.5
d = bump 1 0.25 0.2
[stepper]
dt = 0.02
mobility = upwind
[sweep]
schedule = 0:0, 0.5:3, 1:0, 1.5:-3, 2:0
)";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("memdd_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("defaults and profile syntax") {
  const auto c = parse_config("[scenario]\nkind = relax\n", "mem.ini");
  CHECK(c.output == "out/mem");
  CHECK(c.mesh.cells == std::vector<std::size_t>{64});
  CHECK(c.stepper.dt == 1e-3);
  CHECK_FALSE(c.model.cutoff_k.has_value());
  CHECK(c.gauge);
  CHECK(parse_profile("0.5") == ProfileSpec{"const", {0.5}});
  CHECK(parse_profile("linear 1 2").args == std::vector<double>{1.0, 2.0});
  CHECK(parse_config("[model]\nalpha_d = 5/3\n").model.alpha_d == doctest::Approx(5.0 / 3.0).epsilon(1e-16));
  CHECK(parse_config("[model]\ncutoff_k = 16\n").model.cutoff_k == 16.0);
  CHECK_THROWS_AS(parse_profile("wave 1"), ConfigError);
}

TEST_CASE("invalid configs name the offending key") {
  auto message = [](const std::string& text) {
    try {
      validate_config(parse_config(text, "bad.ini"));
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("[model]\nalpha_n = 1\n").find("alpha_n must exceed 1") != std::string::npos);
  CHECK(message("[model]\nalpha_q = 2\n").find("unknown key 'alpha_q' in section [model]") != std::string::npos);
  CHECK(message("[modle]\nalpha_n = 2\n").find("modle") != std::string::npos);
  CHECK(message("[stepper]\ndt = -1\n").find("dt") != std::string::npos);
  CHECK(message("[model]\nlambda = x\n").find("lambda") != std::string::npos);
  const auto parse = message("[scenario]\nkind = relax\n[mesh\ncells = 3\n");
  CHECK(parse.find("bad.ini:3") != std::string::npos);
}

TEST_CASE("config echo round-trips") {
  for (const char* text : {equilibrium_ini, insulated_ini, sweep_ini}) {
    const auto a = parse_config(text, "a.ini");
    const auto b = parse_config(echo_config(a), "b.ini");
    CHECK(a == b);
  }
  const fs::path dir = scratch("configs");
  for (const auto& e : fs::directory_iterator(MEMDD_CONFIG_DIR)) {
    INFO(e.path().string());
    const auto a = load_config(e.path());
    CHECK_NOTHROW(validate_config(a));
    CHECK(parse_config(echo_config(a)) == a);
  }
}

TEST_CASE("equilibrium scenario keeps its energy and carries no current") {
  auto c = parse_config(equilibrium_ini);
  const auto r = simulate(c);
  REQUIRE(r.exit_code == exit_ok);
  REQUIRE(r.records.size() >= 2);
  for (const auto& rec : r.records) {
    CHECK(std::abs(rec.energy.total - r.records.front().energy.total) < 1e-10);
    for (double i : rec.currents) CHECK(std::abs(i) < 1e-10);
  }
  for (const auto& m : r.monitors) CHECK(m.passed);
}

TEST_CASE("insulated scenario: energy is nonincreasing") {
  const auto r = simulate(parse_config(insulated_ini));
  REQUIRE(r.exit_code == exit_ok);
  for (std::size_t i = 1; i < r.records.size(); ++i)
    CHECK(r.records[i].energy.total <= r.records[i - 1].energy.total + 1e-10);
  for (const auto& m : r.monitors) CHECK(m.passed);
}

TEST_CASE("voltage sweep encloses a loop") {
  const auto r = simulate(parse_config(sweep_ini));
  REQUIRE(r.exit_code == exit_ok);
  REQUIRE(r.hysteresis_area.has_value());
  CHECK(std::abs(*r.hysteresis_area) > 1e-3);
  CHECK(r.iv.size() == 101);
  CHECK(r.iv.front().time == 0.0);
  CHECK(r.iv.back().multiplier == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("output files are deterministic and guarded by a lock") {
  auto c = parse_config(insulated_ini);
  c.output = scratch("det_a").string();
  REQUIRE(run_scenario(c).exit_code == exit_ok);
  const std::string first = slurp(fs::path(c.output) / "diagnostics.csv");
  CHECK(first.rfind("time,energy,", 0) == 0);
  CHECK(fs::exists(fs::path(c.output) / "config.echo.ini"));
  CHECK(fs::exists(fs::path(c.output) / "summary.txt"));
  CHECK_FALSE(fs::exists(fs::path(c.output) / "run.lock"));
  c.output = scratch("det_b").string();
  REQUIRE(run_scenario(c).exit_code == exit_ok);
  CHECK(slurp(fs::path(c.output) / "diagnostics.csv") == first);

  std::ofstream(fs::path(c.output) / "run.lock") << "busy";
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
}

TEST_CASE("a failing step exits with the numerical code and keeps the last good state") {
  auto c = parse_config(insulated_ini);
  c.output = scratch("fail").string();
  c.stepper.newton_max_iter = 1;
  c.stepper.dt_floor = c.stepper.dt;
  const auto r = run_scenario(c);
  CHECK(r.exit_code == exit_numerical_failure);
  CHECK_FALSE(r.completed);
  CHECK_FALSE(r.failure.empty());
  CHECK(fs::exists(fs::path(c.output) / "snapshot_last_good.csv"));
  CHECK(fs::exists(fs::path(c.output) / "diagnostics.csv"));
}

TEST_CASE("convergence studies") {
  auto c = parse_config("[scenario]\nkind = convergence\n[mesh]\ncells = 16\n[convergence]\nreference = poisson-sin\n");
  CHECK_THROWS_AS(convergence_study(c, 1), ParameterError);
  const auto t = convergence_study(c, 4);
  REQUIRE(t.levels.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) CHECK(*t.levels[i].order == doctest::Approx(2.0).epsilon(0.05));
  CHECK(format_convergence(t).find("poisson-sin") != std::string::npos);

  auto pm = load_config(fs::path(MEMDD_CONFIG_DIR) / "porous_convergence.ini");
  const auto p = convergence_study(pm, 3);
  REQUIRE(p.levels.size() == 3);
  for (std::size_t i = 1; i < 3; ++i) CHECK(*p.levels[i].order >= 1.0);
  CHECK(p.mass_drift < 1e-12);
}

TEST_CASE("exponent rows") {
  const auto rows = exponent_rows({5.0 / 3.0, 1.2, 1.25});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].report.gradient_exponent == doctest::Approx(0.125));
  CHECK_FALSE(rows[0].moser_limit_plus_one.has_value());
  CHECK_FALSE(rows[1].report.passes_6_5);
  CHECK_FALSE(rows[1].moser_limit_plus_one.has_value());
  CHECK(rows[2].report.passes_6_5);
  REQUIRE(rows[2].moser_limit_plus_one.has_value());
  CHECK(*rows[2].moser_limit_plus_one > 1.5);
  const auto table = exponent_table({1.3});
  CHECK(table.find("3.4875") != std::string::npos);
  CHECK_THROWS_AS(exponent_rows({0.9}), ParameterError);
}

TEST_CASE("schedule interpolation") {
  const std::vector<Breakpoint> s{{0.0, 0.0}, {1.0, 2.0}, {2.0, -2.0}};
  CHECK(schedule_multiplier(s, 0.5) == doctest::Approx(1.0));
  CHECK(schedule_multiplier(s, 1.5) == doctest::Approx(0.0));
  CHECK(schedule_multiplier(s, 3.0) == doctest::Approx(-2.0));
}

}
