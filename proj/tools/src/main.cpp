#include <CLI11.hpp>

#include <iostream>

#include "memdd/errors.hpp"
#include "memdd/harness/config.hpp"
#include "memdd/harness/scenario.hpp"

using namespace memdd;
using namespace memdd::harness;

namespace {

double parse_alpha(const std::string& text) {
  // Reuse the config number syntax so fractions like 5/3 work here too.
  const auto profile = parse_profile(text);
  if (profile.kind != "const") throw ConfigError("alpha: expected a number, got '" + text + "'");
  return profile.args[0];
}

int run_verb(const std::string& path, const std::string& output) {
  ScenarioConfig cfg = load_config(path);
  if (!output.empty()) cfg.output = output;
  if (cfg.kind == ScenarioKind::convergence) {
    const auto table = convergence_study(cfg, cfg.convergence.levels);
    std::cout << format_convergence(table);
    return exit_ok;
  }
  const auto res = run_scenario(cfg);
  for (const auto& m : res.monitors)
    std::cout << "monitor " << m.name << ": " << (m.passed ? "pass" : "FAIL") << " (" << m.detail << ")\n";
  if (!res.completed) std::cerr << "error: " << res.failure << "\n";
  if (res.hysteresis_area) std::cout << "hysteresis area: " << *res.hysteresis_area << "\n";
  std::cout << "wrote " << cfg.output << " (" << res.steps << " steps)\n";
  return res.exit_code;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-species degenerate drift-diffusion simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output;
  auto* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("config", config_path, "Scenario config (INI)")->required();
  run->add_option("--output", output, "Override scenario.output");

  auto* check = app.add_subcommand("check", "Validate a config and print it with defaults filled");
  check->add_option("config", config_path, "Scenario config (INI)")->required();

  int levels = 0;
  auto* converge = app.add_subcommand("converge", "Mesh refinement study");
  converge->add_option("config", config_path, "Scenario config (INI)")->required();
  converge->add_option("--levels", levels, "Number of mesh levels")->required();

  std::vector<std::string> alphas;
  auto* exps = app.add_subcommand("exponents", "Table of integrability exponents");
  exps->add_option("--alpha", alphas, "Comma-separated exponents, e.g. 1.25,5/3")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config_error;
  }

  try {
    if (*run) return run_verb(config_path, output);
    if (*check) {
      std::cout << echo_config(load_config(config_path));
      return exit_ok;
    }
    if (*converge) {
      ScenarioConfig cfg = load_config(config_path);
      std::cout << format_convergence(convergence_study(cfg, levels));
      return exit_ok;
    }
    if (*exps) {
      std::vector<double> values;
      for (const auto& a : alphas) values.push_back(parse_alpha(a));
      std::cout << exponent_table(values);
      return exit_ok;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return exit_config_error;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return exit_numerical_failure;
  }
  return exit_ok;
}
