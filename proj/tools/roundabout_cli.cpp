#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "roundabout/errors.hpp"
#include "roundabout/scenario.hpp"
#include "roundabout/sweep.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kInvariantViolation = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace roundabout;

  CLI::App app{"Roundabout merging simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::vector<double> mpr;
  std::vector<std::uint64_t> seeds;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  auto* run_cmd = app.add_subcommand("run", "Run an MPR x seed sweep and write CSV outputs");
  run_cmd->add_option("scenario", scenario_path, "Scenario file (YAML)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory")->required();
  run_cmd->add_option("--mpr", mpr, "Penetration rates in [0, 1], comma separated")->delimiter(',');
  run_cmd->add_option("--seeds", seeds, "Seeds, comma separated")->delimiter(',');
  run_cmd->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "Check a scenario and print derived quantities");
  validate_cmd->add_option("scenario", scenario_path, "Scenario file (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
    if (!mpr.empty()) scenario.sweep.mpr = mpr;
    if (!seeds.empty()) scenario.sweep.seeds = seeds;
    scenario.validate();
  } catch (const ConfigError& e) {
    std::cerr << scenario_path << ": " << e.what() << '\n';
    return kConfigError;
  }

  if (*validate_cmd) {
    std::cout << describe(scenario);
    return 0;
  }

  SweepOptions options;
  options.out = out_dir;
  options.jobs = jobs;
  SweepResult result;
  try {
    result = run_sweep(scenario, options);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kInvariantViolation;
  }
  std::cout << format_summary(result);
  if (!result.clean()) {
    for (const RunOutcome& r : result.runs) {
      for (const std::string& v : r.violations) {
        std::cerr << "invariant violated in " << run_directory(r.mpr, r.seed).string() << ": " << v
                  << '\n';
      }
    }
    return kInvariantViolation;
  }
  return 0;
}
