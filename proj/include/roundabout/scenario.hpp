#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "roundabout/engine.hpp"
#include "roundabout/metrics.hpp"

namespace roundabout {

struct SweepSpec {
  std::vector<double> mpr{0.0, 0.2, 0.5, 0.8, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void validate() const;
};

/// Everything a scenario file can set. sim.mpr and sim.seed are filled per
/// run from the sweep lists.
struct Scenario {
  ModelParams model;
  SimConfig sim;
  FuelModelCoefficients fuel;
  SweepSpec sweep;

  void validate() const;
  SimConfig run_config(double mpr, std::uint64_t seed) const;
};

/// Parses a YAML scenario. Sections: geometry, limits, safety, driver, sim,
/// control, fuel, sweep. Missing keys keep their defaults; unknown sections
/// or keys and malformed values throw ConfigError carrying the line number.
/// The result is validated.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Derived quantities for desk-checking a scenario.
std::string describe(const Scenario& s);

}  // namespace roundabout
