#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "roundabout/metrics.hpp"
#include "roundabout/scenario.hpp"

namespace roundabout {

struct SweepOptions {
  /// Empty means no files are written.
  std::optional<std::filesystem::path> out;
  int jobs = 1;
};

struct RunOutcome {
  double mpr = 0.0;
  std::uint64_t seed = 0;
  RunTotals totals;
  RunCounters counters;
  std::vector<MOERecord> moe;
  /// Invariant violations found in the run; empty when clean.
  std::vector<std::string> violations;
};

struct SweepResult {
  std::vector<RunOutcome> runs;  // mpr-major, in sweep order
  /// One row per mpr when the sweep contains mpr 0, empty otherwise.
  std::vector<SummaryRow> summary;

  bool clean() const;
};

/// "mpr_<percent>/seed_<seed>".
std::filesystem::path run_directory(double mpr, std::uint64_t seed);

/// Checks a finished run: lateral conflicts at full penetration and vehicle
/// conservation. Returns one message per violated invariant.
std::vector<std::string> check_invariants(const RunLog& log);

/// Runs every (mpr, seed) pair of the scenario, up to `jobs` at a time.
/// Per-run CSVs go to out/mpr_<pct>/seed_<n>/, followed by summary.csv and
/// moe_timeseries.csv once all runs are done.
SweepResult run_sweep(const Scenario& scenario, const SweepOptions& options);

/// Improvement table for the terminal.
std::string format_summary(const SweepResult& result);

}  // namespace roundabout
