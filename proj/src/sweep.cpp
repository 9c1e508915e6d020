#include "roundabout/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "roundabout/run_io.hpp"

namespace roundabout {

bool SweepResult::clean() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.violations.empty(); });
}

std::filesystem::path run_directory(double mpr, std::uint64_t seed) {
  return std::filesystem::path(fmt::format("mpr_{}", std::llround(mpr * 100.0))) /
         fmt::format("seed_{}", seed);
}

std::vector<std::string> check_invariants(const RunLog& log) {
  std::vector<std::string> out;
  const RunCounters& c = log.counters;
  if (log.config.mpr == 1.0 && c.lateral_conflicts > 0) {
    out.push_back(fmt::format("lateral conflict at full penetration ({} events)", c.lateral_conflicts));
  }
  if (c.spawned != c.exited + c.in_network) {
    out.push_back(fmt::format("conservation: spawned {} != exited {} + in network {}", c.spawned,
                              c.exited, c.in_network));
  }
  if (c.spawned + c.unspawned != log.config.total_vehicles) {
    out.push_back(fmt::format("conservation: spawned {} + unspawned {} != dispatched {}", c.spawned,
                              c.unspawned, log.config.total_vehicles));
  }
  return out;
}

SweepResult run_sweep(const Scenario& scenario, const SweepOptions& options) {
  scenario.validate();
  std::vector<std::pair<double, std::uint64_t>> jobs;
  for (double m : scenario.sweep.mpr) {
    for (auto seed : scenario.sweep.seeds) jobs.emplace_back(m, seed);
  }

  SweepResult result;
  result.runs.resize(jobs.size());
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto [mpr, seed] = jobs[i];
        const RunLog log = run(scenario.run_config(mpr, seed), scenario.model);
        RunOutcome& r = result.runs[i];
        r.mpr = mpr;
        r.seed = seed;
        r.totals = totals(log, scenario.model.geometry, scenario.fuel);
        r.counters = log.counters;
        r.moe = aggregate(log, scenario.model.geometry, scenario.fuel);
        r.violations = check_invariants(log);
        if (options.out) {
          write_run(*options.out / run_directory(mpr, seed), log, scenario.model.geometry,
                    scenario.fuel);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const int n = std::clamp(options.jobs, 1, static_cast<int>(jobs.size()));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  const size_t per_mpr = scenario.sweep.seeds.size();
  const auto baseline =
      std::find(scenario.sweep.mpr.begin(), scenario.sweep.mpr.end(), 0.0) - scenario.sweep.mpr.begin();
  if (static_cast<size_t>(baseline) < scenario.sweep.mpr.size()) {
    std::vector<RunTotals> base;
    for (size_t s = 0; s < per_mpr; ++s) base.push_back(result.runs[baseline * per_mpr + s].totals);
    for (size_t m = 0; m < scenario.sweep.mpr.size(); ++m) {
      std::vector<RunTotals> scen;
      for (size_t s = 0; s < per_mpr; ++s) scen.push_back(result.runs[m * per_mpr + s].totals);
      result.summary.push_back(summarize(base, scen));
    }
  }

  if (options.out) {
    std::ofstream summary(*options.out / "summary.csv", std::ios::binary);
    write_summary(summary, result.summary);
    std::ofstream series(*options.out / "moe_timeseries.csv", std::ios::binary);
    bool header = true;
    for (const RunOutcome& r : result.runs) {
      write_moe(series, r.moe, true, r.mpr, r.seed, header);
      header = false;
    }
  }
  return result;
}

std::string format_summary(const SweepResult& result) {
  std::string out = fmt::format("{:>6} {:>5} {:>10} {:>10} {:>10} {:>12} {:>9}\n", "MPR%", "runs",
                                "travel%", "delay%", "fuel%", "delay [s]", "residual");
  if (result.summary.empty()) {
    for (const RunOutcome& r : result.runs) {
      out += fmt::format("{:>6.0f} seed {:<4} travel {:.1f} s  delay {:.1f} s  fuel {:.1f} mL  residual {}\n",
                         r.mpr * 100.0, r.seed, r.totals.travel_time, r.totals.delay, r.totals.fuel,
                         r.totals.residual);
    }
    return out;
  }
  for (const SummaryRow& r : result.summary) {
    out += fmt::format("{:>6.0f} {:>5} {:>10.2f} {:>10.2f} {:>10.2f} {:>12.1f} {:>9.1f}\n",
                       r.mpr * 100.0, r.runs, r.travel_time_improvement, r.delay_improvement,
                       r.fuel_improvement, r.delay, r.residual);
  }
  return out;
}

}  // namespace roundabout
