#pragma once

#include <filesystem>
#include <ostream>
#include <span>

#include "roundabout/engine.hpp"
#include "roundabout/metrics.hpp"

namespace roundabout {

// CSV writers. Numbers use fixed precision so identical runs give identical
// bytes; missing optionals are written as empty fields.

void write_trajectories(std::ostream& os, const RunLog& log);
void write_events(std::ostream& os, const RunLog& log);
void write_vehicles(std::ostream& os, const RunLog& log, const RoundaboutGeometry& geom,
                    const FuelModelCoefficients& fuel);
void write_queue_events(std::ostream& os, const RunLog& log);

/// With `with_run_columns` each row is prefixed by mpr and seed, for the
/// sweep-level time series.
void write_moe(std::ostream& os, std::span<const MOERecord> moe, bool with_run_columns,
               double mpr = 0.0, std::uint64_t seed = 0, bool header = true);
void write_summary(std::ostream& os, std::span<const SummaryRow> rows);

/// trajectories.csv, events.csv, vehicles.csv, queue.csv and moe.csv.
void write_run(const std::filesystem::path& dir, const RunLog& log, const RoundaboutGeometry& geom,
               const FuelModelCoefficients& fuel);

}  // namespace roundabout
