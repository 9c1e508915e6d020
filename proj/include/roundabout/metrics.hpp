#pragma once

#include <span>
#include <vector>

#include "roundabout/engine.hpp"
#include "roundabout/geometry.hpp"

namespace roundabout {

/// Polynomial fuel metamodel in mL/s.
struct FuelModelCoefficients {
  double b0 = 0.1569;
  double b1 = 2.450e-2;
  double b2 = -7.415e-4;
  double b3 = 5.975e-5;
  double c0 = 0.07224;
  double c1 = 9.681e-2;
  double c2 = 1.075e-3;

  void validate() const;
};

/// (b0 + b1 v + b2 v^2 + b3 v^3) + max(u, 0) (c0 + c1 v + c2 v^2), floored at 0.
double fuel_rate(double v, double u, const FuelModelCoefficients& k);

/// t_exit_network - t_spawn. Throws Incomplete for a vehicle still in the network.
double vehicle_travel_time(const VehicleRecord& rec);

/// Travel time minus free-flow time, floored at 0.
double vehicle_delay(const VehicleRecord& rec, const RoundaboutGeometry& geom);

/// Vehicles per km on the approach link [0, approach_length).
double density(std::span<const TrajectorySample> snapshot, Approach approach,
               const RoundaboutGeometry& geom);

/// Fuel per vehicle (mL), trapezoid over the logged samples. Aligned with
/// log.vehicles.
std::vector<double> vehicle_fuel(const RunLog& log, const FuelModelCoefficients& k);

struct MOERecord {
  double window_start = 0.0;
  double window_end = 0.0;
  Approach approach = Approach::Eastbound;
  int exits = 0;                  // vehicles leaving the network in the window
  double mean_travel_time = 0.0;  // over those vehicles, NaN when none
  double density = 0.0;           // veh/km, mean over the window's samples
  int cumulative_exits = 0;
  double delay = 0.0;             // total delay of the window's exits
  double cumulative_delay = 0.0;
  double fuel = 0.0;              // mL burnt during the window
  double cumulative_fuel = 0.0;
};

/// One record per aggregation window per approach, eastbound first.
std::vector<MOERecord> aggregate(const RunLog& log, const RoundaboutGeometry& geom,
                                 const FuelModelCoefficients& k);

/// Network totals over every dispatched vehicle. Vehicles still in the
/// network at the end contribute their censored time duration - t_spawn;
/// vehicles that never got in contribute duration - scheduled arrival.
struct RunTotals {
  double mpr = 0.0;
  std::uint64_t seed = 0;
  int dispatched = 0;
  int residual = 0;  // in the network or still waiting to enter
  int exited_by_window_end = 0;  // cumulative exits at t = dispatch window
  double travel_time = 0.0;
  double delay = 0.0;
  double fuel = 0.0;
};

RunTotals totals(const RunLog& log, const RoundaboutGeometry& geom, const FuelModelCoefficients& k);

struct SummaryRow {
  double mpr = 0.0;
  int runs = 0;
  double travel_time_improvement = 0.0;  // percent, mean over seeds
  double delay_improvement = 0.0;
  double fuel_improvement = 0.0;
  double baseline_travel_time = 0.0;  // raw totals, mean over seeds
  double baseline_delay = 0.0;
  double baseline_fuel = 0.0;
  double travel_time = 0.0;
  double delay = 0.0;
  double fuel = 0.0;
  double residual = 0.0;
};

/// 100 (baseline - scenario) / baseline, or 0 when the baseline is 0.
double improvement(double baseline, double scenario);

/// Pairs baseline[i] with scenario[i] (same seed), computes per-seed
/// improvements and averages them. Throws SummaryError when the run counts,
/// seeds or dispatched vehicle counts differ.
SummaryRow summarize(std::span<const RunTotals> baseline, std::span<const RunTotals> scenario);

}  // namespace roundabout
