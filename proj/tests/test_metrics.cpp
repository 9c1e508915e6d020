#include "roundabout/metrics.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace roundabout {
namespace {

// Fuel polynomial spelled out term by term.
double fuel_reference(double v, double u) {
  const double cruise = 0.1569 + 2.450e-2 * v - 7.415e-4 * v * v + 5.975e-5 * v * v * v;
  const double accel = u > 0 ? u * (0.07224 + 9.681e-2 * v + 1.075e-3 * v * v) : 0.0;
  return std::max(0.0, cruise + accel);
}

TEST(FuelRate, Examples) {
  const FuelModelCoefficients k;
  EXPECT_NEAR(fuel_rate(8.9, 0.0, k), 0.35833768275, 1e-10);
  EXPECT_NEAR(fuel_rate(10.0, 1.0, k), 1.53534, 1e-10);
  EXPECT_NEAR(fuel_rate(10.0, -2.0, k), 0.3875, 1e-10);
  EXPECT_NEAR(fuel_rate(0.0, 0.0, k), 0.1569, 1e-15);
}

TEST(FuelRate, MatchesReferenceAndIgnoresBraking) {
  const FuelModelCoefficients k;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> v(0.0, 15.6), u(-4.5, 4.5);
  for (int i = 0; i < 5000; ++i) {
    const double vi = v(rng), ui = u(rng);
    ASSERT_NEAR(fuel_rate(vi, ui, k), fuel_reference(vi, ui), 1e-12);
    ASSERT_GE(fuel_rate(vi, ui, k), 0.0);
    if (ui < 0) ASSERT_EQ(fuel_rate(vi, ui, k), fuel_rate(vi, 0.0, k));
  }
}

TEST(TravelTime, CompleteAndIncomplete) {
  const RoundaboutGeometry g;
  VehicleRecord r;
  r.t_spawn = 10.0;
  EXPECT_THROW(vehicle_travel_time(r), Incomplete);
  r.t_exit_network = 50.0;
  EXPECT_DOUBLE_EQ(vehicle_travel_time(r), 40.0);
  EXPECT_NEAR(vehicle_delay(r, g), 40.0 - 28.2713915298185, 1e-9);
  r.t_exit_network = 30.0;
  EXPECT_DOUBLE_EQ(vehicle_delay(r, g), 0.0);
}

TEST(Density, CountsApproachLinkOnly) {
  const RoundaboutGeometry g;
  std::vector<TrajectorySample> snap;
  for (int i = 0; i < 10; ++i) {
    TrajectorySample s;
    s.approach = Approach::Eastbound;
    s.s = 30.0 * i;
    snap.push_back(s);
  }
  TrajectorySample past;
  past.approach = Approach::Eastbound;
  past.s = 320.0;
  snap.push_back(past);
  TrajectorySample other;
  other.approach = Approach::Westbound;
  other.s = 5.0;
  snap.push_back(other);
  EXPECT_DOUBLE_EQ(density(snap, Approach::Eastbound, g), 31.25);
  EXPECT_DOUBLE_EQ(density(snap, Approach::Westbound, g), 3.125);
}

TEST(Improvement, Examples) {
  EXPECT_DOUBLE_EQ(improvement(100.0, 80.0), 20.0);
  EXPECT_DOUBLE_EQ(improvement(100.0, 120.0), -20.0);
  EXPECT_DOUBLE_EQ(improvement(0.0, 5.0), 0.0);
}

RunTotals make_totals(std::uint64_t seed, double tt, double fuel, int dispatched = 400) {
  RunTotals t;
  t.seed = seed;
  t.dispatched = dispatched;
  t.travel_time = tt;
  t.delay = tt / 2;
  t.fuel = fuel;
  return t;
}

TEST(Summarize, AveragesPerSeedImprovements) {
  const RunTotals base[] = {make_totals(1, 100, 50), make_totals(2, 200, 100)};
  RunTotals scen[] = {make_totals(1, 80, 45), make_totals(2, 100, 100)};
  for (auto& s : scen) s.mpr = 0.5;
  const SummaryRow row = summarize(base, scen);
  EXPECT_EQ(row.runs, 2);
  EXPECT_DOUBLE_EQ(row.mpr, 0.5);
  // Mean of per-seed improvements, not improvement of means.
  EXPECT_DOUBLE_EQ(row.travel_time_improvement, 35.0);
  EXPECT_DOUBLE_EQ(row.fuel_improvement, 5.0);
  EXPECT_DOUBLE_EQ(row.baseline_travel_time, 150.0);
  EXPECT_DOUBLE_EQ(row.travel_time, 90.0);
}

TEST(Summarize, RejectsMismatches) {
  const RunTotals base[] = {make_totals(1, 100, 50), make_totals(2, 200, 100)};
  const RunTotals one[] = {make_totals(1, 80, 45)};
  EXPECT_THROW(summarize(base, one), SummaryError);
  const RunTotals swapped[] = {make_totals(2, 80, 45), make_totals(1, 100, 100)};
  EXPECT_THROW(summarize(base, swapped), SummaryError);
  const RunTotals fewer[] = {make_totals(1, 80, 45, 398), make_totals(2, 100, 100)};
  EXPECT_THROW(summarize(base, fewer), SummaryError);
  EXPECT_THROW(summarize(std::span<const RunTotals>{}, std::span<const RunTotals>{}), SummaryError);
}

// Hand-built log: one vehicle at constant speed, logged once a second.
RunLog constant_speed_log() {
  RunLog log;
  log.config.duration = 120.0;
  log.config.dispatch_window = 60.0;
  log.config.aggregate_every = 60.0;
  VehicleRecord r;
  r.id = 1;
  r.t_spawn = 0.0;
  r.t_exit_network = 43.2;
  log.vehicles.push_back(r);
  for (int t = 0; t <= 43; ++t) {
    TrajectorySample s;
    s.t = t;
    s.id = 1;
    s.s = 10.0 * t;
    s.v = 10.0;
    log.trajectories.push_back(s);
  }
  log.counters.spawned = 1;
  log.counters.exited = 1;
  return log;
}

TEST(Aggregate, ConstantSpeedVehicle) {
  const RoundaboutGeometry g;
  const FuelModelCoefficients k;
  const RunLog log = constant_speed_log();
  const auto moe = aggregate(log, g, k);
  ASSERT_EQ(moe.size(), 4u);
  EXPECT_EQ(moe[0].approach, Approach::Eastbound);
  EXPECT_EQ(moe[1].approach, Approach::Westbound);
  EXPECT_EQ(moe[0].exits, 1);
  EXPECT_DOUBLE_EQ(moe[0].mean_travel_time, 43.2);
  EXPECT_TRUE(std::isnan(moe[2].mean_travel_time));
  EXPECT_EQ(moe[2].cumulative_exits, 1);
  EXPECT_NEAR(moe[0].fuel, 43.0 * fuel_reference(10.0, 0.0), 1e-9);
  EXPECT_DOUBLE_EQ(moe[2].cumulative_fuel, moe[0].fuel);
  // 32 of the 44 samples lie on the 320 m approach link, 1 vehicle each.
  EXPECT_NEAR(moe[0].density, 32.0 / 44.0 * 1000.0 / 320.0, 1e-9);

  const RunTotals tot = totals(log, g, k);
  EXPECT_EQ(tot.dispatched, 1);
  EXPECT_EQ(tot.exited_by_window_end, 1);
  EXPECT_DOUBLE_EQ(tot.travel_time, 43.2);
  EXPECT_NEAR(tot.fuel, moe[0].fuel, 1e-12);
}

TEST(Totals, CensorsUnfinishedVehicles) {
  const RoundaboutGeometry g;
  RunLog log = constant_speed_log();
  log.vehicles[0].t_exit_network.reset();
  log.unspawned.push_back({100.0, VehicleClass::Human, Approach::Westbound});
  log.counters.exited = 0;
  log.counters.in_network = 1;
  log.counters.unspawned = 1;
  const RunTotals tot = totals(log, g, FuelModelCoefficients{});
  EXPECT_EQ(tot.dispatched, 2);
  EXPECT_EQ(tot.residual, 2);
  EXPECT_DOUBLE_EQ(tot.travel_time, 120.0 + 20.0);
  EXPECT_NEAR(tot.delay, 120.0 - 28.2713915298185, 1e-9);
}

}  // namespace
}  // namespace roundabout
