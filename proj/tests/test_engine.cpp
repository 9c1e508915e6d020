#include "roundabout/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <gtest/gtest.h>

namespace roundabout {
namespace {

SimConfig short_config(double mpr, std::uint64_t seed) {
  SimConfig c;
  c.duration = 300.0;
  c.dispatch_window = 180.0;
  c.total_vehicles = 80;
  c.mpr = mpr;
  c.seed = seed;
  return c;
}

RunLog run_to_end(Simulation& sim) {
  while (!sim.done()) sim.step();
  return sim.finish();
}

TEST(Arrivals, CountsAndMeanHeadway) {
  const SimConfig cfg;
  const auto arr = generate_arrivals(cfg);
  for (const auto* list : {&arr.eastbound, &arr.westbound}) {
    ASSERT_EQ(list->size(), 200u);
    EXPECT_GT(list->front().t, 0.0);
    EXPECT_LT(list->back().t, cfg.dispatch_window);
    for (size_t k = 1; k < list->size(); ++k) {
      ASSERT_GE((*list)[k].t - (*list)[k - 1].t, cfg.min_generation_headway - 1e-12);
    }
    const double mean = list->back().t / static_cast<double>(list->size());
    EXPECT_NEAR(mean, 4.5, 0.45);
  }
  for (const Arrival& a : arr.eastbound) EXPECT_EQ(a.approach, Approach::Eastbound);
  for (const Arrival& a : arr.westbound) EXPECT_EQ(a.approach, Approach::Westbound);
}

TEST(Arrivals, LabelsFollowPenetration) {
  SimConfig cfg;
  cfg.mpr = 0.0;
  for (const Arrival& a : generate_arrivals(cfg).eastbound) EXPECT_EQ(a.vclass, VehicleClass::Human);
  cfg.mpr = 1.0;
  for (const Arrival& a : generate_arrivals(cfg).westbound) EXPECT_EQ(a.vclass, VehicleClass::CAV);
}

TEST(Arrivals, HigherPenetrationRelabelsSuperset) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig lo, hi;
    lo.seed = hi.seed = seed;
    lo.mpr = 0.2;
    hi.mpr = 0.8;
    const auto a = generate_arrivals(lo), b = generate_arrivals(hi);
    for (size_t k = 0; k < a.eastbound.size(); ++k) {
      ASSERT_EQ(a.eastbound[k].t, b.eastbound[k].t);
      if (a.eastbound[k].vclass == VehicleClass::CAV) ASSERT_EQ(b.eastbound[k].vclass, VehicleClass::CAV);
      if (a.westbound[k].vclass == VehicleClass::CAV) ASSERT_EQ(b.westbound[k].vclass, VehicleClass::CAV);
    }
  }
}

TEST(Arrivals, RejectsImpossibleWindow) {
  SimConfig cfg;
  // 201 minimum headways of 4.49 s overrun the 900 s window.
  cfg.min_generation_headway = 4.49;
  EXPECT_THROW(generate_arrivals(cfg), ConfigError);
  cfg.min_generation_headway = 4.4;
  EXPECT_NO_THROW(generate_arrivals(cfg));
}

TEST(Integrate, ClampsAtZeroAndLimits) {
  const ActuationLimits lim;
  VehicleState s;
  s.v = 0.1;
  EXPECT_NEAR(integrate(s, -4.0, 0.05, lim), -2.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.v, 0.0);
  EXPECT_DOUBLE_EQ(s.pos.s, 0.0);

  s.v = 15.5;
  integrate(s, 4.0, 0.05, lim);
  EXPECT_DOUBLE_EQ(s.v, 15.6);

  VehicleState w;
  w.v = 5.0;
  EXPECT_NEAR(integrate(w, -9.0, 0.05, lim), -4.5, 1e-9);
}

TEST(Integrate, ConstantSpeed) {
  const ActuationLimits lim;
  VehicleState s;
  s.v = 10.0;
  for (int i = 0; i < 100; ++i) integrate(s, 0.0, 0.05, lim);
  EXPECT_NEAR(s.pos.s, 50.0, 1e-9);
  EXPECT_DOUBLE_EQ(s.v, 10.0);
}

TEST(SimConfig, DefaultStepCount) {
  const SimConfig cfg;
  EXPECT_EQ(cfg.steps(), 24000);
  EXPECT_EQ(cfg.steps_per_log(), 20);
}

TEST(Simulation, StartsEmpty) {
  Simulation sim(short_config(0.5, 1), ModelParams{});
  EXPECT_TRUE(sim.merging_zone_occupancy().empty());
  EXPECT_TRUE(sim.vehicles().empty());
  EXPECT_DOUBLE_EQ(sim.time(), 0.0);
}

// A lone CAV: one registration, at the control entry, and a merge entry on
// its assigned time.
TEST(Simulation, LoneCavMeetsItsSchedule) {
  SimConfig cfg = short_config(1.0, 1);
  ArrivalSchedule arr;
  arr.eastbound.push_back({1.0, VehicleClass::CAV, Approach::Eastbound});
  Simulation sim(cfg, ModelParams{}, arr);
  std::optional<double> s_at_register;
  while (!sim.done()) {
    sim.step();
    if (!s_at_register && !sim.coordinator().entries().empty()) {
      s_at_register = sim.vehicles().front().pos.s;
    }
  }
  const RunLog log = sim.finish();
  ASSERT_TRUE(s_at_register);
  EXPECT_GE(*s_at_register, 20.0);
  EXPECT_LT(*s_at_register, 20.0 + 15.6 * cfg.step);
  ASSERT_EQ(log.queue.size(), 1u);
  ASSERT_EQ(log.vehicles.size(), 1u);
  const VehicleRecord& r = log.vehicles.front();
  ASSERT_TRUE(r.t_merge_entry && r.tm);
  EXPECT_NEAR(*r.t_merge_entry, *r.tm, 0.2);
  EXPECT_TRUE(r.t_exit_network.has_value());
  EXPECT_EQ(log.counters.plan_infeasible, 0);
}

TEST(Simulation, EachVehicleRegistersOnce) {
  Simulation sim(short_config(0.5, 2), ModelParams{});
  const RunLog log = run_to_end(sim);
  std::map<int, int> registrations;
  for (const QueueEvent& e : log.queue_events) {
    if (e.type == QueueEventType::Register) ++registrations[e.vehicle_id];
  }
  int entered = 0;
  for (const VehicleRecord& r : log.vehicles) {
    if (r.t_enter_control) {
      ++entered;
      EXPECT_EQ(registrations[r.id], 1) << r.id;
    } else {
      EXPECT_EQ(registrations.count(r.id), 0u) << r.id;
    }
  }
  EXPECT_EQ(static_cast<int>(log.queue.size()), entered);
  // Queue ids follow control-entry order.
  for (size_t k = 1; k < log.queue.size(); ++k) {
    EXPECT_LE(log.queue[k - 1].t0, log.queue[k].t0);
  }
}

TEST(Simulation, ConservesVehicles) {
  for (double mpr : {0.0, 0.5, 1.0}) {
    Simulation sim(short_config(mpr, 3), ModelParams{});
    const RunLog log = run_to_end(sim);
    const RunCounters& c = log.counters;
    EXPECT_EQ(c.spawned, c.exited + c.in_network) << mpr;
    EXPECT_EQ(c.spawned + c.unspawned, 80) << mpr;
    EXPECT_EQ(static_cast<int>(log.vehicles.size()), c.spawned);
    EXPECT_EQ(c.steps, 6000);
  }
}

TEST(Simulation, Deterministic) {
  Simulation a(short_config(0.5, 4), ModelParams{});
  Simulation b(short_config(0.5, 4), ModelParams{});
  const RunLog la = run_to_end(a), lb = run_to_end(b);
  ASSERT_EQ(la.trajectories.size(), lb.trajectories.size());
  for (size_t k = 0; k < la.trajectories.size(); ++k) {
    ASSERT_EQ(la.trajectories[k].s, lb.trajectories[k].s);
    ASSERT_EQ(la.trajectories[k].v, lb.trajectories[k].v);
    ASSERT_EQ(la.trajectories[k].u, lb.trajectories[k].u);
  }
  ASSERT_EQ(la.events.size(), lb.events.size());
}

// Full penetration: no rear-end gap goes negative and merging-zone occupancy
// mixes approaches for at most one step. Different-road vehicles are
// scheduled exactly S / v_r apart, so a hand-over can straddle one snapshot.
TEST(Simulation, FullPenetrationIsConflictFree) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Simulation sim(short_config(1.0, seed), ModelParams{});
    int mixed_run = 0;
    while (!sim.done()) {
      sim.step();
      const auto occ = sim.merging_zone_occupancy();
      const bool mixed = std::any_of(occ.begin(), occ.end(),
                                     [&](const auto& o) { return o.second != occ[0].second; });
      mixed_run = mixed ? mixed_run + 1 : 0;
      ASSERT_LE(mixed_run, 1) << "seed " << seed << " t " << sim.time();
    }
    const RunLog log = sim.finish();
    EXPECT_EQ(log.counters.lateral_conflicts, 0);
    EXPECT_EQ(log.counters.negative_gaps, 0);
  }
}

TEST(Simulation, SpeedsStayInBounds) {
  Simulation sim(short_config(0.5, 5), ModelParams{});
  const RunLog log = run_to_end(sim);
  for (const TrajectorySample& s : log.trajectories) {
    ASSERT_GE(s.v, 0.0);
    ASSERT_LE(s.v, 15.6 + 1e-12);
    ASSERT_GE(s.u, -4.5 - 1e-9);
    ASSERT_LE(s.u, 4.5 + 1e-9);
  }
}

}  // namespace
}  // namespace roundabout
