#include "roundabout/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace roundabout {

void FuelModelCoefficients::validate() const {
  if (!(b0 > 0.0)) throw ConfigError("fuel b0 (idle rate) must be positive");
}

double fuel_rate(double v, double u, const FuelModelCoefficients& k) {
  const double cruise = k.b0 + v * (k.b1 + v * (k.b2 + v * k.b3));
  const double accel = std::max(u, 0.0) * (k.c0 + v * (k.c1 + v * k.c2));
  return std::max(0.0, cruise + accel);
}

double vehicle_travel_time(const VehicleRecord& rec) {
  if (!rec.t_exit_network) throw Incomplete("vehicle " + std::to_string(rec.id) + " has not exited");
  return *rec.t_exit_network - rec.t_spawn;
}

double vehicle_delay(const VehicleRecord& rec, const RoundaboutGeometry& geom) {
  return std::max(0.0, vehicle_travel_time(rec) - geom.free_flow_time(rec.approach));
}

double density(std::span<const TrajectorySample> snapshot, Approach approach,
               const RoundaboutGeometry& geom) {
  const auto n = std::count_if(snapshot.begin(), snapshot.end(), [&](const TrajectorySample& s) {
    return s.approach == approach && s.s >= 0.0 && s.s < geom.approach_length;
  });
  return static_cast<double>(n) / (geom.approach_length / 1000.0);
}

namespace {

// Calls f(vehicle_index, t_begin, segment_fuel) for each pair of consecutive
// samples of one vehicle.
template <class F>
void for_each_fuel_segment(const RunLog& log, const FuelModelCoefficients& k, F&& f) {
  std::map<int, const TrajectorySample*> last;
  for (const TrajectorySample& s : log.trajectories) {
    auto [it, fresh] = last.try_emplace(s.id, &s);
    if (!fresh) {
      const TrajectorySample& p = *it->second;
      const double seg = 0.5 * (s.t - p.t) * (fuel_rate(p.v, p.u, k) + fuel_rate(s.v, s.u, k));
      f(static_cast<size_t>(s.id - 1), p.t, seg);
      it->second = &s;
    }
  }
}

}  // namespace

std::vector<double> vehicle_fuel(const RunLog& log, const FuelModelCoefficients& k) {
  std::vector<double> out(log.vehicles.size(), 0.0);
  for_each_fuel_segment(log, k, [&](size_t idx, double, double seg) { out.at(idx) += seg; });
  return out;
}

std::vector<MOERecord> aggregate(const RunLog& log, const RoundaboutGeometry& geom,
                                 const FuelModelCoefficients& k) {
  const SimConfig& cfg = log.config;
  const int windows = std::max(1, static_cast<int>(std::ceil(cfg.duration / cfg.aggregate_every - 1e-9)));
  const auto window_of = [&](double t) {
    return std::clamp(static_cast<int>(std::floor(t / cfg.aggregate_every + 1e-9)), 0, windows - 1);
  };

  std::vector<MOERecord> rec(static_cast<size_t>(2 * windows));
  std::vector<double> travel_sum(rec.size(), 0.0);
  std::vector<int> density_samples(rec.size(), 0);
  std::vector<double> density_sum(rec.size(), 0.0);
  const auto at = [&](int w, Approach a) -> size_t {
    return static_cast<size_t>(2 * w + (a == Approach::Westbound ? 1 : 0));
  };
  for (int w = 0; w < windows; ++w) {
    for (Approach a : {Approach::Eastbound, Approach::Westbound}) {
      MOERecord& r = rec[at(w, a)];
      r.window_start = w * cfg.aggregate_every;
      r.window_end = std::min(cfg.duration, (w + 1) * cfg.aggregate_every);
      r.approach = a;
    }
  }

  for (const VehicleRecord& v : log.vehicles) {
    if (!v.t_exit_network) continue;
    const size_t i = at(window_of(*v.t_exit_network), v.approach);
    ++rec[i].exits;
    travel_sum[i] += vehicle_travel_time(v);
    rec[i].delay += vehicle_delay(v, geom);
  }

  // Density: one snapshot per logged instant.
  size_t b = 0;
  while (b < log.trajectories.size()) {
    size_t e = b;
    while (e < log.trajectories.size() && log.trajectories[e].t == log.trajectories[b].t) ++e;
    const std::span<const TrajectorySample> snap(log.trajectories.data() + b, e - b);
    const int w = window_of(snap.front().t);
    for (Approach a : {Approach::Eastbound, Approach::Westbound}) {
      density_sum[at(w, a)] += density(snap, a, geom);
      ++density_samples[at(w, a)];
    }
    b = e;
  }

  for_each_fuel_segment(log, k, [&](size_t idx, double t, double seg) {
    rec[at(window_of(t), log.vehicles.at(idx).approach)].fuel += seg;
  });

  for (Approach a : {Approach::Eastbound, Approach::Westbound}) {
    int exits = 0;
    double delay = 0.0;
    double fuel = 0.0;
    for (int w = 0; w < windows; ++w) {
      const size_t i = at(w, a);
      MOERecord& r = rec[i];
      r.mean_travel_time =
          r.exits > 0 ? travel_sum[i] / r.exits : std::numeric_limits<double>::quiet_NaN();
      r.density = density_samples[i] > 0 ? density_sum[i] / density_samples[i] : 0.0;
      exits += r.exits;
      delay += r.delay;
      fuel += r.fuel;
      r.cumulative_exits = exits;
      r.cumulative_delay = delay;
      r.cumulative_fuel = fuel;
    }
  }
  return rec;
}

RunTotals totals(const RunLog& log, const RoundaboutGeometry& geom, const FuelModelCoefficients& k) {
  RunTotals out;
  out.mpr = log.config.mpr;
  out.seed = log.config.seed;
  out.dispatched = log.counters.spawned + log.counters.unspawned;
  out.residual = log.counters.in_network + log.counters.unspawned;
  for (const VehicleRecord& v : log.vehicles) {
    double tt;
    if (v.t_exit_network) {
      tt = *v.t_exit_network - v.t_spawn;
      if (*v.t_exit_network <= log.config.dispatch_window) ++out.exited_by_window_end;
    } else {
      tt = log.config.duration - v.t_spawn;
    }
    out.travel_time += tt;
    out.delay += std::max(0.0, tt - geom.free_flow_time(v.approach));
  }
  for (const Arrival& a : log.unspawned) {
    const double tt = log.config.duration - a.t;
    out.travel_time += tt;
    out.delay += std::max(0.0, tt - geom.free_flow_time(a.approach));
  }
  for (double f : vehicle_fuel(log, k)) out.fuel += f;
  return out;
}

double improvement(double baseline, double scenario) {
  if (baseline == 0.0) return 0.0;
  return 100.0 * (baseline - scenario) / baseline;
}

SummaryRow summarize(std::span<const RunTotals> baseline, std::span<const RunTotals> scenario) {
  if (baseline.size() != scenario.size() || scenario.empty()) {
    throw SummaryError("baseline has " + std::to_string(baseline.size()) + " runs, scenario has " +
                       std::to_string(scenario.size()));
  }
  SummaryRow row;
  row.mpr = scenario.front().mpr;
  row.runs = static_cast<int>(scenario.size());
  for (size_t i = 0; i < scenario.size(); ++i) {
    const RunTotals& b = baseline[i];
    const RunTotals& s = scenario[i];
    if (b.seed != s.seed) {
      throw SummaryError("seed mismatch: " + std::to_string(b.seed) + " vs " + std::to_string(s.seed));
    }
    if (b.dispatched != s.dispatched) {
      throw SummaryError("seed " + std::to_string(s.seed) + ": baseline dispatched " +
                         std::to_string(b.dispatched) + " vehicles, scenario " +
                         std::to_string(s.dispatched));
    }
    row.travel_time_improvement += improvement(b.travel_time, s.travel_time);
    row.delay_improvement += improvement(b.delay, s.delay);
    row.fuel_improvement += improvement(b.fuel, s.fuel);
    row.baseline_travel_time += b.travel_time;
    row.baseline_delay += b.delay;
    row.baseline_fuel += b.fuel;
    row.travel_time += s.travel_time;
    row.delay += s.delay;
    row.fuel += s.fuel;
    row.residual += s.residual;
  }
  const double n = static_cast<double>(scenario.size());
  for (double* x : {&row.travel_time_improvement, &row.delay_improvement, &row.fuel_improvement,
                    &row.baseline_travel_time, &row.baseline_delay, &row.baseline_fuel,
                    &row.travel_time, &row.delay, &row.fuel, &row.residual}) {
    *x /= n;
  }
  return row;
}

}  // namespace roundabout
