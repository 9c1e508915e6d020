#include "roundabout/run_io.hpp"

#include <fstream>
#include <iterator>
#include <optional>

#include <fmt/format.h>

namespace roundabout {

namespace {

std::string opt(const std::optional<double>& x) {
  return x ? fmt::format("{:.4f}", *x) : std::string();
}

// Event details are free text; keep commas out of the field.
std::string field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n') c = ';';
  }
  return s;
}

std::ofstream open(const std::filesystem::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

}  // namespace

void write_trajectories(std::ostream& os, const RunLog& log) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t,id,class,approach,s,v,u,mode,zone\n");
  for (const TrajectorySample& s : log.trajectories) {
    fmt::format_to(std::back_inserter(buf), "{:.2f},{},{},{},{:.4f},{:.4f},{:.4f},{},{}\n", s.t,
                   s.id, to_string(s.vclass), to_string(s.approach), s.s, s.v, s.u,
                   to_string(s.mode), to_string(s.zone));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_events(std::ostream& os, const RunLog& log) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t,id,event,detail\n");
  for (const Event& e : log.events) {
    fmt::format_to(std::back_inserter(buf), "{:.4f},{},{},{}\n", e.t, e.id, to_string(e.type),
                   field(e.detail));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_vehicles(std::ostream& os, const RunLog& log, const RoundaboutGeometry& geom,
                    const FuelModelCoefficients& fuel) {
  const std::vector<double> burnt = vehicle_fuel(log, fuel);
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf),
                 "id,class,approach,t_spawn,t_enter_control,tm,tz,tf_exit,t_exit_network,"
                 "travel_time,delay,fuel_mL\n");
  for (size_t i = 0; i < log.vehicles.size(); ++i) {
    const VehicleRecord& v = log.vehicles[i];
    std::optional<double> tt, delay;
    if (v.t_exit_network) {
      tt = vehicle_travel_time(v);
      delay = vehicle_delay(v, geom);
    }
    fmt::format_to(std::back_inserter(buf), "{},{},{},{:.4f},{},{},{},{},{},{},{},{:.6f}\n", v.id,
                   to_string(v.vclass), to_string(v.approach), v.t_spawn, opt(v.t_enter_control),
                   opt(v.tm), opt(v.tz), opt(v.tf_exit), opt(v.t_exit_network), opt(tt), opt(delay),
                   burnt[i]);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_queue_events(std::ostream& os, const RunLog& log) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "t,event,id,vehicle_id,class,approach,t0,tm,tz,tf_exit\n");
  for (const QueueEvent& e : log.queue_events) {
    fmt::format_to(std::back_inserter(buf), "{:.4f},{},{},{},{},{},{:.4f},{:.4f},{:.4f},{}\n", e.t,
                   to_string(e.type), e.id, e.vehicle_id, to_string(e.vclass),
                   to_string(e.approach), e.t0, e.tm, e.tz, opt(e.tf_exit));
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_moe(std::ostream& os, std::span<const MOERecord> moe, bool with_run_columns, double mpr,
               std::uint64_t seed, bool header) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  if (header) {
    if (with_run_columns) fmt::format_to(out, "mpr,seed,");
    fmt::format_to(out,
                   "window_start,window_end,approach,exits,mean_travel_time,density_veh_km,"
                   "cumulative_exits,delay,cumulative_delay,fuel_mL,cumulative_fuel_mL\n");
  }
  for (const MOERecord& r : moe) {
    if (with_run_columns) fmt::format_to(out, "{:.2f},{},", mpr, seed);
    fmt::format_to(out, "{:.1f},{:.1f},{},{},{},{:.4f},{},{:.4f},{:.4f},{:.4f},{:.4f}\n",
                   r.window_start, r.window_end, to_string(r.approach), r.exits,
                   r.exits > 0 ? fmt::format("{:.4f}", r.mean_travel_time) : std::string(),
                   r.density, r.cumulative_exits, r.delay, r.cumulative_delay, r.fuel,
                   r.cumulative_fuel);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_summary(std::ostream& os, std::span<const SummaryRow> rows) {
  fmt::memory_buffer buf;
  auto out = std::back_inserter(buf);
  fmt::format_to(out,
                 "mpr,runs,travel_time_improvement_pct,delay_improvement_pct,fuel_improvement_pct,"
                 "travel_time_s,delay_s,fuel_mL,baseline_travel_time_s,baseline_delay_s,"
                 "baseline_fuel_mL,residual_vehicles\n");
  for (const SummaryRow& r : rows) {
    fmt::format_to(out, "{:.2f},{},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.4f},{:.2f}\n",
                   r.mpr, r.runs, r.travel_time_improvement, r.delay_improvement,
                   r.fuel_improvement, r.travel_time, r.delay, r.fuel, r.baseline_travel_time,
                   r.baseline_delay, r.baseline_fuel, r.residual);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void write_run(const std::filesystem::path& dir, const RunLog& log, const RoundaboutGeometry& geom,
               const FuelModelCoefficients& fuel) {
  std::filesystem::create_directories(dir);
  {
    auto os = open(dir / "trajectories.csv");
    write_trajectories(os, log);
  }
  {
    auto os = open(dir / "events.csv");
    write_events(os, log);
  }
  {
    auto os = open(dir / "vehicles.csv");
    write_vehicles(os, log, geom, fuel);
  }
  {
    auto os = open(dir / "queue.csv");
    write_queue_events(os, log);
  }
  {
    auto os = open(dir / "moe.csv");
    const auto moe = aggregate(log, geom, fuel);
    write_moe(os, moe, false);
  }
}

}  // namespace roundabout
