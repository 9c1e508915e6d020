#include "roundabout/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace roundabout {

void SweepSpec::validate() const {
  if (mpr.empty()) throw ConfigError("sweep mpr list is empty");
  if (seeds.empty()) throw ConfigError("sweep seeds list is empty");
  for (double m : mpr) {
    if (!(m >= 0.0 && m <= 1.0)) throw ConfigError(fmt::format("mpr {} outside [0, 1]", m));
  }
  if (std::set<double>(mpr.begin(), mpr.end()).size() != mpr.size()) {
    throw ConfigError("sweep mpr list has duplicates");
  }
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("sweep seeds list has duplicates");
  }
}

void Scenario::validate() const {
  model.validate();
  fuel.validate();
  sweep.validate();
  run_config(sweep.mpr.front(), sweep.seeds.front()).validate();
  generate_arrivals(run_config(sweep.mpr.front(), sweep.seeds.front()));
}

SimConfig Scenario::run_config(double mpr, std::uint64_t seed) const {
  SimConfig c = sim;
  c.mpr = mpr;
  c.seed = seed;
  return c;
}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line + 1; }

using Setter = std::function<void(const YAML::Node&)>;

template <class T>
Setter bind(T& target) {
  return [&target](const YAML::Node& n) { target = n.as<T>(); };
}

std::map<std::string, std::map<std::string, Setter>> fields(Scenario& s) {
  RoundaboutGeometry& g = s.model.geometry;
  ActuationLimits& l = s.model.limits;
  SafetyParams& sf = s.model.safety;
  DriverParams& d = s.model.driver;
  ControlParams& c = s.model.control;
  SimConfig& sim = s.sim;
  FuelModelCoefficients& f = s.fuel;
  return {
      {"geometry",
       {{"approach_length", bind(g.approach_length)},
        {"entry_zone_length", bind(g.entry_zone_length)},
        {"control_zone_length", bind(g.control_zone_length)},
        {"circulating_arc", bind(g.circulating_arc)},
        {"merging_zone_arc", bind(g.merging_zone_arc)},
        {"perimeter", bind(g.perimeter)},
        {"roundabout_speed", bind(g.roundabout_speed)},
        {"entry_speed_limit", bind(g.entry_speed_limit)},
        {"exit_leg_length", bind(g.exit_leg_length)}}},
      {"limits",
       {{"u_min", bind(l.u_min)},
        {"u_max", bind(l.u_max)},
        {"v_min", bind(l.v_min)},
        {"v_max", bind(l.v_max)}}},
      {"safety", {{"standstill", bind(sf.standstill)}, {"headway", bind(sf.headway)}}},
      {"driver",
       {{"desired_speed_approach", bind(d.desired_speed_approach)},
        {"desired_speed_roundabout", bind(d.desired_speed_roundabout)},
        {"max_accel", bind(d.max_accel)},
        {"comfort_decel", bind(d.comfort_decel)},
        {"hard_decel", bind(d.hard_decel)},
        {"standstill", bind(d.standstill)},
        {"time_headway", bind(d.time_headway)},
        {"accel_exponent", bind(d.accel_exponent)},
        {"critical_gap", bind(d.critical_gap)},
        {"follow_up_time", bind(d.follow_up_time)}}},
      {"sim",
       {{"step", bind(sim.step)},
        {"duration", bind(sim.duration)},
        {"dispatch_window", bind(sim.dispatch_window)},
        {"demand_per_approach", bind(sim.demand_per_approach)},
        {"total_vehicles", bind(sim.total_vehicles)},
        {"min_generation_headway", bind(sim.min_generation_headway)},
        {"log_trajectory_every", bind(sim.log_trajectory_every)},
        {"aggregate_every", bind(sim.aggregate_every)}}},
      {"control",
       {{"kp", bind(c.kp)},
        {"kv", bind(c.kv)},
        {"replan_threshold", bind(c.replan_threshold)},
        {"switch_hysteresis", bind(c.switch_hysteresis)},
        {"follow_return_min_distance", bind(c.follow_return_min_distance)},
        {"spawn_clearance", bind(c.spawn_clearance)}}},
      {"fuel",
       {{"b0", bind(f.b0)},
        {"b1", bind(f.b1)},
        {"b2", bind(f.b2)},
        {"b3", bind(f.b3)},
        {"c0", bind(f.c0)},
        {"c1", bind(f.c1)},
        {"c2", bind(f.c2)}}},
      {"sweep", {{"mpr", bind(s.sweep.mpr)}, {"seeds", bind(s.sweep.seeds)}}},
  };
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Scenario s;
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.line + 1);
  }
  if (root.IsNull()) {
    s.validate();
    return s;
  }
  if (!root.IsMap()) throw ConfigError("scenario must be a mapping of sections", line_of(root));

  auto table = fields(s);
  std::set<std::string> seen;
  for (const auto& section : root) {
    const auto name = section.first.as<std::string>();
    const auto it = table.find(name);
    if (it == table.end()) {
      throw ConfigError("unknown section '" + name + "'", line_of(section.first));
    }
    if (!seen.insert(name).second) {
      throw ConfigError("duplicate section '" + name + "'", line_of(section.first));
    }
    if (section.second.IsNull()) continue;
    if (!section.second.IsMap()) {
      throw ConfigError("section '" + name + "' must be a mapping", line_of(section.second));
    }
    std::set<std::string> keys;
    for (const auto& kv : section.second) {
      const auto key = kv.first.as<std::string>();
      const auto field = it->second.find(key);
      if (field == it->second.end()) {
        throw ConfigError("unknown key '" + key + "' in section '" + name + "'", line_of(kv.first));
      }
      if (!keys.insert(key).second) {
        throw ConfigError("duplicate key '" + key + "' in section '" + name + "'", line_of(kv.first));
      }
      try {
        field->second(kv.second);
      } catch (const YAML::Exception&) {
        throw ConfigError("bad value for " + name + "." + key, line_of(kv.second));
      }
      if (name == "sweep" && key == "mpr") {
        for (const auto& m : kv.second) {
          const double v = m.as<double>();
          if (!(v >= 0.0 && v <= 1.0)) {
            throw ConfigError(fmt::format("mpr {} outside [0, 1]", v), line_of(m));
          }
        }
      }
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string describe(const Scenario& s) {
  const RoundaboutGeometry& g = s.model.geometry;
  const SimConfig& c = s.sim;
  std::string out;
  auto line = [&out](std::string text) { out += text + '\n'; };
  line("geometry");
  line(fmt::format("  control zone        [{:.1f}, {:.1f}) m", g.control_entry(), g.control_exit()));
  line(fmt::format("  circulating arc L_r {:.1f} m (westbound only)", g.circulating_arc));
  for (Approach a : {Approach::Eastbound, Approach::Westbound}) {
    line(fmt::format("  {:<10} merge [{:.1f}, {:.1f}) m, route {:.1f} m, free-flow {:.3f} s",
                     to_string(a), g.merge_entry(a), g.merge_exit(a), g.route_length(a),
                     g.free_flow_time(a)));
  }
  const double vr = g.roundabout_speed;
  line("scheduling");
  line(fmt::format("  safe distance at v_r {:.3f} m", safe_distance(vr, s.model.safety)));
  line(fmt::format("  separation same road {:.4f} s, different roads {:.4f} s",
                   safe_distance(vr, s.model.safety) / vr, g.merging_zone_arc / vr));
  line(fmt::format("  control zone transit {:.3f} s at v_max, {:.3f} s at v_min",
                   g.control_zone_length / s.model.limits.v_max,
                   g.control_zone_length / s.model.limits.v_min));
  line("demand");
  line(fmt::format("  {} vehicles per approach over {:.0f} s, mean headway {:.3f} s (min {:.2f} s)",
                   c.total_vehicles / 2, c.dispatch_window, 3600.0 / c.demand_per_approach,
                   c.min_generation_headway));
  line(fmt::format("  {} steps of {} s, trajectory log every {} s, windows of {} s", c.steps(),
                   c.step, c.log_trajectory_every, c.aggregate_every));
  std::string mprs;
  for (double m : s.sweep.mpr) mprs += fmt::format("{}{:g}", mprs.empty() ? "" : ", ", m);
  std::string seeds;
  for (auto seed : s.sweep.seeds) seeds += fmt::format("{}{}", seeds.empty() ? "" : ", ", seed);
  line("sweep");
  line("  mpr   " + mprs);
  line("  seeds " + seeds);
  return out;
}

}  // namespace roundabout
