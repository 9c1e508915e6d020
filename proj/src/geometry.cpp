#include "roundabout/geometry.hpp"

#include <cmath>
#include <string>

#include "roundabout/errors.hpp"

namespace roundabout {

std::string_view to_string(Approach a) {
  return a == Approach::Eastbound ? "Eastbound" : "Westbound";
}

std::string_view to_string(Zone z) {
  switch (z) {
    case Zone::EntryZone: return "EntryZone";
    case Zone::ControlZone: return "ControlZone";
    case Zone::CirculatingArc: return "CirculatingArc";
    case Zone::MergingZone: return "MergingZone";
    case Zone::ExitLeg: return "ExitLeg";
  }
  return "?";
}

void RoundaboutGeometry::validate() const {
  const auto positive = [](double x, const char* name) {
    if (!(x > 0.0)) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(approach_length, "approach_length");
  positive(control_zone_length, "control_zone_length");
  positive(merging_zone_arc, "merging_zone_arc");
  positive(perimeter, "perimeter");
  if (entry_zone_length < 0.0) throw ConfigError("entry_zone_length must be non-negative");
  if (exit_leg_length < 0.0) throw ConfigError("exit_leg_length must be non-negative");
  if (std::abs(entry_zone_length + control_zone_length - approach_length) > 1e-9) {
    throw ConfigError("entry_zone_length + control_zone_length must equal approach_length");
  }
  if (!(merging_zone_arc <= circulating_arc && circulating_arc <= perimeter)) {
    throw ConfigError("require merging_zone_arc <= circulating_arc <= perimeter");
  }
  if (!(roundabout_speed > 0.0 && roundabout_speed <= entry_speed_limit)) {
    throw ConfigError("require 0 < roundabout_speed <= entry_speed_limit");
  }
}

double RoundaboutGeometry::route_length(Approach a) const {
  return merge_exit(a) + exit_leg_length;
}

double RoundaboutGeometry::free_flow_time(Approach a) const {
  const double inside = approach_indicator(a) * circulating_arc + merging_zone_arc;
  return approach_length / entry_speed_limit + inside / roundabout_speed +
         exit_leg_length / entry_speed_limit;
}

Zone zone_of(const RoundaboutGeometry& geom, const RoutePosition& pos) {
  const double s = pos.s;
  if (s < 0.0 || s > geom.route_length(pos.approach)) {
    throw OutOfRoute("position " + std::to_string(s) + " outside route");
  }
  if (s < geom.entry_zone_length) return Zone::EntryZone;
  if (s < geom.approach_length) return Zone::ControlZone;
  if (s < geom.merge_entry(pos.approach)) return Zone::CirculatingArc;
  if (s < geom.merge_exit(pos.approach)) return Zone::MergingZone;
  return Zone::ExitLeg;
}

double distance_to_merge(const RoundaboutGeometry& geom, const RoutePosition& pos) {
  const double d = signed_distance_to_merge(geom, pos);
  if (d < 0.0) throw NegativeDistance("position is past the merging-zone entry");
  return d;
}

}  // namespace roundabout
