#pragma once

#include <string_view>

namespace roundabout {

enum class Approach { Eastbound, Westbound };

enum class Zone { EntryZone, ControlZone, CirculatingArc, MergingZone, ExitLeg };

std::string_view to_string(Approach a);
std::string_view to_string(Zone z);

/// 0 for eastbound (through traffic), 1 for westbound (U-turn traffic that
/// travels the circulating arc before reaching the merging zone).
inline int approach_indicator(Approach a) { return a == Approach::Westbound ? 1 : 0; }

/// One-dimensional path model of the two-approach single-lane roundabout.
///
/// Eastbound:  entry | control | merging | exit leg
/// Westbound:  entry | control | circulating arc | merging | exit leg
///
/// All lengths in meters, speeds in m/s. Both routes share the merging zone
/// and the exit leg downstream of it.
struct RoundaboutGeometry {
  double approach_length = 320.0;
  double entry_zone_length = 20.0;
  double control_zone_length = 300.0;
  double circulating_arc = 100.0;
  double merging_zone_arc = 12.0;
  double perimeter = 200.0;
  double roundabout_speed = 8.9;
  double entry_speed_limit = 15.6;
  double exit_leg_length = 100.0;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  double route_length(Approach a) const;

  /// Route position of the control-zone entry (same on both approaches).
  double control_entry() const { return entry_zone_length; }
  /// Route position of the control-zone exit (= roundabout entry).
  double control_exit() const { return approach_length; }
  /// Route position of the merging-zone entry for the given approach.
  double merge_entry(Approach a) const {
    return approach_length + approach_indicator(a) * circulating_arc;
  }
  double merge_exit(Approach a) const { return merge_entry(a) + merging_zone_arc; }

  /// Time to traverse the circulating arc at the roundabout speed, applied
  /// only to westbound vehicles.
  double arc_time(Approach a) const {
    return approach_indicator(a) * circulating_arc / roundabout_speed;
  }

  /// Route traversal time at the zone speed limits.
  double free_flow_time(Approach a) const;
};

struct RoutePosition {
  Approach approach = Approach::Eastbound;
  double s = 0.0;
};

/// Zone containing the position. Intervals are half-open, so a boundary
/// belongs to the downstream zone. Throws OutOfRoute past the route end.
Zone zone_of(const RoundaboutGeometry& geom, const RoutePosition& pos);

/// Arc distance to the merging-zone entry. Zero at the entry itself; throws
/// NegativeDistance once the position is past it.
double distance_to_merge(const RoundaboutGeometry& geom, const RoutePosition& pos);

/// Same quantity without the range check: negative past the merging-zone
/// entry. Doubles as the coordinate of the shared corridor downstream.
inline double signed_distance_to_merge(const RoundaboutGeometry& geom,
                                       const RoutePosition& pos) {
  return geom.merge_entry(pos.approach) - pos.s;
}

}  // namespace roundabout
