#pragma once

#include <optional>
#include <span>

#include "roundabout/coordinator.hpp"
#include "roundabout/geometry.hpp"
#include "roundabout/vehicle.hpp"

namespace roundabout {

struct DriverParams {
  double desired_speed_approach = 15.6;
  double desired_speed_roundabout = 8.9;
  double max_accel = 3.0;
  double comfort_decel = 2.5;
  double hard_decel = 4.5;
  double standstill = 1.5;
  double time_headway = 1.2;
  double accel_exponent = 4.0;
  double critical_gap = 4.1;
  double follow_up_time = 3.2;

  void validate() const;
};

/// What a follower sees of the vehicle ahead: position difference along the
/// shared path and the leader's speed.
struct LeaderGap {
  double gap = 0.0;
  double speed = 0.0;
};

struct FollowCommand {
  double u = 0.0;
  /// Set when the gap was already non-positive; u is then -hard_decel.
  bool emergency = false;
};

/// Intelligent Driver Model acceleration, clamped to
/// [-hard_decel, max_accel].
FollowCommand car_following_accel(double v, std::optional<LeaderGap> leader, double v_des,
                                  const DriverParams& params);

/// Zone-dependent desired speed. Upstream of the roundabout the approach
/// speed tapers so that a driver braking at comfort_decel reaches the
/// roundabout speed at the roundabout entry.
double desired_speed(Zone zone, double distance_to_roundabout, const DriverParams& params);

/// Convenience overload taking two vehicle states on the same route.
FollowCommand car_following_accel(const VehicleState& me, const VehicleState* leader,
                                  const DriverParams& params, const RoundaboutGeometry& geom);

enum class GapDecision { Proceed, Yield };

/// Yield-line decision for an entering vehicle. `circulating` holds the
/// conflicting-approach vehicles that have not yet reached the merging zone;
/// one passed in at or past the merge entry counts as arriving now.
/// `last_proceed` is the time the previous vehicle from this approach was
/// allowed in, if any.
GapDecision gap_acceptance(const VehicleState& me, std::span<const VehicleState> circulating,
                           double t, std::optional<double> last_proceed,
                           const DriverParams& params, const RoundaboutGeometry& geom);

/// Interval, relative to now, during which a conflicting vehicle holds the
/// merging zone.
struct Occupancy {
  double enter = 0.0;
  double leave = 0.0;
};

/// Time to cover `distance` from speed v, accelerating at `accel` up to
/// v_cap and cruising after that. A vehicle already above v_cap holds its
/// speed.
double time_to_cover(double distance, double v, double accel, double v_cap);

/// Yield-line decision for a CAV that fell back to car following. It knows
/// when the conflicting traffic holds the merging zone, so in place of the
/// critical gap it asks for the zone to be free from `separation` before its
/// own entry at t_in until `separation` after its exit at t_out.
GapDecision connected_gap_acceptance(double t_in, double t_out,
                                     std::span<const Occupancy> conflicts, double separation);

enum class SwitchState { OptimalControl, Follow };

struct SwitchParams {
  SafetyParams safety;
  /// Return to optimal control only once the gap exceeds this multiple of
  /// the safe distance.
  double hysteresis = 1.2;
  /// Deceleration needed to avoid closing below the standstill distance
  /// above which the CAV drops to following regardless of the gap.
  double braking_trigger = 2.5;
};

/// On-off switch for a CAV behind a vehicle that is not under optimal
/// control. The Follow region is gap < safe_distance(v), widened to
/// gap < hysteresis * safe_distance(v) while already following.
SwitchState cav_safety_switch(double gap, double my_speed, double leader_speed,
                              SwitchState current, const SwitchParams& params);

}  // namespace roundabout
