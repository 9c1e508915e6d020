#include "roundabout/driver_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roundabout {

void DriverParams::validate() const {
  const double all[] = {desired_speed_approach, desired_speed_roundabout, max_accel,
                        comfort_decel, hard_decel, standstill, time_headway, accel_exponent,
                        critical_gap, follow_up_time};
  for (double x : all) {
    if (!(x > 0.0)) throw ConfigError("driver parameters must all be positive");
  }
  if (comfort_decel > hard_decel) throw ConfigError("require comfort_decel <= hard_decel");
  if (critical_gap <= follow_up_time) throw ConfigError("require critical_gap > follow_up_time");
}

FollowCommand car_following_accel(double v, std::optional<LeaderGap> leader, double v_des,
                                  const DriverParams& p) {
  double interaction = 0.0;
  if (leader) {
    if (leader->gap <= 0.0) return {-p.hard_decel, true};
    const double closing = v - leader->speed;
    const double s_star =
        p.standstill +
        std::max(0.0, v * p.time_headway + v * closing / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    interaction = (s_star / leader->gap) * (s_star / leader->gap);
  }
  const double free = std::pow(v / v_des, p.accel_exponent);
  const double u = p.max_accel * (1.0 - free - interaction);
  return {std::clamp(u, -p.hard_decel, p.max_accel), false};
}

double desired_speed(Zone zone, double distance_to_roundabout, const DriverParams& p) {
  switch (zone) {
    case Zone::CirculatingArc:
    case Zone::MergingZone:
      return p.desired_speed_roundabout;
    case Zone::ExitLeg:
      return p.desired_speed_approach;
    case Zone::EntryZone:
    case Zone::ControlZone:
      break;
  }
  const double d = std::max(0.0, distance_to_roundabout);
  const double taper = std::sqrt(p.desired_speed_roundabout * p.desired_speed_roundabout +
                                 2.0 * p.comfort_decel * d);
  return std::min(p.desired_speed_approach, taper);
}

FollowCommand car_following_accel(const VehicleState& me, const VehicleState* leader,
                                  const DriverParams& params, const RoundaboutGeometry& geom) {
  const Zone zone = zone_of(geom, me.pos);
  const double v_des = desired_speed(zone, geom.control_exit() - me.pos.s, params);
  if (!leader) return car_following_accel(me.v, std::nullopt, v_des, params);
  const double gap =
      signed_distance_to_merge(geom, me.pos) - signed_distance_to_merge(geom, leader->pos);
  return car_following_accel(me.v, LeaderGap{gap, leader->v}, v_des, params);
}

GapDecision gap_acceptance(const VehicleState& me, std::span<const VehicleState> circulating,
                           double t, std::optional<double> last_proceed,
                           const DriverParams& params, const RoundaboutGeometry& geom) {
  (void)me;
  if (last_proceed && t - *last_proceed < params.follow_up_time) return GapDecision::Yield;
  double earliest = std::numeric_limits<double>::infinity();
  for (const VehicleState& other : circulating) {
    const double d = std::max(0.0, signed_distance_to_merge(geom, other.pos));
    earliest = std::min(earliest, d / std::max(other.v, 1.0));
  }
  return earliest > params.critical_gap ? GapDecision::Proceed : GapDecision::Yield;
}

double time_to_cover(double distance, double v, double accel, double v_cap) {
  if (distance <= 0.0) return 0.0;
  if (v >= v_cap) return distance / v;
  const double t_ramp = (v_cap - v) / accel;
  const double d_ramp = (v + v_cap) / 2.0 * t_ramp;
  if (distance >= d_ramp) return t_ramp + (distance - d_ramp) / v_cap;
  return (std::sqrt(v * v + 2.0 * accel * distance) - v) / accel;
}

GapDecision connected_gap_acceptance(double t_in, double t_out,
                                     std::span<const Occupancy> conflicts, double separation) {
  for (const Occupancy& o : conflicts) {
    const bool clears_first = o.leave + separation <= t_in;
    const bool arrives_after = o.enter >= t_out + separation;
    if (!clears_first && !arrives_after) return GapDecision::Yield;
  }
  return GapDecision::Proceed;
}

SwitchState cav_safety_switch(double gap, double my_speed, double leader_speed,
                              SwitchState current, const SwitchParams& params) {
  const double delta = safe_distance(my_speed, params.safety);
  const double closing = my_speed - leader_speed;
  double braking_needed = 0.0;
  if (closing > 0.0) {
    const double room = gap - params.safety.standstill;
    braking_needed = room > 0.0 ? closing * closing / (2.0 * room)
                                : std::numeric_limits<double>::infinity();
  }
  if (current == SwitchState::OptimalControl) {
    const bool engage = gap < delta || braking_needed > params.braking_trigger;
    return engage ? SwitchState::Follow : SwitchState::OptimalControl;
  }
  const bool release =
      gap >= params.hysteresis * delta && braking_needed <= 0.5 * params.braking_trigger;
  return release ? SwitchState::OptimalControl : SwitchState::Follow;
}

}  // namespace roundabout
