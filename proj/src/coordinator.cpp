#include "roundabout/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace roundabout {

std::string_view to_string(QueueEventType t) {
  switch (t) {
    case QueueEventType::Register: return "register";
    case QueueEventType::Assign: return "assign";
    case QueueEventType::Replan: return "replan";
    case QueueEventType::Release: return "release";
  }
  return "?";
}

Coordinator::Coordinator(RoundaboutGeometry geom, ActuationLimits limits, SafetyParams safety)
    : geom_(geom), limits_(limits), safety_(safety) {}

double Coordinator::separation(bool same_road) const {
  const double vr = geom_.roundabout_speed;
  return same_road ? safe_distance(vr, safety_) / vr : geom_.merging_zone_arc / vr;
}

double Coordinator::earliest_merge_time(const MergeTimeRequest& req) const {
  const double arc = req.lambda * geom_.circulating_arc / geom_.roundabout_speed;
  return std::max(req.start + req.distance / req.vbar, req.start + req.distance / limits_.v_max) +
         arc;
}

double Coordinator::latest_merge_time(const MergeTimeRequest& req) const {
  const double arc = req.lambda * geom_.circulating_arc / geom_.roundabout_speed;
  return req.start + req.distance / limits_.v_min + arc;
}

double Coordinator::merge_time(const MergeTimeRequest& req, std::optional<double> pred_tm,
                               bool same_road) const {
  const double arc = req.lambda * geom_.circulating_arc / geom_.roundabout_speed;
  const double wanted = pred_tm ? *pred_tm + separation(same_road)
                                : req.start + req.distance / std::max(req.entry_speed, limits_.v_min) + arc;
  const double latest = req.start + req.distance / limits_.v_min + arc;
  const double by_average = req.start + req.distance / req.vbar + arc;
  const double by_top_speed = req.start + req.distance / limits_.v_max + arc;
  return std::max({std::min(wanted, latest), by_average, by_top_speed});
}

double Coordinator::schedule_merge_time(const QueueEntry& entry, const QueueEntry& pred) const {
  if (pred.id != entry.id - 1) {
    throw SchedulingOrderViolated("predecessor of " + std::to_string(entry.id) + " must be " +
                                  std::to_string(entry.id - 1));
  }
  if (!std::isfinite(pred.tm)) {
    throw SchedulingOrderViolated("predecessor " + std::to_string(pred.id) +
                                  " has no merging time");
  }
  const MergeTimeRequest req{entry.t0, geom_.control_zone_length, entry.v0, entry.vbar,
                             entry.lambda};
  return merge_time(req, pred.tm, pred.approach == entry.approach);
}

const QueueEntry* Coordinator::scheduling_predecessor(int id) const {
  const QueueEntry& me = entry(id);
  for (int k = id - 1; k >= 1; --k) {
    const QueueEntry& p = entry(k);
    if (me.approach == Approach::Westbound && p.approach == Approach::Eastbound && p.yields) continue;
    return &p;
  }
  return nullptr;
}

const QueueEntry& Coordinator::register_arrival(const VehicleState& state, double t, bool yields) {
  if (by_vehicle_.count(state.id)) {
    throw AlreadyRegistered("vehicle " + std::to_string(state.id));
  }
  QueueEntry e;
  e.id = static_cast<int>(entries_.size()) + 1;
  e.vehicle_id = state.id;
  e.vclass = state.vclass;
  e.approach = state.approach();
  e.t0 = t;
  e.v0 = state.v;
  e.lambda = approach_indicator(e.approach);
  e.vbar = 0.5 * (e.v0 + geom_.roundabout_speed);
  e.tm = std::numeric_limits<double>::quiet_NaN();
  e.yields = yields;

  if (e.vclass == VehicleClass::CAV) {
    entries_.push_back(e);
    const QueueEntry* pred = scheduling_predecessor(e.id);
    entries_.pop_back();
    if (pred && pred->id == e.id - 1) {
      e.tm = schedule_merge_time(e, *pred);
      e.pred_tm_seen = pred->tm;
    } else if (pred) {
      const MergeTimeRequest req{e.t0, geom_.control_zone_length, e.v0, e.vbar, e.lambda};
      e.tm = merge_time(req, pred->tm, pred->approach == e.approach);
      e.pred_tm_seen = pred->tm;
    } else {
      const MergeTimeRequest req{e.t0, geom_.control_zone_length, e.v0, e.vbar, e.lambda};
      e.tm = merge_time(req, std::nullopt, false);
    }
  } else {
    e.estimated = true;
    e.tm = estimate_human_merge_time(state, t, 0.0);
  }
  e.tz = e.tm - geom_.arc_time(e.approach);

  entries_.push_back(e);
  by_vehicle_.emplace(state.id, e.id);
  ++active_;
  log(t, QueueEventType::Register, entries_.back());
  if (e.vclass == VehicleClass::CAV) log(t, QueueEventType::Assign, entries_.back());
  return entries_.back();
}

PlanResult Coordinator::plan(const QueueEntry& entry, const VehicleState& state, double now) const {
  BoundaryConditionsd bc;
  bc.t0 = now;
  bc.tf = entry.tz;
  bc.p0 = state.pos.s - geom_.control_entry();
  bc.v0 = state.v;
  bc.pf = geom_.control_zone_length;
  bc.vf = geom_.roundabout_speed;
  PlanResult out;
  out.coefficients = solve_cubic(bc);
  out.violations = check_feasible(out.coefficients, limits_);
  return out;
}

double Coordinator::estimate_human_merge_time(const VehicleState& state, double now,
                                              double follow_up_time) const {
  const double d = std::max(0.0, signed_distance_to_merge(geom_, state.pos));
  const bool stopped_at_yield_line = d <= 5.0 && state.v < 0.5;
  if (stopped_at_yield_line) {
    return now + follow_up_time + geom_.merging_zone_arc / geom_.roundabout_speed;
  }
  return now + d / std::max(state.v, 1.0);
}

double Coordinator::reschedule(int id, const VehicleState& state, double now) {
  QueueEntry& e = entry(id);
  const double remaining = std::max(0.0, geom_.control_exit() - state.pos.s);
  const MergeTimeRequest req{now, remaining, state.v,
                             0.5 * (state.v + geom_.roundabout_speed), e.lambda};
  const QueueEntry* pred = scheduling_predecessor(id);
  e.tm = pred ? merge_time(req, pred->tm, pred->approach == e.approach)
              : merge_time(req, std::nullopt, false);
  e.tz = e.tm - geom_.arc_time(e.approach);
  e.estimated = false;
  e.pred_tm_seen = pred ? std::optional<double>(pred->tm) : std::nullopt;
  log(now, QueueEventType::Replan, e);
  return e.tm;
}

void Coordinator::defer(int id, double tm, double now) {
  QueueEntry& e = entry(id);
  if (!(tm >= e.tm)) {
    throw SchedulingOrderViolated("defer of " + std::to_string(id) + " must not move it earlier");
  }
  e.tm = tm;
  e.tz = tm - geom_.arc_time(e.approach);
  log(now, QueueEventType::Replan, e, "rear gap");
}

void Coordinator::set_estimate(int id, double tm, bool estimated) {
  QueueEntry& e = entry(id);
  e.tm = tm;
  e.tz = tm - geom_.arc_time(e.approach);
  e.estimated = estimated;
}

void Coordinator::release(int id, double t) {
  QueueEntry& e = entry(id);
  if (e.tf_exit) throw AlreadyReleased("queue entry " + std::to_string(id));
  e.tf_exit = t;
  --active_;
  log(t, QueueEventType::Release, e);
}

std::optional<int> Coordinator::id_of_vehicle(int vehicle_id) const {
  const auto it = by_vehicle_.find(vehicle_id);
  if (it == by_vehicle_.end()) return std::nullopt;
  return it->second;
}

void Coordinator::log(double t, QueueEventType type, const QueueEntry& e, std::string detail) {
  events_.push_back({t, type, e.id, e.vehicle_id, e.vclass, e.approach, e.t0, e.tm, e.tz,
                     e.tf_exit, std::move(detail)});
}

}  // namespace roundabout
