#include "roundabout/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace roundabout {

namespace {

constexpr double kStoppedSpeed = 0.1;
constexpr double kHeadwayTolerance = 0.5;
constexpr double kMinReplanHorizon = 1.0;
constexpr double kSqueezeTolerance = 0.1;
constexpr double kGapCheckStep = 0.1;
constexpr double kDeferStep = 0.1;
constexpr int kMaxDefers = 50;
constexpr double kReleaseRetry = 1.0;
// Fraction of the top acceleration assumed when a CAV predicts its own
// crossing of the merging zone from the yield line.
constexpr double kConnectedAccelShare = 0.5;
// Plans must clear the safe distance by this much less than the logged
// tolerance, leaving the rest to tracking error.
constexpr double kPlanGapSlack = 0.2;

// CAVs that follow the schedule, as opposed to humans and CAVs that fell
// back to car following. The safety switch only reacts to the latter.
bool coordinated(const VehicleState& s) {
  return s.vclass == VehicleClass::CAV && s.mode != Mode::Follow;
}

// Smallest gap minus safe distance along the follower's plan from `from` to
// its end. A plan that has ended is extended by cruising at the roundabout
// speed.
double plan_gap_margin(const TrajectoryCoefficientsd& follower, const TrajectoryCoefficientsd& leader,
                       double from, const RoundaboutGeometry& g, const SafetyParams& sp) {
  const auto at = [&](const TrajectoryCoefficientsd& k, double t) {
    if (t <= k.valid_to) return eval_unchecked(k, std::max(t, k.valid_from));
    KinematicSample<double> r;
    r.p = g.control_zone_length + g.roundabout_speed * (t - k.valid_to);
    r.v = g.roundabout_speed;
    return r;
  };
  double worst = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(std::ceil((follower.valid_to - from) / kGapCheckStep));
  for (int k = 0; k <= n; ++k) {
    const double t = std::min(from + k * kGapCheckStep, follower.valid_to);
    const auto f = at(follower, t);
    worst = std::min(worst, at(leader, t).p - f.p - safe_distance(f.v, sp));
  }
  return worst;
}

// A cubic that dips below the minimum speed asks the vehicle to wait in the
// control zone, which car following does better.
bool needs_stop(const PlanResult& pr) {
  return std::any_of(pr.violations.begin(), pr.violations.end(),
                     [](const Violation<double>& v) { return v.bound == Bound::VMin; });
}

}  // namespace

std::string_view to_string(EventType e) {
  switch (e) {
    case EventType::Spawn: return "spawn";
    case EventType::SpawnBlocked: return "spawn_blocked";
    case EventType::EnterControl: return "enter_control";
    case EventType::EnterMerge: return "enter_merge";
    case EventType::ExitMerge: return "exit_merge";
    case EventType::Despawn: return "despawn";
    case EventType::ModeChange: return "mode_change";
    case EventType::Replan: return "replan";
    case EventType::PlanInfeasible: return "plan_infeasible";
    case EventType::Proceed: return "proceed";
    case EventType::LateralConflict: return "lateral_conflict";
    case EventType::EmergencyBrake: return "emergency_brake";
    case EventType::NegativeGap: return "negative_gap";
    case EventType::HeadwayShortfall: return "headway_shortfall";
  }
  return "?";
}

void SimConfig::validate() const {
  if (!(step > 0.0)) throw ConfigError("sim step must be positive");
  if (!(duration > 0.0)) throw ConfigError("sim duration must be positive");
  if (!(dispatch_window > 0.0 && dispatch_window <= duration)) {
    throw ConfigError("require 0 < dispatch_window <= duration");
  }
  if (total_vehicles <= 0 || total_vehicles % 2 != 0) {
    throw ConfigError("total_vehicles must be positive and even");
  }
  if (!(mpr >= 0.0 && mpr <= 1.0)) throw ConfigError("mpr must lie in [0, 1]");
  if (!(demand_per_approach > 0.0)) throw ConfigError("demand_per_approach must be positive");
  const double expected = demand_per_approach * dispatch_window / 3600.0;
  if (std::abs(expected - total_vehicles / 2) > 1.0) {
    throw ConfigError(fmt::format(
        "demand_per_approach * dispatch_window implies {:.1f} vehicles per approach, "
        "total_vehicles gives {}",
        expected, total_vehicles / 2));
  }
  if (!(min_generation_headway >= 0.0)) throw ConfigError("min_generation_headway must be >= 0");
  if (!(log_trajectory_every >= step)) throw ConfigError("log_trajectory_every must be >= step");
  if (!(aggregate_every >= log_trajectory_every)) {
    throw ConfigError("aggregate_every must be >= log_trajectory_every");
  }
}

int SimConfig::steps() const { return static_cast<int>(std::llround(duration / step)); }

int SimConfig::steps_per_log() const {
  return std::max(1, static_cast<int>(std::llround(log_trajectory_every / step)));
}

void ControlParams::validate() const {
  if (!(kp >= 0.0 && kv >= 0.0)) throw ConfigError("tracking gains must be non-negative");
  if (!(replan_threshold > 0.0)) throw ConfigError("replan_threshold must be positive");
  if (!(switch_hysteresis >= 1.0)) throw ConfigError("switch_hysteresis must be >= 1");
  if (!(follow_return_min_distance >= 0.0)) {
    throw ConfigError("follow_return_min_distance must be non-negative");
  }
  if (!(spawn_clearance >= 0.0)) throw ConfigError("spawn_clearance must be non-negative");
}

void ModelParams::validate() const {
  geometry.validate();
  limits.validate();
  safety.validate();
  driver.validate();
  control.validate();
}

ArrivalSchedule generate_arrivals(const SimConfig& cfg) {
  cfg.validate();
  const int per_approach = cfg.total_vehicles / 2;
  const double shift = cfg.min_generation_headway;
  const double fixed = (per_approach + 1) * shift;
  if (fixed >= cfg.dispatch_window) {
    throw ConfigError(fmt::format("{} arrivals per approach do not fit in {} s at a minimum "
                                  "headway of {} s",
                                  per_approach, cfg.dispatch_window, shift));
  }
  const double mean_excess = 3600.0 / cfg.demand_per_approach - shift;
  if (!(mean_excess > 0.0)) {
    throw ConfigError("demand_per_approach exceeds the capacity of min_generation_headway");
  }

  std::seed_seq time_seed{static_cast<std::uint32_t>(cfg.seed),
                          static_cast<std::uint32_t>(cfg.seed >> 32), 0x7431u};
  std::seed_seq label_seed{static_cast<std::uint32_t>(cfg.seed),
                           static_cast<std::uint32_t>(cfg.seed >> 32), 0x1ab3u};
  std::mt19937_64 time_rng(time_seed);
  std::mt19937_64 label_rng(label_seed);
  std::exponential_distribution<double> excess(1.0 / mean_excess);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  ArrivalSchedule out;
  for (Approach approach : {Approach::Eastbound, Approach::Westbound}) {
    // One headway beyond the last arrival so the window end is not an arrival.
    std::vector<double> draws(static_cast<size_t>(per_approach) + 1);
    for (double& d : draws) d = excess(time_rng);
    const double scale = (cfg.dispatch_window - fixed) / std::accumulate(draws.begin(), draws.end(), 0.0);
    auto& list = approach == Approach::Eastbound ? out.eastbound : out.westbound;
    double t = 0.0;
    for (int k = 0; k < per_approach; ++k) {
      t += shift + draws[static_cast<size_t>(k)] * scale;
      list.push_back({t, VehicleClass::Human, approach});
    }
  }
  for (auto* list : {&out.eastbound, &out.westbound}) {
    for (Arrival& a : *list) a.vclass = unit(label_rng) < cfg.mpr ? VehicleClass::CAV : VehicleClass::Human;
  }
  return out;
}

double integrate(VehicleState& state, double u, double dt, const ActuationLimits& limits) {
  const double applied = std::clamp(u, limits.u_min, limits.u_max);
  const double v_next = std::clamp(state.v + applied * dt, 0.0, limits.v_max);
  const double realized = (v_next - state.v) / dt;
  state.v = v_next;
  state.u = realized;
  state.pos.s += v_next * dt;
  return realized;
}

Simulation::Simulation(SimConfig cfg, ModelParams params)
    : Simulation(cfg, params, generate_arrivals(cfg)) {}

Simulation::Simulation(SimConfig cfg, ModelParams params, ArrivalSchedule arrivals)
    : cfg_(cfg),
      params_(params),
      coordinator_(params.geometry, params.limits, params.safety) {
  cfg_.validate();
  params_.validate();
  pending_[0].assign(arrivals.eastbound.begin(), arrivals.eastbound.end());
  pending_[1].assign(arrivals.westbound.begin(), arrivals.westbound.end());
  log_.config = cfg_;
}

double Simulation::corridor(const VehicleState& s) const {
  return -signed_distance_to_merge(params_.geometry, s.pos);
}

void Simulation::event(double t, int id, EventType type, std::string detail) {
  log_.events.push_back({t, id, type, std::move(detail)});
}

bool Simulation::is_under_plan(const Agent& a) const {
  return a.state.mode == Mode::OptimalControl;
}

bool Simulation::is_committed(const Agent& a) const {
  return a.state.approach() == Approach::Westbound || a.committed;
}

std::vector<VehicleState> Simulation::vehicles() const {
  std::vector<VehicleState> out;
  out.reserve(agents_.size());
  for (const Agent& a : agents_) out.push_back(a.state);
  return out;
}

std::vector<std::pair<int, Approach>> Simulation::merging_zone_occupancy() const {
  std::vector<std::pair<int, Approach>> out;
  for (const Agent& a : agents_) {
    if (zone_of(params_.geometry, a.state.pos) == Zone::MergingZone) {
      out.emplace_back(a.state.id, a.state.approach());
    }
  }
  return out;
}

void Simulation::set_mode(Agent& a, Mode m, double t, const std::string& why) {
  if (a.state.mode == m) return;
  const Mode from = a.state.mode;
  const bool flip = (from == Mode::OptimalControl && m == Mode::Follow) ||
                    (from == Mode::Follow && m == Mode::OptimalControl);
  if (flip) {
    if (t - a.last_mode_change < 1.0) ++log_.counters.mode_chatter;
    a.last_mode_change = t;
  }
  VehicleRecord& rec = log_.vehicles[a.record];
  ++rec.mode_changes;
  if (m == Mode::Follow) rec.ever_followed = true;
  a.state.mode = m;
  event(t, a.state.id, EventType::ModeChange,
        fmt::format("{}->{}{}{}", to_string(from), to_string(m), why.empty() ? "" : " ", why));
}

void Simulation::spawn_due(double t) {
  const RoundaboutGeometry& g = params_.geometry;
  bool blocked[2] = {false, false};
  while (true) {
    int pick = -1;
    for (int k = 0; k < 2; ++k) {
      if (blocked[k] || pending_[k].empty() || pending_[k].front().t > t + 1e-9) continue;
      if (pick < 0 || pending_[k].front().t < pending_[pick].front().t) pick = k;
    }
    if (pick < 0) break;
    const Arrival arrival = pending_[pick].front();

    // Last vehicle on this approach, i.e. the one closest to the input point.
    const Agent* last = nullptr;
    for (const Agent& a : agents_) {
      if (a.state.approach() == arrival.approach && (!last || a.state.pos.s < last->state.pos.s)) {
        last = &a;
      }
    }
    double v0 = g.entry_speed_limit;
    if (last) {
      const double gap = last->state.pos.s;
      if (gap < params_.driver.standstill + params_.control.spawn_clearance) {
        blocked[pick] = true;
        if (!blocked_logged_[pick]) {
          event(t, 0, EventType::SpawnBlocked, std::string(to_string(arrival.approach)));
          blocked_logged_[pick] = true;
        }
        continue;
      }
      const double room = std::max(0.0, gap - params_.driver.standstill);
      v0 = std::min(v0, std::max(last->state.v, std::sqrt(2.0 * params_.driver.comfort_decel * room)));
    }
    blocked_logged_[pick] = false;
    pending_[pick].pop_front();

    Agent a;
    a.state.id = next_id_++;
    a.state.vclass = arrival.vclass;
    a.state.pos = {arrival.approach, 0.0};
    a.state.v = v0;
    a.state.mode = arrival.vclass == VehicleClass::CAV ? Mode::Uncontrolled : Mode::HumanDriving;
    a.state.t_spawn = t;
    VehicleRecord rec;
    rec.id = a.state.id;
    rec.vclass = arrival.vclass;
    rec.approach = arrival.approach;
    rec.t_spawn = t;
    a.record = log_.vehicles.size();
    log_.vehicles.push_back(rec);
    ++log_.counters.spawned;
    event(t, a.state.id, EventType::Spawn,
          fmt::format("{} {}", to_string(arrival.vclass), to_string(arrival.approach)));
    agents_.push_back(std::move(a));
  }
}

void Simulation::sample(double t) {
  for (const Agent& a : agents_) {
    const VehicleState& s = a.state;
    log_.trajectories.push_back({t, s.id, s.vclass, s.approach(), s.pos.s, s.v, s.u, s.mode,
                                 zone_of(params_.geometry, s.pos)});
  }
}

Simulation::LeaderRef Simulation::physical_leader(size_t i,
                                                  const std::vector<VehicleState>& snap) const {
  LeaderRef best;
  const VehicleState& me = snap[i];
  const double c_me = corridor(me);
  for (size_t j = 0; j < snap.size(); ++j) {
    if (j == i) continue;
    const VehicleState& o = snap[j];
    const double c_o = corridor(o);
    double gap;
    if (o.approach() == me.approach()) {
      if (o.pos.s <= me.pos.s) continue;
      gap = o.pos.s - me.pos.s;
    } else {
      if (c_o < 0.0 || c_o <= c_me) continue;
      gap = c_o - c_me;
    }
    if (gap < best.gap) {
      best = {static_cast<int>(j), gap, o.v, o.mode == Mode::OptimalControl, coordinated(o)};
    }
  }
  return best;
}

Simulation::LeaderRef Simulation::virtual_leader(size_t i, const std::vector<VehicleState>& snap,
                                                 bool plan_leaders) const {
  LeaderRef best;
  const VehicleState& me = snap[i];
  const double c_me = corridor(me);
  if (c_me >= 0.0) return best;
  // Before its yield decision an eastbound driver only reacts to the stop
  // line; on a plan it only sees westbound traffic scheduled ahead of it.
  const bool east_open = me.approach() == Approach::Eastbound && !agents_[i].committed;
  if (east_open && me.mode != Mode::OptimalControl) return best;
  for (size_t j = 0; j < snap.size(); ++j) {
    const VehicleState& o = snap[j];
    if (o.approach() == me.approach()) continue;
    const double c_o = corridor(o);
    if (!(c_o < 0.0 && c_o > c_me)) continue;
    const bool under_plan = o.mode == Mode::OptimalControl;
    if (!plan_leaders && coordinated(o)) continue;
    if (me.approach() == Approach::Westbound) {
      // An eastbound CAV on its plan is ahead only if it was scheduled first;
      // anything else counts once it has been let through the yield line.
      const auto& mine = agents_[i].queue_id;
      const auto& theirs = agents_[j].queue_id;
      const bool ahead = under_plan ? (!mine || (theirs && *theirs < *mine)) : snap_committed_[j];
      if (!ahead) continue;
    } else if (east_open) {
      const auto& mine = agents_[i].queue_id;
      const auto& theirs = agents_[j].queue_id;
      if (!(mine && theirs && *theirs < *mine)) continue;
    }
    const double gap = c_o - c_me;
    if (gap < best.gap) best = {static_cast<int>(j), gap, o.v, under_plan, coordinated(o)};
  }
  return best;
}

PlanResult Simulation::plan_for(Agent& a, double t) {
  const int qid = *a.queue_id;
  PlanResult pr = coordinator_.plan(coordinator_.entry(qid), a.state, t);
  const Agent* leader = nullptr;
  for (const Agent& o : agents_) {
    if (o.state.approach() != a.state.approach() || o.state.pos.s <= a.state.pos.s) continue;
    if (!leader || o.state.pos.s < leader->state.pos.s) leader = &o;
  }
  if (!leader || leader->state.mode != Mode::OptimalControl || !leader->plan) return pr;

  // The closed form ignores the vehicle ahead. When it would close in below
  // the safe distance, arrive later instead.
  const auto short_of = [&](const PlanResult& r) {
    return plan_gap_margin(r.coefficients, *leader->plan, t, params_.geometry, params_.safety) <
           -kPlanGapSlack;
  };
  for (int k = 0; k < kMaxDefers && short_of(pr); ++k) {
    const double tm = coordinator_.entry(qid).tm;
    coordinator_.defer(qid, tm + kDeferStep, t);
    PlanResult later = coordinator_.plan(coordinator_.entry(qid), a.state, t);
    if (later.violations.size() > pr.violations.size()) {
      coordinator_.set_estimate(qid, tm, false);
      break;
    }
    pr = std::move(later);
  }
  return pr;
}

bool Simulation::replan(Agent& a, double t) {
  if (!a.queue_id) return false;
  const int qid = *a.queue_id;
  coordinator_.reschedule(qid, a.state, t);
  const QueueEntry& e = coordinator_.entry(qid);
  try {
    PlanResult pr = plan_for(a, t);
    if (needs_stop(pr)) return false;
    for (const auto& v : pr.violations) {
      ++log_.counters.plan_infeasible;
      event(t, a.state.id, EventType::PlanInfeasible,
            fmt::format("{} at t={:.3f} value={:.4f}", to_string(v.bound), v.t, v.value));
    }
    a.plan = pr.coefficients;
  } catch (const DegenerateHorizon&) {
    return false;
  }
  ++log_.counters.replans;
  event(t, a.state.id, EventType::Replan, fmt::format("tm={:.3f}", e.tm));
  return true;
}

void Simulation::update_schedule(double t) {
  const RoundaboutGeometry& g = params_.geometry;
  std::vector<std::pair<int, size_t>> order;
  for (size_t i = 0; i < agents_.size(); ++i) {
    const Agent& a = agents_[i];
    if (a.queue_id && a.state.pos.s < g.merge_entry(a.state.approach())) {
      order.emplace_back(*a.queue_id, i);
    }
  }
  std::sort(order.begin(), order.end());
  for (const auto& [qid, idx] : order) {
    const Agent& a = agents_[idx];
    coordinator_.set_yields(qid, a.state.approach() == Approach::Eastbound && !is_under_plan(a) &&
                                     !a.committed);
  }
  for (const auto& [qid, idx] : order) {
    Agent& a = agents_[idx];
    if (!is_under_plan(a)) {
      coordinator_.set_estimate(
          qid, coordinator_.estimate_human_merge_time(a.state, t, params_.driver.follow_up_time));
      continue;
    }
    if (a.state.pos.s >= g.control_exit()) continue;
    const QueueEntry* pred = coordinator_.scheduling_predecessor(qid);
    if (!pred) continue;
    const QueueEntry& e = coordinator_.entry(qid);
    if (e.tz - t < kMinReplanHorizon) continue;
    const double seen = e.pred_tm_seen.value_or(pred->tm);
    const bool moved = std::abs(pred->tm - seen) > params_.control.replan_threshold;
    const bool squeezed = pred->tm != seen &&
                          pred->tm + coordinator_.separation(pred->approach == e.approach) >
                              e.tm + kSqueezeTolerance;
    if ((moved || squeezed) && !replan(a, t)) {
      a.plan.reset();
      set_mode(a, Mode::Follow, t, "no feasible plan");
    }
  }
}

double Simulation::control(size_t i, double t, const std::vector<VehicleState>& snap) {
  const RoundaboutGeometry& g = params_.geometry;
  const DriverParams& dp = params_.driver;
  Agent& a = agents_[i];
  const VehicleState& me = snap[i];
  const Zone zone = zone_of(g, me.pos);
  const double v_des = desired_speed(zone, g.control_exit() - me.pos.s, dp);
  const LeaderRef phys = physical_leader(i, snap);

  const auto follow_cmd = [&](const LeaderRef& l) {
    FollowCommand c = car_following_accel(me.v, LeaderGap{l.gap, l.speed}, v_des, dp);
    if (c.emergency) {
      ++log_.counters.emergency_brakes;
      event(t, me.id, EventType::EmergencyBrake, fmt::format("leader={}", snap[l.index].id));
    }
    return c.u;
  };

  if (zone == Zone::EntryZone) {
    if (phys.index < 0) return 0.0;
    return std::min(0.0, follow_cmd(phys));
  }

  const SwitchParams sp{params_.safety, params_.control.switch_hysteresis, dp.comfort_decel};

  if (me.vclass == VehicleClass::CAV && a.state.mode == Mode::Follow && zone == Zone::ControlZone &&
      g.control_exit() - me.pos.s >= params_.control.follow_return_min_distance &&
      t - a.last_release_try >= kReleaseRetry) {
    a.last_release_try = t;
    bool release = true;
    if (phys.index >= 0) {
      release &= cav_safety_switch(phys.gap, me.v, phys.speed, SwitchState::Follow, sp) ==
                 SwitchState::OptimalControl;
    }
    const LeaderRef virt = virtual_leader(i, snap, false);
    if (virt.index >= 0) {
      release &= cav_safety_switch(virt.gap, me.v, virt.speed, SwitchState::Follow, sp) ==
                 SwitchState::OptimalControl;
    }
    if (release && replan(a, t)) set_mode(a, Mode::OptimalControl, t, "gap restored");
  }

  if (me.vclass == VehicleClass::CAV && a.state.mode == Mode::OptimalControl) {
    bool engage = false;
    int culprit = -1;
    if (phys.index >= 0 && !phys.coordinated &&
        cav_safety_switch(phys.gap, me.v, phys.speed, SwitchState::OptimalControl, sp) ==
            SwitchState::Follow) {
      engage = true;
      culprit = phys.index;
    }
    const LeaderRef virt = virtual_leader(i, snap, false);
    if (!engage && virt.index >= 0 &&
        cav_safety_switch(virt.gap, me.v, virt.speed, SwitchState::OptimalControl, sp) ==
            SwitchState::Follow) {
      engage = true;
      culprit = virt.index;
    }
    if (!engage) {
      const TrajectoryCoefficientsd& k = *a.plan;
      const double p = me.pos.s - g.control_entry();
      double p_ref, v_ref, u_ff;
      if (t <= k.valid_to) {
        const auto r = eval_unchecked(k, std::max(t, k.valid_from));
        p_ref = r.p;
        v_ref = r.v;
        u_ff = r.u;
      } else {
        p_ref = g.control_zone_length + g.roundabout_speed * (t - k.valid_to);
        v_ref = g.roundabout_speed;
        u_ff = 0.0;
      }
      return u_ff + params_.control.kp * (p_ref - p) + params_.control.kv * (v_ref - me.v);
    }
    a.plan.reset();
    set_mode(a, Mode::Follow, t, fmt::format("leader={}", snap[culprit].id));
  }

  // Car following: humans, CAVs in follow mode, CAVs past the merging zone.
  double u = car_following_accel(me.v, std::nullopt, v_des, dp).u;
  if (phys.index >= 0) u = std::min(u, follow_cmd(phys));
  const double c_me = corridor(me);
  if (c_me < 0.0) {
    const LeaderRef virt = virtual_leader(i, snap, true);
    if (virt.index >= 0) u = std::min(u, follow_cmd(virt));

    if (me.approach() == Approach::Eastbound && !a.committed) {
      const double d = -c_me;
      const bool first_in_line =
          phys.index < 0 || snap[phys.index].approach() != Approach::Eastbound ||
          corridor(snap[phys.index]) >= 0.0;
      const double decision = std::max(5.0, me.v * me.v / (2.0 * dp.comfort_decel));
      if (first_in_line && d <= decision) {
        GapDecision go;
        if (me.vclass == VehicleClass::Human) {
          std::vector<VehicleState> circulating;
          for (const VehicleState& o : snap) {
            if (o.approach() == Approach::Westbound && corridor(o) < g.merging_zone_arc) {
              circulating.push_back(o);
            }
          }
          go = gap_acceptance(me, circulating, t, last_proceed_eastbound_, dp, g);
        } else {
          go = connected_decision(i, t, snap);
        }
        if (go == GapDecision::Proceed) {
          a.committed = true;
          last_proceed_eastbound_ = t;
          event(t, me.id, EventType::Proceed, fmt::format("d={:.2f} v={:.2f}", d, me.v));
        }
      }
      if (!a.committed) {
        u = std::min(u, car_following_accel(me.v, LeaderGap{d, 0.0}, v_des, dp).u);
      }
    }
  }
  return u;
}

GapDecision Simulation::connected_decision(size_t i, double t,
                                           const std::vector<VehicleState>& snap) const {
  const RoundaboutGeometry& g = params_.geometry;
  const DriverParams& dp = params_.driver;
  const double same_road = coordinator_.separation(true);
  if (last_proceed_eastbound_ && t - *last_proceed_eastbound_ < same_road) return GapDecision::Yield;
  const VehicleState& me = snap[i];
  const double d = -corridor(me);
  const double accel = kConnectedAccelShare * dp.max_accel;
  const double v_cap = std::max(me.v, dp.desired_speed_roundabout);
  const double t_in = time_to_cover(d, me.v, accel, v_cap);
  const double t_out = time_to_cover(d + g.merging_zone_arc, me.v, accel, v_cap);

  std::vector<Occupancy> conflicts;
  for (size_t j = 0; j < snap.size(); ++j) {
    const VehicleState& o = snap[j];
    if (o.approach() != Approach::Westbound) continue;
    const double c = corridor(o);
    if (c >= g.merging_zone_arc) continue;
    const double v = std::max(o.v, 1.0);
    Occupancy occ{std::max(0.0, -c) / v, (g.merging_zone_arc - c) / v};
    if (c < 0.0 && o.mode == Mode::OptimalControl && agents_[j].queue_id) {
      const double tm = coordinator_.entry(*agents_[j].queue_id).tm;
      occ = {tm - t, tm - t + g.merging_zone_arc / g.roundabout_speed};
    }
    conflicts.push_back(occ);
  }
  return connected_gap_acceptance(t_in, t_out, conflicts, coordinator_.separation(false));
}

void Simulation::handle_crossings(Agent& a, const VehicleState& before, double t) {
  const RoundaboutGeometry& g = params_.geometry;
  const double dt = cfg_.step;
  const double s0 = before.pos.s;
  const double s1 = a.state.pos.s;
  VehicleRecord& rec = log_.vehicles[a.record];
  const auto crossing = [&](double x) -> std::optional<double> {
    if (s0 < x && x <= s1) return t + dt * (x - s0) / (s1 - s0);
    return std::nullopt;
  };
  const Approach ap = a.state.approach();

  if (const auto tc = crossing(g.control_entry())) {
    rec.t_enter_control = *tc;
    a.state.t_enter_control = *tc;
    VehicleState at = a.state;
    at.v = before.v + (a.state.v - before.v) * (*tc - t) / dt;
    const bool yields = ap == Approach::Eastbound && a.state.vclass == VehicleClass::Human;
    const QueueEntry& e = coordinator_.register_arrival(at, *tc, yields);
    a.queue_id = e.id;
    rec.queue_id = e.id;
    event(*tc, a.state.id, EventType::EnterControl, fmt::format("queue_id={} tm={:.3f}", e.id, e.tm));
    if (a.state.vclass == VehicleClass::CAV) {
      std::optional<PlanResult> pr;
      try {
        pr = plan_for(a, t + dt);
      } catch (const DegenerateHorizon&) {
      }
      if (pr && !needs_stop(*pr)) {
        for (const auto& v : pr->violations) {
          ++log_.counters.plan_infeasible;
          event(t + dt, a.state.id, EventType::PlanInfeasible,
                fmt::format("{} at t={:.3f} value={:.4f}", to_string(v.bound), v.t, v.value));
        }
        a.plan = pr->coefficients;
        set_mode(a, Mode::OptimalControl, t + dt, "registered");
      } else {
        set_mode(a, Mode::Follow, t + dt, "no feasible plan");
      }
    }
  }

  if (const auto tc = crossing(g.merge_entry(ap))) {
    rec.t_merge_entry = *tc;
    if (a.queue_id) {
      if (!is_under_plan(a)) coordinator_.set_estimate(*a.queue_id, *tc);
      coordinator_.set_yields(*a.queue_id, false);
    }
    merge_visits_.push_back({a.state.id, ap, *tc});
    double tm = std::numeric_limits<double>::quiet_NaN();
    if (a.queue_id) tm = coordinator_.entry(*a.queue_id).tm;
    event(*tc, a.state.id, EventType::EnterMerge, fmt::format("tm={:.3f}", tm));
  }

  if (const auto tc = crossing(g.merge_exit(ap))) {
    rec.tf_exit = *tc;
    if (a.queue_id) coordinator_.release(*a.queue_id, *tc);
    if (rec.t_merge_entry) {
      const double tolerance = cfg_.step;
      for (const MergeVisit& mv : merge_visits_) {
        if (mv.approach != ap && mv.entry >= *rec.t_merge_entry && mv.entry < *tc - tolerance) {
          ++log_.counters.lateral_conflicts;
          event(*tc, a.state.id, EventType::LateralConflict, fmt::format("with={}", mv.id));
        }
      }
    }
    if (a.state.vclass == VehicleClass::CAV && a.state.mode != Mode::Uncontrolled) {
      a.plan.reset();
      set_mode(a, Mode::Uncontrolled, *tc, "left merging zone");
    }
    event(*tc, a.state.id, EventType::ExitMerge);
  }

  if (const auto tc = crossing(g.route_length(ap))) {
    rec.t_exit_network = *tc;
    a.state.t_exit_network = *tc;
    ++log_.counters.exited;
    event(*tc, a.state.id, EventType::Despawn);
  }
}

void Simulation::check_safety(double t, bool logged_instant) {
  const std::vector<VehicleState> now = vehicles();
  for (size_t i = 0; i < agents_.size(); ++i) {
    Agent& a = agents_[i];
    const LeaderRef l = physical_leader(i, now);
    if (l.index < 0) {
      a.in_negative_gap = false;
      continue;
    }
    if (l.gap <= 0.0) {
      if (!a.in_negative_gap) {
        ++log_.counters.negative_gaps;
        event(t, a.state.id, EventType::NegativeGap,
              fmt::format("leader={} gap={:.3f}", now[l.index].id, l.gap));
      }
      a.in_negative_gap = true;
    } else {
      a.in_negative_gap = false;
    }
    if (logged_instant && is_under_plan(a) && l.under_plan) {
      const double need = safe_distance(a.state.v, params_.safety) - kHeadwayTolerance;
      if (l.gap < need) {
        ++log_.counters.headway_shortfalls;
        event(t, a.state.id, EventType::HeadwayShortfall,
              fmt::format("leader={} gap={:.3f} need={:.3f}", now[l.index].id, l.gap, need));
      }
    }
  }
}

void Simulation::step() {
  if (done()) return;
  const double t = time();
  const double dt = cfg_.step;
  const int per_log = cfg_.steps_per_log();

  spawn_due(t);
  if (step_index_ % per_log == 0) sample(t);

  const std::vector<VehicleState> snap = vehicles();
  snap_committed_.assign(agents_.size(), 0);
  for (size_t i = 0; i < agents_.size(); ++i) snap_committed_[i] = is_committed(agents_[i]);

  update_schedule(t);

  std::vector<double> command(agents_.size());
  for (size_t i = 0; i < agents_.size(); ++i) command[i] = control(i, t, snap);

  const RoundaboutGeometry& g = params_.geometry;
  for (size_t i = 0; i < agents_.size(); ++i) {
    Agent& a = agents_[i];
    const VehicleState before = a.state;
    integrate(a.state, command[i], dt, params_.limits);
    handle_crossings(a, before, t);
    VehicleRecord& rec = log_.vehicles[a.record];
    if (a.state.pos.s >= g.route_length(a.state.approach())) continue;
    const Zone z = zone_of(g, a.state.pos);
    if (z == Zone::ControlZone) rec.min_control_zone_speed = std::min(rec.min_control_zone_speed, a.state.v);
    if (corridor(a.state) < 0.0 && a.state.v < kStoppedSpeed) rec.stopped_before_merge = true;
  }

  agents_.erase(std::remove_if(agents_.begin(), agents_.end(),
                               [&](const Agent& a) { return a.state.t_exit_network.has_value(); }),
                agents_.end());

  ++step_index_;
  log_.counters.steps = step_index_;
  check_safety(time(), step_index_ % per_log == 0);

  if (!merge_visits_.empty() && merge_visits_.front().entry < time() - 120.0) {
    merge_visits_.erase(merge_visits_.begin(),
                        std::find_if(merge_visits_.begin(), merge_visits_.end(),
                                     [&](const MergeVisit& m) { return m.entry >= time() - 120.0; }));
  }
}

RunLog Simulation::finish() {
  if (step_index_ % cfg_.steps_per_log() == 0) sample(time());
  log_.counters.in_network = static_cast<int>(agents_.size());
  log_.counters.unspawned = static_cast<int>(pending_[0].size() + pending_[1].size());
  for (const auto& list : pending_) log_.unspawned.insert(log_.unspawned.end(), list.begin(), list.end());
  for (VehicleRecord& rec : log_.vehicles) {
    if (!rec.queue_id) continue;
    const QueueEntry& e = coordinator_.entry(*rec.queue_id);
    rec.tm = e.tm;
    rec.tz = e.tz;
    rec.tm_estimated = e.estimated;
  }
  log_.queue_events = coordinator_.events();
  log_.queue = coordinator_.entries();
  return std::move(log_);
}

RunLog run(const SimConfig& cfg, const ModelParams& params) {
  Simulation sim(cfg, params);
  while (!sim.done()) sim.step();
  return sim.finish();
}

}  // namespace roundabout
