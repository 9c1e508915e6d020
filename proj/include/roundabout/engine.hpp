#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "roundabout/coordinator.hpp"
#include "roundabout/driver_model.hpp"
#include "roundabout/geometry.hpp"
#include "roundabout/trajectory.hpp"
#include "roundabout/vehicle.hpp"

namespace roundabout {

struct SimConfig {
  double step = 0.05;
  double duration = 1200.0;
  double dispatch_window = 900.0;
  double demand_per_approach = 800.0;  // veh/h
  int total_vehicles = 400;
  double mpr = 0.0;
  std::uint64_t seed = 1;
  double min_generation_headway = 1.5;
  double log_trajectory_every = 1.0;
  double aggregate_every = 60.0;

  void validate() const;
  int steps() const;
  int steps_per_log() const;
};

/// Engine-level control settings not tied to a single module.
struct ControlParams {
  double kp = 0.5;  // s^-2, position feedback of plan tracking
  double kv = 1.0;  // s^-1, speed feedback of plan tracking
  double replan_threshold = 0.5;  // s, predecessor tm change that forces a replan
  double switch_hysteresis = 1.2;
  /// A CAV leaves follow mode only with at least this much control zone left.
  double follow_return_min_distance = 30.0;
  /// Extra clearance beyond the standstill distance required to spawn.
  double spawn_clearance = 2.0;

  void validate() const;
};

struct ModelParams {
  RoundaboutGeometry geometry;
  ActuationLimits limits;
  SafetyParams safety;
  DriverParams driver;
  ControlParams control;

  void validate() const;
};

struct Arrival {
  double t = 0.0;
  VehicleClass vclass = VehicleClass::Human;
  Approach approach = Approach::Eastbound;
};

struct ArrivalSchedule {
  std::vector<Arrival> eastbound;
  std::vector<Arrival> westbound;
};

/// Spawn times and class labels. Headways are shifted exponential, rescaled
/// so that exactly total_vehicles/2 arrivals per approach land inside the
/// dispatch window. Times and labels come from separate streams of the same
/// seed, so a higher penetration rate relabels a superset of the CAVs drawn
/// at a lower one. Throws ConfigError when the window cannot hold the
/// arrivals at the minimum headway.
ArrivalSchedule generate_arrivals(const SimConfig& cfg);

enum class EventType {
  Spawn,
  SpawnBlocked,
  EnterControl,
  EnterMerge,
  ExitMerge,
  Despawn,
  ModeChange,
  Replan,
  PlanInfeasible,
  Proceed,
  LateralConflict,
  EmergencyBrake,
  NegativeGap,
  HeadwayShortfall,
};

std::string_view to_string(EventType e);

struct Event {
  double t = 0.0;
  int id = 0;
  EventType type = EventType::Spawn;
  std::string detail;
};

struct TrajectorySample {
  double t = 0.0;
  int id = 0;
  VehicleClass vclass = VehicleClass::Human;
  Approach approach = Approach::Eastbound;
  double s = 0.0;
  double v = 0.0;
  double u = 0.0;
  Mode mode = Mode::Uncontrolled;
  Zone zone = Zone::EntryZone;
};

struct VehicleRecord {
  int id = 0;
  VehicleClass vclass = VehicleClass::Human;
  Approach approach = Approach::Eastbound;
  double t_spawn = 0.0;
  std::optional<double> t_enter_control;
  std::optional<int> queue_id;
  std::optional<double> tm;
  std::optional<double> tz;
  bool tm_estimated = true;
  std::optional<double> t_merge_entry;  // observed
  std::optional<double> tf_exit;
  std::optional<double> t_exit_network;
  double min_control_zone_speed = std::numeric_limits<double>::infinity();
  bool stopped_before_merge = false;
  bool ever_followed = false;
  int mode_changes = 0;
};

struct RunCounters {
  int steps = 0;
  int spawned = 0;
  int exited = 0;
  int in_network = 0;
  int unspawned = 0;
  int lateral_conflicts = 0;
  int emergency_brakes = 0;
  int negative_gaps = 0;
  int headway_shortfalls = 0;
  int plan_infeasible = 0;
  int replans = 0;
  int mode_chatter = 0;  // OC/Follow flips less than 1 s after the previous one
};

struct RunLog {
  SimConfig config;
  std::vector<TrajectorySample> trajectories;
  std::vector<Event> events;
  std::vector<VehicleRecord> vehicles;  // ordered by id
  std::vector<QueueEvent> queue_events;
  std::vector<QueueEntry> queue;
  std::vector<Arrival> unspawned;  // arrivals still waiting to enter at the end
  RunCounters counters;
};

/// Applies an acceleration over one step: clamp to the actuation limits,
/// v' = clamp(v + u dt, 0, v_max), s' = s + v' dt. Returns the acceleration
/// actually realized, (v' - v) / dt.
double integrate(VehicleState& state, double u, double dt, const ActuationLimits& limits);

/// Fixed-step simulation of one (configuration, seed) pair.
class Simulation {
 public:
  Simulation(SimConfig cfg, ModelParams params);
  Simulation(SimConfig cfg, ModelParams params, ArrivalSchedule arrivals);

  /// Advances the world by one control step.
  void step();
  bool done() const { return step_index_ >= cfg_.steps(); }
  double time() const { return step_index_ * cfg_.step; }

  /// (vehicle id, approach) of every vehicle inside the merging zone.
  std::vector<std::pair<int, Approach>> merging_zone_occupancy() const;

  std::vector<VehicleState> vehicles() const;
  const Coordinator& coordinator() const { return coordinator_; }
  const std::vector<Event>& events() const { return log_.events; }

  /// Closes the run: final trajectory sample, residual counts.
  RunLog finish();

 private:
  struct Agent {
    VehicleState state;
    std::optional<int> queue_id;
    std::optional<TrajectoryCoefficientsd> plan;
    bool committed = false;
    bool in_negative_gap = false;
    double last_mode_change = -std::numeric_limits<double>::infinity();
    double last_release_try = -std::numeric_limits<double>::infinity();
    size_t record = 0;
  };

  struct LeaderRef {
    int index = -1;
    double gap = std::numeric_limits<double>::infinity();
    double speed = 0.0;
    bool under_plan = false;
    bool coordinated = false;
  };

  void spawn_due(double t);
  void sample(double t);
  void update_schedule(double t);
  double control(size_t i, double t, const std::vector<VehicleState>& snap);
  GapDecision connected_decision(size_t i, double t, const std::vector<VehicleState>& snap) const;
  void handle_crossings(Agent& a, const VehicleState& before, double t);
  void check_safety(double t, bool logged_instant);
  void set_mode(Agent& a, Mode m, double t, const std::string& why);
  bool replan(Agent& a, double t);
  PlanResult plan_for(Agent& a, double t);

  LeaderRef physical_leader(size_t i, const std::vector<VehicleState>& snap) const;
  LeaderRef virtual_leader(size_t i, const std::vector<VehicleState>& snap, bool plan_leaders) const;
  bool is_under_plan(const Agent& a) const;
  bool is_committed(const Agent& a) const;
  double corridor(const VehicleState& s) const;

  void event(double t, int id, EventType type, std::string detail = {});

  SimConfig cfg_;
  ModelParams params_;
  Coordinator coordinator_;
  std::deque<Arrival> pending_[2];
  bool blocked_logged_[2] = {false, false};
  std::vector<Agent> agents_;
  std::vector<char> snap_committed_;
  std::optional<double> last_proceed_eastbound_;
  struct MergeVisit {
    int id;
    Approach approach;
    double entry;
  };
  std::vector<MergeVisit> merge_visits_;
  int next_id_ = 1;
  int step_index_ = 0;
  RunLog log_;
};

/// Runs the full duration for one configuration.
RunLog run(const SimConfig& cfg, const ModelParams& params);

}  // namespace roundabout
