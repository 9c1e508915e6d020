#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "roundabout/geometry.hpp"
#include "roundabout/trajectory.hpp"
#include "roundabout/vehicle.hpp"

namespace roundabout {

struct SafetyParams {
  double standstill = 1.5;  // m
  double headway = 1.2;     // s

  void validate() const {
    if (!(standstill > 0.0)) throw ConfigError("safety standstill must be positive");
    if (!(headway > 0.0)) throw ConfigError("safety headway must be positive");
  }
};

/// Speed-proportional rear-end safe distance.
inline double safe_distance(double v, const SafetyParams& p) { return p.standstill + p.headway * v; }

/// Coordinator bookkeeping for one vehicle. Times in seconds.
struct QueueEntry {
  int id = 0;          // FIFO order of control-zone entry, starting at 1
  int vehicle_id = 0;  // engine-side vehicle identity
  VehicleClass vclass = VehicleClass::Human;
  Approach approach = Approach::Eastbound;
  double t0 = 0.0;
  double v0 = 0.0;
  int lambda = 0;
  double vbar = 0.0;
  double tm = 0.0;
  double tz = 0.0;
  std::optional<double> tf_exit;
  /// Humans and CAVs outside optimal control carry predicted, not commanded,
  /// merging times.
  bool estimated = false;
  /// Eastbound vehicle that enters only through gap acceptance and has not
  /// been let through yet. Westbound vehicles have priority over it.
  bool yields = false;
  /// Predecessor merging time the current plan was built against.
  std::optional<double> pred_tm_seen;
};

/// Inputs of the merging-time recursion for the control-zone distance still
/// to travel. At registration `start` is t0 and `distance` is L; replans use
/// the current time and remaining distance.
struct MergeTimeRequest {
  double start = 0.0;
  double distance = 0.0;
  double entry_speed = 0.0;
  double vbar = 0.0;
  int lambda = 0;
};

enum class QueueEventType { Register, Assign, Replan, Release };

struct QueueEvent {
  double t = 0.0;
  QueueEventType type = QueueEventType::Register;
  int id = 0;
  int vehicle_id = 0;
  VehicleClass vclass = VehicleClass::Human;
  Approach approach = Approach::Eastbound;
  double t0 = 0.0;
  double tm = 0.0;
  double tz = 0.0;
  std::optional<double> tf_exit;
  std::string detail;
};

std::string_view to_string(QueueEventType t);

/// Plan plus the bound violations found on it (logged, never clamped).
struct PlanResult {
  TrajectoryCoefficientsd coefficients;
  std::vector<Violation<double>> violations;
};

/// FIFO control-zone queue. Assigns merging-zone entry times so that
/// consecutive vehicles on the same road keep the safe distance at the merge
/// and vehicles from different roads never share the merging zone, within
/// the speed window reachable under the actuation limits.
class Coordinator {
 public:
  Coordinator(RoundaboutGeometry geom, ActuationLimits limits, SafetyParams safety);

  /// Appends the vehicle with the next FIFO id and assigns its merging time.
  /// Throws AlreadyRegistered if the vehicle is already queued.
  const QueueEntry& register_arrival(const VehicleState& state, double t, bool yields = false);

  /// Merging time of `entry` given its immediate predecessor.
  double schedule_merge_time(const QueueEntry& entry, const QueueEntry& pred) const;

  /// The recursion in its general form. Without a predecessor the desired
  /// time (holding entry speed) takes the predecessor term's place.
  double merge_time(const MergeTimeRequest& req, std::optional<double> pred_tm,
                    bool same_road) const;

  /// Earliest/latest merging times the request can reach within the speed
  /// limits.
  double earliest_merge_time(const MergeTimeRequest& req) const;
  double latest_merge_time(const MergeTimeRequest& req) const;

  /// Trajectory from the current state to the control-zone exit at tz,
  /// arriving at the roundabout speed. Throws DegenerateHorizon when tz is
  /// too close.
  PlanResult plan(const QueueEntry& entry, const VehicleState& state, double now) const;

  /// Predicted merging time for a vehicle that does not follow a plan.
  double estimate_human_merge_time(const VehicleState& state, double now,
                                   double follow_up_time) const;

  /// Re-derives a CAV's merging time from its current state against its
  /// predecessor. Returns the new tm.
  double reschedule(int id, const VehicleState& state, double now);

  /// Moves a commanded entry's merging time later, to `tm`.
  void defer(int id, double tm, double now);

  /// Overwrites the merging time of a non-commanded entry with a fresh
  /// estimate (or with its observed merging-zone entry).
  void set_estimate(int id, double tm, bool estimated = true);

  /// Records the merging-zone exit. Throws AlreadyReleased on repeat.
  void release(int id, double t);

  const QueueEntry& entry(int id) const { return entries_.at(static_cast<size_t>(id - 1)); }
  QueueEntry& entry(int id) { return entries_.at(static_cast<size_t>(id - 1)); }
  const QueueEntry* predecessor(int id) const { return id > 1 ? &entry(id - 1) : nullptr; }
  /// Entry whose merging time bounds this one: the immediate predecessor,
  /// except that westbound entries pass over eastbound entries still
  /// yielding at the give-way line.
  const QueueEntry* scheduling_predecessor(int id) const;
  void set_yields(int id, bool yields) { entry(id).yields = yields; }
  std::optional<int> id_of_vehicle(int vehicle_id) const;
  const std::vector<QueueEntry>& entries() const { return entries_; }
  const std::vector<QueueEvent>& events() const { return events_; }
  int active_count() const { return active_; }

  /// Separation the predecessor term adds for this pair.
  double separation(bool same_road) const;

  const RoundaboutGeometry& geometry() const { return geom_; }

 private:
  void log(double t, QueueEventType type, const QueueEntry& e, std::string detail = {});

  RoundaboutGeometry geom_;
  ActuationLimits limits_;
  SafetyParams safety_;
  std::vector<QueueEntry> entries_;
  std::unordered_map<int, int> by_vehicle_;
  std::vector<QueueEvent> events_;
  int active_ = 0;
};

}  // namespace roundabout
