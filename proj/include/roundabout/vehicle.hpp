#pragma once

#include <optional>
#include <string_view>

#include "roundabout/geometry.hpp"

namespace roundabout {

enum class VehicleClass { CAV, Human };

enum class Mode { Uncontrolled, OptimalControl, Follow, HumanDriving };

inline std::string_view to_string(VehicleClass c) { return c == VehicleClass::CAV ? "CAV" : "Human"; }

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Uncontrolled: return "Uncontrolled";
    case Mode::OptimalControl: return "OptimalControl";
    case Mode::Follow: return "Follow";
    case Mode::HumanDriving: return "HumanDriving";
  }
  return "?";
}

/// Kinematic state of one vehicle: position along its fixed route, speed,
/// applied acceleration and the control mode that produced it.
struct VehicleState {
  int id = 0;
  VehicleClass vclass = VehicleClass::Human;
  RoutePosition pos;
  double v = 0.0;
  double u = 0.0;
  Mode mode = Mode::Uncontrolled;
  double t_spawn = 0.0;
  std::optional<double> t_enter_control;
  std::optional<double> t_exit_network;

  Approach approach() const { return pos.approach; }
};

}  // namespace roundabout
