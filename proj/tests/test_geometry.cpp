#include "roundabout/geometry.hpp"

#include <random>

#include <gtest/gtest.h>

#include "roundabout/errors.hpp"

namespace roundabout {
namespace {

TEST(Geometry, RouteLengths) {
  RoundaboutGeometry g;
  EXPECT_DOUBLE_EQ(g.route_length(Approach::Eastbound), 432.0);
  EXPECT_DOUBLE_EQ(g.route_length(Approach::Westbound), 532.0);
  g.exit_leg_length = 0.0;
  EXPECT_DOUBLE_EQ(g.route_length(Approach::Eastbound), 332.0);
}

TEST(Geometry, ZoneExamples) {
  const RoundaboutGeometry g;
  EXPECT_EQ(zone_of(g, {Approach::Eastbound, 10}), Zone::EntryZone);
  EXPECT_EQ(zone_of(g, {Approach::Eastbound, 320}), Zone::MergingZone);
  EXPECT_EQ(zone_of(g, {Approach::Westbound, 350}), Zone::CirculatingArc);
  EXPECT_EQ(zone_of(g, {Approach::Eastbound, 20}), Zone::ControlZone);
  EXPECT_EQ(zone_of(g, {Approach::Westbound, 420}), Zone::MergingZone);
  EXPECT_EQ(zone_of(g, {Approach::Westbound, 432}), Zone::ExitLeg);
  EXPECT_EQ(zone_of(g, {Approach::Eastbound, 432}), Zone::ExitLeg);
  EXPECT_THROW(zone_of(g, {Approach::Eastbound, 432.001}), OutOfRoute);
  EXPECT_THROW(zone_of(g, {Approach::Westbound, -0.1}), OutOfRoute);
}

// Every position lands in the zone whose [start, end) contains it, with the
// boundaries rebuilt here from the segment lengths.
TEST(Geometry, ZonesPartitionRoute) {
  const RoundaboutGeometry g;
  std::mt19937_64 rng(7);
  for (Approach a : {Approach::Eastbound, Approach::Westbound}) {
    const double arc = a == Approach::Westbound ? 100.0 : 0.0;
    const double edges[] = {0.0, 20.0, 320.0, 320.0 + arc, 332.0 + arc, 432.0 + arc};
    const Zone zones[] = {Zone::EntryZone, Zone::ControlZone, Zone::CirculatingArc,
                          Zone::MergingZone, Zone::ExitLeg};
    std::uniform_real_distribution<double> pos(0.0, edges[5]);
    for (int i = 0; i < 5000; ++i) {
      const double s = i < 6 ? edges[i] : pos(rng);
      if (s >= edges[5]) continue;
      int k = 0;
      while (!(edges[k] <= s && s < edges[k + 1])) ++k;
      ASSERT_EQ(zone_of(g, {a, s}), zones[k]) << s;
    }
  }
}

TEST(Geometry, DistanceToMerge) {
  const RoundaboutGeometry g;
  EXPECT_DOUBLE_EQ(distance_to_merge(g, {Approach::Eastbound, 20}), 300.0);
  EXPECT_DOUBLE_EQ(distance_to_merge(g, {Approach::Westbound, 20}), 400.0);
  EXPECT_DOUBLE_EQ(distance_to_merge(g, {Approach::Eastbound, 320}), 0.0);
  EXPECT_THROW(distance_to_merge(g, {Approach::Eastbound, 320.5}), NegativeDistance);
  EXPECT_DOUBLE_EQ(signed_distance_to_merge(g, {Approach::Eastbound, 330}), -10.0);
}

TEST(Geometry, FreeFlowTimes) {
  const RoundaboutGeometry g;
  EXPECT_NEAR(g.free_flow_time(Approach::Eastbound), 28.2713915298185, 1e-9);
  EXPECT_NEAR(g.free_flow_time(Approach::Westbound), 39.50734658599827, 1e-9);
}

TEST(Geometry, ArcTimeAndIndicator) {
  const RoundaboutGeometry g;
  EXPECT_EQ(approach_indicator(Approach::Eastbound), 0);
  EXPECT_EQ(approach_indicator(Approach::Westbound), 1);
  EXPECT_DOUBLE_EQ(g.arc_time(Approach::Eastbound), 0.0);
  EXPECT_DOUBLE_EQ(g.arc_time(Approach::Westbound), 100.0 / 8.9);
}

TEST(Geometry, ValidateRejects) {
  EXPECT_NO_THROW(RoundaboutGeometry{}.validate());
  RoundaboutGeometry g;
  g.control_zone_length = 250.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.merging_zone_arc = 0.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.circulating_arc = 250.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.roundabout_speed = 20.0;
  EXPECT_THROW(g.validate(), ConfigError);
  g = {};
  g.exit_leg_length = -1.0;
  EXPECT_THROW(g.validate(), ConfigError);
}

}  // namespace
}  // namespace roundabout
