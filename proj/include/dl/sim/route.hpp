#pragma once

#include "dl/rng.hpp"
#include "dl/sim/map.hpp"

namespace dl::sim {

struct RoutePoint {
  Vec2 p;
  double s = 0;          // arclength from route start
  double heading = 0;    // tangent direction
  double curvature = 0;  // signed d(heading)/ds
  Command cmd = Command::KeepStraight;
};

// Dense lane-center polyline through a node sequence: straight lane segments
// offset kLaneOffset to the right of travel, blended through junctions with
// quadratic Bezier arcs. Point spacing is roughly 1 m.
struct Route {
  std::vector<RoutePoint> pts;
  std::vector<int> node_seq;

  double length() const { return pts.back().s; }

  // Nearest-point index, monotonic: never returns less than `last`, looks at
  // most ~80 m ahead. Tracks progress along the route as the vehicle moves.
  size_t advance(Vec2 p, size_t last) const;

  // Signed lateral offset of p from the route at index idx, right positive.
  double lateral_offset(Vec2 p, size_t idx) const;

  RoutePoint at_arclength(double s) const;  // clamped, interpolated

  size_t index_at(double s) const;  // first index with pts[i].s >= s, clamped
};

// How far ahead of the junction the turn command is announced.
inline constexpr double kCommandLead = 15.0;
// Fraction of the turn's heading change after which the command reverts.
inline constexpr double kCommandComplete = 0.70;

Route build_route(const MapData& map, const std::vector<int>& node_seq);

// Random simple path over the road graph (no node revisited, so the lane
// never crosses itself) whose edge length reaches a target in [min_len, max_len].
std::vector<int> random_route_nodes(const MapData& map, Rng& rng, double min_len, double max_len);

}  // namespace dl::sim
