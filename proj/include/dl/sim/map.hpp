#pragma once

#include "dl/sim/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace dl::sim {

// Road geometry constants shared by the route builder, renderer and the
// drivable-area test.
inline constexpr double kLaneOffset = 3.0;       // lane center distance from the road axis
inline constexpr double kRoadHalfWidth = 6.0;    // paved half width around the axis
inline constexpr double kShoulder = 2.0;         // margin beyond pavement before off-road
inline constexpr double kJunctionCut = 16.0;     // lanes stop this far from a junction node
inline constexpr double kJunctionPad = 18.5;     // drivable disc radius around a junction

struct MapNode {
  std::string id;
  Vec2 pos;
  std::vector<int> edges;  // indices into MapData::edges
};

struct MapEdge {
  int a = 0, b = 0;  // node indices
  double length = 0;
};

struct MapProp {
  std::string kind;  // building, tree, pole
  Vec2 pos;          // footprint center
  double w = 0, h = 0, height = 0;
  double yaw = 0;
  int shade = 0;  // small per-instance color variation
};

struct MapData {
  std::string name;
  Vec2 min_corner, max_corner;
  std::vector<MapNode> nodes;
  std::vector<MapEdge> edges;
  std::vector<MapProp> props;

  int node_index(const std::string& id) const;  // throws DataError when missing
  // True when a point is on pavement (within shoulder margin) of any road or
  // junction disc.
  bool on_drivable(Vec2 p, double extra_margin = 0.0) const;
  // Distance from p to the nearest road axis or junction center (minus pad).
  double clearance(Vec2 p) const;
};

// Parses the line-oriented map format described in docs/map-format.md.
MapData parse_map(const std::string& path);
MapData parse_map_text(const std::string& text, const std::string& origin);

}  // namespace dl::sim
