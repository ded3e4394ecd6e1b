#include "dl/sim/map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dl::sim {

namespace {

double point_segment_dist(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  if (len2 <= 0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

}  // namespace

int MapData::node_index(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  throw DataError("map " + name + ": unknown node id " + id);
}

double MapData::clearance(Vec2 p) const {
  double best = 1e300;
  for (const MapEdge& e : edges)
    best = std::min(best, point_segment_dist(p, nodes[e.a].pos, nodes[e.b].pos));
  for (const MapNode& n : nodes) {
    const double d = (p - n.pos).norm();
    if (n.edges.size() >= 3)  // only real junctions get the open paved pad
      best = std::min(best, std::max(0.0, d - (kJunctionPad - kRoadHalfWidth - kShoulder)));
    else
      best = std::min(best, d);
  }
  return best;
}

bool MapData::on_drivable(Vec2 p, double extra_margin) const {
  return clearance(p) <= kRoadHalfWidth + kShoulder + extra_margin;
}

MapData parse_map_text(const std::string& text, const std::string& origin) {
  MapData m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_bounds = false;
  std::map<std::string, int> ids;
  auto fail = [&](const std::string& why) {
    throw DataError(origin + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok == "town") {
      if (!(ls >> m.name)) fail("town needs a name");
    } else if (tok == "bounds") {
      if (!(ls >> m.min_corner.x >> m.min_corner.y >> m.max_corner.x >> m.max_corner.y))
        fail("bounds needs 4 numbers");
      have_bounds = true;
    } else if (tok == "node") {
      MapNode n;
      if (!(ls >> n.id >> n.pos.x >> n.pos.y)) fail("node needs id x y");
      if (ids.count(n.id)) fail("duplicate node id " + n.id);
      ids[n.id] = static_cast<int>(m.nodes.size());
      m.nodes.push_back(n);
    } else if (tok == "edge") {
      std::string a, b;
      if (!(ls >> a >> b)) fail("edge needs two node ids");
      if (!ids.count(a) || !ids.count(b)) fail("edge references unknown node");
      MapEdge e;
      e.a = ids[a];
      e.b = ids[b];
      if (e.a == e.b) fail("self edge");
      e.length = (m.nodes[e.a].pos - m.nodes[e.b].pos).norm();
      if (e.length < 2 * kJunctionCut + 10)
        fail("edge " + a + "-" + b + " too short for junction cuts");
      m.nodes[e.a].edges.push_back(static_cast<int>(m.edges.size()));
      m.nodes[e.b].edges.push_back(static_cast<int>(m.edges.size()));
      m.edges.push_back(e);
    } else if (tok == "prop") {
      MapProp p;
      if (!(ls >> p.kind >> p.pos.x >> p.pos.y >> p.w >> p.h >> p.height)) {
        fail("prop needs kind x y w h height [yaw shade]");
      }
      ls >> p.yaw >> p.shade;  // optional
      m.props.push_back(p);
    } else {
      fail("unknown directive " + tok);
    }
  }
  if (m.name.empty()) throw DataError(origin + ": missing town directive");
  if (!have_bounds) throw DataError(origin + ": missing bounds directive");
  if (m.edges.empty()) throw DataError(origin + ": map has no roads");
  for (const MapProp& p : m.props) {
    if (p.kind != "building" && p.kind != "tree" && p.kind != "pole")
      throw DataError(origin + ": unknown prop kind " + p.kind);
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    for (double sx : {-0.5, 0.0, 0.5})
      for (double sy : {-0.5, 0.0, 0.5}) {
        const Vec2 corner{p.pos.x + sx * p.w * c - sy * p.h * s,
                          p.pos.y + sx * p.w * s + sy * p.h * c};
        if (m.on_drivable(corner))
          throw DataError(origin + ": prop at (" + std::to_string(p.pos.x) + "," +
                          std::to_string(p.pos.y) + ") overlaps the road");
      }
  }
  return m;
}

MapData parse_map(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open map file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_map_text(ss.str(), path);
}

}  // namespace dl::sim
