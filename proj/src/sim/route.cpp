#include "dl/sim/route.hpp"

#include <algorithm>
#include <cmath>

namespace dl::sim {

namespace {

Vec2 unit(Vec2 v) {
  const double n = v.norm();
  require(n > 1e-9, "unit(): zero-length vector");
  return v * (1.0 / n);
}

// Intersection of lines (p0 + t*d0) and (p1 + u*d1); falls back to the
// midpoint when near parallel (straight-through junctions).
Vec2 line_intersect(Vec2 p0, Vec2 d0, Vec2 p1, Vec2 d1) {
  const double den = d0.cross(d1);
  if (std::abs(den) < 1e-9) return (p0 + p1) * 0.5;
  const double t = (p1 - p0).cross(d1) / den;
  return p0 + d0 * t;
}

void append_point(std::vector<RoutePoint>& pts, Vec2 p, Command cmd) {
  if (!pts.empty() && (p - pts.back().p).norm() < 1e-6) return;
  RoutePoint rp;
  rp.p = p;
  rp.s = pts.empty() ? 0.0 : pts.back().s + (p - pts.back().p).norm();
  rp.cmd = cmd;
  pts.push_back(rp);
}

}  // namespace

Route build_route(const MapData& map, const std::vector<int>& node_seq) {
  require(node_seq.size() >= 2, "build_route: need at least two nodes");
  for (size_t i = 1; i < node_seq.size(); ++i)
    require(node_seq[i] != node_seq[i - 1], "build_route: repeated node");

  Route route;
  route.node_seq = node_seq;
  const size_t nseg = node_seq.size() - 1;

  // Lane segment endpoints per leg, cut back at junction nodes.
  std::vector<Vec2> seg_a(nseg), seg_b(nseg), seg_dir(nseg);
  for (size_t i = 0; i < nseg; ++i) {
    const Vec2 a = map.nodes[node_seq[i]].pos;
    const Vec2 b = map.nodes[node_seq[i + 1]].pos;
    const Vec2 d = unit(b - a);
    const Vec2 right{d.y, -d.x};
    const double cut_a = i == 0 ? 10.0 : kJunctionCut;
    const double cut_b = i == nseg - 1 ? 10.0 : kJunctionCut;
    require((b - a).norm() > cut_a + cut_b + 1.0, "build_route: leg too short for cuts");
    seg_a[i] = a + d * cut_a + right * kLaneOffset;
    seg_b[i] = b - d * cut_b + right * kLaneOffset;
    seg_dir[i] = d;
  }

  struct TurnArc {
    size_t first_pt, last_pt;  // indices into route.pts
    Command cmd;
    double total_turn;
  };
  std::vector<TurnArc> arcs;

  for (size_t i = 0; i < nseg; ++i) {
    // Straight lane piece, ~1 m spacing.
    const double len = (seg_b[i] - seg_a[i]).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int k = 0; k <= steps; ++k)
      append_point(route.pts, seg_a[i] + (seg_b[i] - seg_a[i]) * (double(k) / steps),
                   Command::KeepStraight);

    if (i + 1 < nseg) {  // junction arc to the next leg
      const Vec2 p0 = seg_b[i], p2 = seg_a[i + 1];
      const Vec2 p1 = line_intersect(p0, seg_dir[i], p2, seg_dir[i + 1]);
      const double cross = seg_dir[i].cross(seg_dir[i + 1]);
      Command cmd = Command::KeepStraight;
      if (cross > 0.5) cmd = Command::TurnLeft;
      if (cross < -0.5) cmd = Command::TurnRight;
      TurnArc arc;
      arc.first_pt = route.pts.size();
      const int asteps = 24;
      for (int k = 1; k <= asteps; ++k) {
        const double t = double(k) / asteps;
        const Vec2 bp = p0 * ((1 - t) * (1 - t)) + p1 * (2 * (1 - t) * t) + p2 * (t * t);
        append_point(route.pts, bp, Command::KeepStraight);
      }
      arc.last_pt = route.pts.size() - 1;
      arc.cmd = cmd;
      arc.total_turn = std::atan2(seg_dir[i].cross(seg_dir[i + 1]), seg_dir[i].dot(seg_dir[i + 1]));
      if (cmd != Command::KeepStraight) arcs.push_back(arc);
    }
  }
  require(route.pts.size() >= 2, "build_route: degenerate route");

  // Headings and curvature from the polyline.
  const size_t n = route.pts.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 d = i + 1 < n ? route.pts[i + 1].p - route.pts[i].p
                             : route.pts[i].p - route.pts[i - 1].p;
    route.pts[i].heading = std::atan2(d.y, d.x);
  }
  for (size_t i = 0; i < n; ++i) {
    if (i + 1 >= n) {
      route.pts[i].curvature = route.pts[i - 1].curvature;
      break;
    }
    const double ds = route.pts[i + 1].s - route.pts[i].s;
    route.pts[i].curvature =
        ds > 1e-9 ? normalize_angle(route.pts[i + 1].heading - route.pts[i].heading) / ds : 0.0;
  }

  // Command windows: announced kCommandLead before the arc, cleared once the
  // heading change reaches kCommandComplete of the total turn.
  for (const TurnArc& arc : arcs) {
    const double s_begin = route.pts[arc.first_pt].s - kCommandLead;
    const double h0 = route.pts[arc.first_pt == 0 ? 0 : arc.first_pt - 1].heading;
    size_t done = arc.last_pt;
    for (size_t i = arc.first_pt; i <= arc.last_pt; ++i) {
      const double turned = std::abs(normalize_angle(route.pts[i].heading - h0));
      if (turned >= kCommandComplete * std::abs(arc.total_turn)) {
        done = i;
        break;
      }
    }
    for (size_t i = 0; i < n; ++i)
      if (route.pts[i].s >= s_begin && i < done) route.pts[i].cmd = arc.cmd;
  }
  return route;
}

size_t Route::advance(Vec2 p, size_t last) const {
  require(last < pts.size(), "route advance: bad start index");
  const double window = 80.0;
  size_t best = last;
  double best_d = (p - pts[last].p).norm();
  for (size_t i = last + 1; i < pts.size(); ++i) {
    if (pts[i].s - pts[last].s > window) break;
    const double d = (p - pts[i].p).norm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double Route::lateral_offset(Vec2 p, size_t idx) const {
  require(idx < pts.size(), "route lateral_offset: bad index");
  Pose2D ref{pts[idx].p.x, pts[idx].p.y, pts[idx].heading};
  return world_to_body(p, ref).x;
}

RoutePoint Route::at_arclength(double s) const {
  require(!pts.empty(), "route at_arclength: empty route");
  s = std::clamp(s, 0.0, pts.back().s);
  auto it = std::lower_bound(pts.begin(), pts.end(), s,
                             [](const RoutePoint& rp, double v) { return rp.s < v; });
  if (it == pts.begin()) return pts.front();
  const RoutePoint& hi = *it;
  const RoutePoint& lo = *(it - 1);
  const double span = hi.s - lo.s;
  const double alpha = span > 1e-12 ? (s - lo.s) / span : 0.0;
  RoutePoint out;
  out.p = lo.p + (hi.p - lo.p) * alpha;
  out.s = s;
  out.heading = lerp_angle(lo.heading, hi.heading, alpha);
  out.curvature = lo.curvature + (hi.curvature - lo.curvature) * alpha;
  out.cmd = lo.cmd;
  return out;
}

size_t Route::index_at(double s) const {
  require(!pts.empty(), "route index_at: empty route");
  auto it = std::lower_bound(pts.begin(), pts.end(), s,
                             [](const RoutePoint& rp, double v) { return rp.s < v; });
  if (it == pts.end()) --it;
  return static_cast<size_t>(it - pts.begin());
}

std::vector<int> random_route_nodes(const MapData& map, Rng& rng, double min_len, double max_len) {
  require(min_len > 0 && max_len >= min_len, "random_route_nodes: bad length range");
  const double target = rng.uniform(min_len, max_len);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const int start = static_cast<int>(rng.uniform_int(map.nodes.size()));
    if (map.nodes[start].edges.empty()) continue;
    std::vector<int> seq{start};
    // Simple path only: a route that revisits a junction crosses itself, and
    // traffic on the later leg would cut straight through the earlier one.
    std::vector<bool> visited(map.nodes.size(), false);
    visited[start] = true;
    double total = 0;
    while (total < target) {
      const MapNode& cur = map.nodes[seq.back()];
      std::vector<int> options;
      for (int ei : cur.edges) {
        const MapEdge& e = map.edges[ei];
        const int next = e.a == seq.back() ? e.b : e.a;
        if (!visited[next]) options.push_back(ei);
      }
      if (options.empty()) break;  // dead end, retry from a new start
      const int ei = options[rng.uniform_int(options.size())];
      const MapEdge& e = map.edges[ei];
      const int next = e.a == seq.back() ? e.b : e.a;
      seq.push_back(next);
      visited[next] = true;
      total += e.length;
    }
    if (total >= min_len && seq.size() >= 2) return seq;
  }
  throw SimError("random_route_nodes: failed to draw a route in range");
}

}  // namespace dl::sim
