#include "dl/sim/world.hpp"

#include <algorithm>
#include <cmath>

namespace dl::sim {

namespace {
// Substream tags keep the independent random streams from colliding.
constexpr uint64_t kNoiseTag = 0x6e6f6973ULL;    // noise windows
constexpr uint64_t kTrafficTag = 0x74726166ULL;  // traffic spawns
constexpr uint64_t kSpeckleTag = 0x7370656bULL;  // per-frame rain speckle
}  // namespace

const char* failure_name(FailureKind f) {
  switch (f) {
    case FailureKind::None: return "none";
    case FailureKind::Collision: return "collision";
    case FailureKind::OffRoad: return "off-road";
    case FailureKind::Timeout: return "timeout";
  }
  return "?";
}

World::World(MapData map, Route route, const WorldConfig& cfg)
    : map_(std::move(map)), route_(std::move(route)), cfg_(cfg) {
  require(cfg_.substeps >= 1, "world: substeps must be >= 1");
  const RoutePoint& start = route_.pts.front();
  ego_.pose = {start.p.x, start.p.y, start.heading};
  ego_.v = 0;
  if (cfg_.dynamic_traffic) spawn_traffic();
}

void World::spawn_traffic() {
  const double km = route_.length() / 1000.0;
  const int nveh = static_cast<int>(std::lround(cfg_.traffic_vehicles_per_km * km));
  const int nped = static_cast<int>(std::lround(cfg_.traffic_peds_per_km * km));
  Rng rng = Rng::substream(cfg_.seed, kTrafficTag);

  std::vector<double> used;
  for (int i = 0; i < nveh; ++i) {
    // Spawn ahead of the ego, spaced out along the route.
    double s = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 40 && !ok; ++attempt) {
      s = rng.uniform(45.0, std::max(46.0, route_.length() - 25.0));
      ok = true;
      for (double u : used)
        if (std::abs(u - s) < 18.0) ok = false;
      // Physical check too: explicit route node lists may overlap themselves.
      if (ok && (route_.at_arclength(s).p - ego_.pose.position()).norm() < 20.0) ok = false;
    }
    if (!ok) continue;
    used.push_back(s);
    const RoutePoint rp = route_.at_arclength(s);
    Agent a;
    a.params = VehicleParams::car();
    a.state.pose = {rp.p.x, rp.p.y, rp.heading};
    a.state.v = 0;
    a.target_speed = kCruiseSpeed * rng.uniform(0.55, 0.8);
    a.route_idx = route_.index_at(s);
    a.palette = static_cast<int>(rng.uniform_int(6));
    agents_.push_back(a);
  }
  for (int i = 0; i < nped; ++i) {
    // Each pedestrian crosses the road when the ego approaches its station.
    // Crossings happen on straight sections away from junctions.
    double s = 0;
    RoutePoint rp;
    bool placed = false;
    for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
      s = rng.uniform(60.0, std::max(61.0, route_.length() - 20.0));
      rp = route_.at_arclength(s);
      if (std::abs(rp.curvature) > 0.005) continue;
      placed = true;
      for (const MapNode& n : map_.nodes)
        if (n.edges.size() >= 3 && (rp.p - n.pos).norm() < 28.0) placed = false;
    }
    if (!placed) continue;
    const Vec2 right{std::sin(rp.heading), -std::cos(rp.heading)};
    const bool from_right = rng.coin();
    const double side = from_right ? 1.0 : -1.0;
    Agent a;
    a.pedestrian = true;
    a.params = VehicleParams{1.0, 0.5, 1.0, 2.0, 0.5, 0.5};
    a.walk_from = rp.p + right * (side * 9.0);
    a.walk_to = rp.p - right * (side * 9.0);
    a.state.pose = {a.walk_from.x, a.walk_from.y,
                    std::atan2(a.walk_to.y - a.walk_from.y, a.walk_to.x - a.walk_from.x)};
    a.state.v = 0;
    a.target_speed = rng.uniform(1.0, 1.5);
    a.trigger_s = s;
    a.palette = static_cast<int>(rng.uniform_int(4));
    agents_.push_back(a);
  }
}

double World::noise_offset(double t) const {
  if (!cfg_.noise_enabled || t < cfg_.noise_period) return 0.0;
  const uint64_t k = static_cast<uint64_t>(t / cfg_.noise_period);
  Rng rng = Rng::substream(cfg_.seed ^ kNoiseTag, k);
  const double dur = rng.uniform(cfg_.noise_min_len, cfg_.noise_max_len);
  const double amp = rng.uniform(cfg_.noise_min_amp, cfg_.noise_max_amp);
  const double sign = rng.coin() ? 1.0 : -1.0;
  const double start = k * cfg_.noise_period;
  return (t - start) < dur ? sign * amp : 0.0;
}

bool World::in_noise_window(double t) const { return noise_offset(t) != 0.0; }

Command World::command() const { return route_.pts[progress_idx_].cmd; }

Controls World::step(const Controls& commanded) {
  require(!arrived_ && failure_ == FailureKind::None, "step() after episode end");
  const double t = time();
  Controls applied = commanded;
  applied.steer += noise_offset(t);

  TickLog lg;
  lg.t = t;
  lg.pose = ego_.pose;
  lg.v = ego_.v;
  lg.commanded = commanded;
  lg.applied = applied;
  lg.cmd = command();
  lg.noise_active = in_noise_window(t);
  lg.route_s = progress_s();
  log_.push_back(lg);

  ego_ = step_vehicle(ego_, applied, cfg_.ego_params, kTick, cfg_.substeps);
  step_agents();
  ++tick_;
  progress_idx_ = route_.advance(ego_.pose.position(), progress_idx_);
  update_status();
  return applied;
}

void World::step_agents() {
  const double ego_s = progress_s();
  for (Agent& a : agents_) {
    if (!a.active) continue;
    if (a.pedestrian) {
      if (!a.walking) {
        // Start crossing when the ego is close enough to interact, but wait at
        // the curb until no vehicle is near the crossing. Once walking, commit:
        // stopping mid-lane would be worse than finishing the crossing.
        if (std::abs(a.trigger_s - ego_s) < 45.0 && a.trigger_s > ego_s) {
          bool clear = (ego_.pose.position() - a.state.pose.position()).norm() > 25.0;
          for (const Agent& o : agents_)
            if (clear && &o != &a && o.active && !o.pedestrian)
              clear = (o.state.pose.position() - a.state.pose.position()).norm() > 25.0;
          if (clear) a.walking = true;
        }
        continue;
      }
      const Vec2 d = a.walk_to - a.state.pose.position();
      const double dist = d.norm();
      if (dist < 0.5) {
        a.active = false;  // crossed, leaves the scene
        continue;
      }
      const double step = a.target_speed * kTick;
      const Vec2 nd = d * (1.0 / dist);
      a.state.pose.x += nd.x * std::min(step, dist);
      a.state.pose.y += nd.y * std::min(step, dist);
      a.state.pose.yaw = std::atan2(nd.y, nd.x);
      a.state.v = a.target_speed;
      continue;
    }
    // Lane-following vehicle: pure pursuit on the shared route polyline.
    a.route_idx = route_.advance(a.state.pose.position(), a.route_idx);
    const double s = route_.pts[a.route_idx].s;
    if (s >= route_.length() - 6.0) {
      a.active = false;  // reached the end, despawns
      continue;
    }
    const double lookahead = std::clamp(1.2 + 0.6 * a.state.v, 3.0, 12.0);
    const RoutePoint tgt = route_.at_arclength(s + lookahead);
    const double xb = world_to_body(tgt.p, a.state.pose).x;
    Controls u;
    u.steer = std::atan(-2.0 * a.params.wheelbase * xb / (lookahead * lookahead));
    // Slow for junction arcs ahead.
    double vstop = a.target_speed;
    for (double ds = 2.0; ds <= 14.0; ds += 4.0) {
      const double k = std::abs(route_.at_arclength(s + ds).curvature);
      if (k > 1e-6) vstop = std::min(vstop, std::sqrt(2.5 / k));
    }
    // Follow along the route: every vehicle (and the ego) shares this lane,
    // and arc distance stays meaningful through turns where a body-frame
    // corridor test would lose the leader.
    auto follow = [&](double s_other) {
      const double ds = s_other - s;
      if (ds > 0 && ds < 30.0)
        vstop = std::min(vstop, std::sqrt(2.0 * 2.0 * std::max(0.0, ds - 9.0)));
    };
    follow(route_.pts[progress_idx_].s);
    for (const Agent& o : agents_)
      if (&o != &a && o.active && !o.pedestrian) follow(route_.pts[o.route_idx].s);
    // Pedestrians are off the route polyline; brake on a body-frame corridor.
    for (const Agent& o : agents_) {
      if (!o.pedestrian || !o.active || !o.walking) continue;
      const Vec2 rel = world_to_body(o.state.pose.position(), a.state.pose);
      if (std::abs(rel.x) < 3.0 && rel.y > 0 && rel.y < 30.0)
        vstop = std::min(vstop, std::sqrt(2.0 * 2.0 * std::max(0.0, rel.y - 6.0)));
    }
    u.accel = std::clamp(0.8 * (vstop - a.state.v), -a.params.max_decel, a.params.max_accel);
    // Feed the ramp deceleration forward; the proportional term alone lags
    // the ramp and overruns into whatever it is braking for.
    if (vstop < a.state.v)
      u.accel = std::clamp(-2.0 + 0.8 * (vstop - a.state.v), -a.params.max_decel, u.accel);
    if (vstop < 0.5 && a.state.v > 0.0) u.accel = -a.params.max_decel;  // full stop, no creep
    a.state = step_vehicle(a.state, u, a.params, kTick, 1);
  }
}

void World::update_status() {
  // Arrival: close to the route end.
  if (route_.length() - progress_s() < 3.0 &&
      (ego_.pose.position() - route_.pts.back().p).norm() < 8.0) {
    arrived_ = true;
    return;
  }
  const auto corners =
      vehicle_corners(ego_.pose, cfg_.ego_params.length, cfg_.ego_params.width);
  for (const Vec2& c : corners) {
    if (!map_.on_drivable(c)) {
      failure_ = FailureKind::OffRoad;
      return;
    }
  }
  for (const Agent& a : agents_) {
    if (!a.active) continue;
    if (a.pedestrian && !a.walking) continue;  // waiting at the roadside
    const double sz = a.pedestrian ? 0.5 : a.params.length;
    const double sw = a.pedestrian ? 0.5 : a.params.width;
    if ((a.state.pose.position() - ego_.pose.position()).norm() >
        (sz + cfg_.ego_params.length))
      continue;
    if (boxes_overlap(corners, vehicle_corners(a.state.pose, sz, sw))) {
      failure_ = FailureKind::Collision;
      return;
    }
  }
  for (const MapProp& p : map_.props) {
    if ((p.pos - ego_.pose.position()).norm() > 30.0) continue;
    const std::array<Vec2, 4> pb =
        vehicle_corners({p.pos.x, p.pos.y, p.yaw}, p.w, p.h);
    if (boxes_overlap(corners, pb)) {
      failure_ = FailureKind::Collision;
      return;
    }
  }
}

std::vector<uint8_t> World::render() const {
  RenderRequest rq;
  rq.map = &map_;
  rq.ego = ego_.pose;
  rq.weather = cfg_.weather;
  rq.width = cfg_.render_width;
  rq.height = cfg_.render_height;
  rq.rain_speckle_scale = cfg_.rain_speckle_scale;
  rq.speckle_seed =
      Rng::substream(cfg_.seed ^ kSpeckleTag, static_cast<uint64_t>(tick_)).next_u64();
  for (const Agent& a : agents_) {
    if (!a.active) continue;
    RenderAgent ra;
    ra.pose = a.state.pose;
    if (a.pedestrian) {
      ra.length = 0.5;
      ra.width = 0.5;
      ra.height = 1.8;
    } else {
      ra.length = a.params.length;
      ra.width = a.params.width;
      ra.height = 1.5;
    }
    ra.palette = a.palette;
    rq.agents.push_back(ra);
  }
  return render_frame(rq);
}

}  // namespace dl::sim
