#include "dl/sim/render.hpp"

#include "dl/rng.hpp"

#include <algorithm>
#include <cmath>

namespace dl::sim {

namespace {

constexpr double kCamHeight = 1.4;
constexpr double kCamPitch = 8.0 * M_PI / 180.0;
constexpr double kCamForward = 0.8;  // rig sits slightly ahead of the vehicle center
constexpr double kFarClip = 220.0;

struct Color {
  double r = 0, g = 0, b = 0;
};

Color mix(Color a, Color b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

struct Box3 {
  Vec2 center;
  double yaw = 0;
  double hl = 0, hw = 0, height = 0;
  Color color;
};

// Ray vs upright oriented box. Returns hit distance and a crude shade factor
// from the face normal, or a negative distance on miss.
struct BoxHit {
  double t = -1;
  double shade = 1;
};

BoxHit ray_box(const Vec2& o_xy, double oz, const Vec2& d_xy, double dz, const Box3& b) {
  // Into box frame.
  const double c = std::cos(b.yaw), s = std::sin(b.yaw);
  const Vec2 rel = o_xy - b.center;
  const double ox = rel.x * c + rel.y * s;
  const double oy = -rel.x * s + rel.y * c;
  const double dx = d_xy.x * c + d_xy.y * s;
  const double dy = -d_xy.x * s + d_xy.y * c;

  double t0 = 0, t1 = kFarClip;
  int axis = -1;
  const double org[3] = {ox, oy, oz};
  const double dir[3] = {dx, dy, dz};
  const double lo[3] = {-b.hl, -b.hw, 0};
  const double hi[3] = {b.hl, b.hw, b.height};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(dir[i]) < 1e-12) {
      if (org[i] < lo[i] || org[i] > hi[i]) return {};
      continue;
    }
    double ta = (lo[i] - org[i]) / dir[i];
    double tb = (hi[i] - org[i]) / dir[i];
    if (ta > tb) std::swap(ta, tb);
    if (ta > t0) {
      t0 = ta;
      axis = i;
    }
    t1 = std::min(t1, tb);
    if (t0 > t1) return {};
  }
  if (t0 <= 1e-9) return {};  // started inside or behind
  BoxHit hit;
  hit.t = t0;
  hit.shade = axis == 2 ? 1.0 : (axis == 0 ? 0.82 : 0.68);
  return hit;
}

struct GroundInfo {
  double edge_dist = 1e300;   // to nearest road axis
  double edge_along = 0;      // arclength along that axis
  double junction_dist = 1e300;
};

GroundInfo ground_info(const MapData& m, Vec2 p) {
  GroundInfo gi;
  for (const MapEdge& e : m.edges) {
    const Vec2 a = m.nodes[e.a].pos, b = m.nodes[e.b].pos;
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const double d = (p - (a + ab * t)).norm();
    if (d < gi.edge_dist) {
      gi.edge_dist = d;
      gi.edge_along = t * std::sqrt(len2);
    }
  }
  for (const MapNode& n : m.nodes)
    if (n.edges.size() >= 3) gi.junction_dist = std::min(gi.junction_dist, (p - n.pos).norm());
  return gi;
}

Color ground_color(const MapData& m, Vec2 p) {
  const GroundInfo gi = ground_info(m, p);
  const bool junction = gi.junction_dist <= kJunctionPad;
  const bool paved = gi.edge_dist <= kRoadHalfWidth || junction;
  if (paved) {
    Color asphalt{62, 62, 66};
    if (!junction) {
      // Dashed center line on the road axis, solid white edge lines.
      if (gi.edge_dist < 0.18 && std::fmod(gi.edge_along, 4.0) < 2.4) return {205, 180, 60};
      if (std::abs(gi.edge_dist - (kRoadHalfWidth - 0.3)) < 0.14) return {215, 215, 215};
    }
    return asphalt;
  }
  if (gi.edge_dist <= kRoadHalfWidth + kShoulder || gi.junction_dist <= kJunctionPad + kShoulder)
    return {116, 102, 82};  // dirt shoulder
  // Grass with a coarse two-tone checker so motion is visible.
  const long long cx = static_cast<long long>(std::floor(p.x / 8.0));
  const long long cy = static_cast<long long>(std::floor(p.y / 8.0));
  return ((cx + cy) & 1) ? Color{86, 128, 58} : Color{74, 116, 52};
}

Color sky_color(Weather w, double elevation /*0 horizon .. 1 zenith*/) {
  switch (w) {
    case Weather::ClearDay: return mix({150, 200, 240}, {70, 125, 205}, elevation);
    case Weather::ClearSunset: return mix({250, 165, 95}, {100, 75, 140}, elevation);
    case Weather::FoggyDay: return {182, 183, 187};
    case Weather::RainyDay: return mix({125, 130, 140}, {95, 100, 110}, elevation);
    case Weather::RainySunset: return mix({150, 110, 100}, {75, 65, 95}, elevation);
  }
  return {0, 0, 0};
}

Color fog_tint(Weather w) {
  switch (w) {
    case Weather::FoggyDay: return {178, 180, 184};
    case Weather::RainyDay: return {120, 125, 133};
    case Weather::RainySunset: return {110, 95, 100};
    default: return {200, 200, 200};
  }
}

double fog_range(Weather w) {
  switch (w) {
    case Weather::FoggyDay: return 45.0;
    case Weather::RainyDay: return 150.0;
    case Weather::RainySunset: return 130.0;
    default: return 0.0;  // disabled
  }
}

Color prop_color(const MapProp& p) {
  const double v = (p.shade % 7) * 6.0;
  if (p.kind == "building") return {148 + v, 138 + v, 128 + v};
  if (p.kind == "tree") return {48 + v, 92 + v, 44};
  return {118, 118, 124};  // pole
}

const Color kVehiclePalette[6] = {{180, 45, 45}, {45, 85, 185}, {215, 215, 220},
                                  {45, 45, 50},  {200, 165, 45}, {95, 160, 95}};
const Color kPedPalette[4] = {{200, 120, 90}, {90, 120, 200}, {150, 180, 80}, {210, 200, 120}};

}  // namespace

std::vector<uint8_t> render_frame(const RenderRequest& req) {
  require(req.map != nullptr, "render_frame: missing map");
  const int W = req.width, H = req.height;
  require(W > 0 && H > 0, "render_frame: bad frame size");
  std::vector<uint8_t> out(size_t(W) * H * 3);

  const double yaw = req.ego.yaw;
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(kCamPitch), sp = std::sin(kCamPitch);
  // World-frame camera basis, Z up.
  const double Fx = cp * cy, Fy = cp * sy, Fz = -sp;
  const double Rx = sy, Ry = -cy, Rz = 0;
  const double Ux = sp * cy, Uy = sp * sy, Uz = cp;
  const Vec2 cam_xy{req.ego.x + kCamForward * cy, req.ego.y + kCamForward * sy};
  const double cam_z = kCamHeight;

  // Visible boxes: props and agents within the far clip and not far behind.
  std::vector<Box3> boxes;
  for (const MapProp& p : req.map->props) {
    const Vec2 rel = p.pos - cam_xy;
    if (rel.norm() > kFarClip + 20) continue;
    if (rel.x * Fx + rel.y * Fy < -25) continue;  // well behind the camera
    Box3 b;
    b.center = p.pos;
    b.yaw = p.yaw;
    b.hl = p.w / 2;
    b.hw = p.h / 2;
    b.height = p.height;
    b.color = prop_color(p);
    boxes.push_back(b);
  }
  for (const RenderAgent& a : req.agents) {
    const Vec2 rel = Vec2{a.pose.x, a.pose.y} - cam_xy;
    if (rel.norm() > kFarClip + 20) continue;
    if (rel.x * Fx + rel.y * Fy < -15) continue;
    Box3 b;
    b.center = {a.pose.x, a.pose.y};
    b.yaw = a.pose.yaw;
    b.hl = a.length / 2;
    b.hw = a.width / 2;
    b.height = a.height;
    b.color = a.height > 1.6 ? kPedPalette[((a.palette % 4) + 4) % 4]
                             : kVehiclePalette[((a.palette % 6) + 6) % 6];
    boxes.push_back(b);
  }

  const double fog_d = fog_range(req.weather);
  const Color fogc = fog_tint(req.weather);
  const double speckle_p = 0.02 * req.rain_speckle_scale;
  const bool rainy = req.weather == Weather::RainyDay || req.weather == Weather::RainySunset;
  Rng speckle(req.speckle_seed);

  const double tan_half = 1.0;  // 90 degree FOV
  size_t px_index = 0;
  for (int py = 0; py < H; ++py) {
    for (int px = 0; px < W; ++px, ++px_index) {
      const double u = ((px + 0.5) / W * 2 - 1) * tan_half;
      const double v = (1 - (py + 0.5) / H * 2) * tan_half;
      double dx = Rx * u + Ux * v + Fx;
      double dy = Ry * u + Uy * v + Fy;
      double dz = Rz * u + Uz * v + Fz;
      const double dn = std::sqrt(dx * dx + dy * dy + dz * dz);
      dx /= dn;
      dy /= dn;
      dz /= dn;

      double hit_t = -1;
      Color color;
      if (dz < -1e-9) {
        const double tg = -cam_z / dz;
        if (tg < kFarClip) {
          hit_t = tg;
          color = ground_color(*req.map, {cam_xy.x + dx * tg, cam_xy.y + dy * tg});
        }
      }
      double shade = 1.0;
      for (const Box3& b : boxes) {
        const BoxHit bh = ray_box(cam_xy, cam_z, {dx, dy}, dz, b);
        if (bh.t > 0 && (hit_t < 0 || bh.t < hit_t)) {
          hit_t = bh.t;
          color = b.color;
          shade = bh.shade;
        }
      }
      if (hit_t < 0) {
        color = sky_color(req.weather, std::clamp(dz / 0.7, 0.0, 1.0));
        if (dz < 0) color = fogc;  // below horizon but past far clip
      } else {
        color = {color.r * shade, color.g * shade, color.b * shade};
        if (fog_d > 0) {
          const double f = 1 - std::exp(-hit_t / fog_d);
          color = mix(color, fogc, f);
        }
      }
      if (req.weather == Weather::ClearSunset || req.weather == Weather::RainySunset) {
        color = {color.r * 1.10 * 0.94, color.g * 0.90 * 0.94, color.b * 0.74 * 0.94};
      }
      if (rainy && speckle.uniform() < speckle_p) {
        color = mix(color, {228, 230, 238}, 0.65);
      }
      out[px_index * 3 + 0] = static_cast<uint8_t>(std::clamp(color.r, 0.0, 255.0) + 0.5);
      out[px_index * 3 + 1] = static_cast<uint8_t>(std::clamp(color.g, 0.0, 255.0) + 0.5);
      out[px_index * 3 + 2] = static_cast<uint8_t>(std::clamp(color.b, 0.0, 255.0) + 0.5);
    }
  }
  return out;
}

}  // namespace dl::sim
