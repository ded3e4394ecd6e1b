#include "dl/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace dl {

double Vec2::norm() const { return std::hypot(x, y); }

Vec2 Pose2D::heading() const { return {std::cos(yaw), std::sin(yaw)}; }

void Trajectory::validate() const {
  require(static_cast<int>(points.size()) == kHorizonLen,
          "trajectory must have exactly " + std::to_string(kHorizonLen) + " points, got " +
              std::to_string(points.size()));
  require(dt > 0.0, "trajectory dt must be positive");
  for (const BodyPoint& p : points) {
    require_finite(p.v, "trajectory v");
    require_finite(p.x, "trajectory x");
    require_finite(p.y, "trajectory y");
  }
}

double normalize_angle(double a) {
  require_finite(a, "angle");
  double r = std::fmod(a + M_PI, 2.0 * M_PI);
  if (r <= 0.0) r += 2.0 * M_PI;
  return r - M_PI;
}

double lerp_angle(double a, double b, double alpha) {
  double d = normalize_angle(b - a);
  return normalize_angle(a + d * alpha);
}

Vec2 world_to_body(Vec2 p, const Pose2D& ref) {
  const double c = std::cos(ref.yaw), s = std::sin(ref.yaw);
  const Vec2 d = p - ref.position();
  // forward = heading, right = heading rotated -90 deg
  return {d.x * s - d.y * c, d.x * c + d.y * s};
}

Vec2 body_to_world(Vec2 p, const Pose2D& ref) {
  const double c = std::cos(ref.yaw), s = std::sin(ref.yaw);
  return {ref.x + p.y * c + p.x * s, ref.y + p.y * s - p.x * c};
}

std::vector<Vec2> world_to_body(const std::vector<Vec2>& pts, const Pose2D& ref) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (Vec2 p : pts) out.push_back(world_to_body(p, ref));
  return out;
}

std::vector<Vec2> body_to_world(const std::vector<Vec2>& pts, const Pose2D& ref) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (Vec2 p : pts) out.push_back(body_to_world(p, ref));
  return out;
}

std::vector<TimedSample> interpolate_track(const std::vector<TimedSample>& track,
                                           const std::vector<double>& query_times) {
  require(track.size() >= 1, "interpolate_track: empty track");
  for (size_t i = 1; i < track.size(); ++i)
    require(track[i].t > track[i - 1].t, "interpolate_track: times must be strictly increasing");

  std::vector<TimedSample> out;
  out.reserve(query_times.size());
  for (double q : query_times) {
    require_finite(q, "query time");
    if (q < track.front().t || q > track.back().t)
      throw std::out_of_range("interpolate_track: query " + std::to_string(q) + " outside [" +
                              std::to_string(track.front().t) + ", " +
                              std::to_string(track.back().t) + "]");
    auto it = std::lower_bound(track.begin(), track.end(), q,
                               [](const TimedSample& s, double t) { return s.t < t; });
    if (it->t == q) {
      out.push_back(*it);
      continue;
    }
    const TimedSample& hi = *it;
    const TimedSample& lo = *(it - 1);
    const double alpha = (q - lo.t) / (hi.t - lo.t);
    TimedSample s;
    s.t = q;
    s.pose.x = lo.pose.x + (hi.pose.x - lo.pose.x) * alpha;
    s.pose.y = lo.pose.y + (hi.pose.y - lo.pose.y) * alpha;
    s.pose.yaw = lerp_angle(lo.pose.yaw, hi.pose.yaw, alpha);
    s.speed = lo.speed + (hi.speed - lo.speed) * alpha;
    out.push_back(s);
  }
  return out;
}

}  // namespace dl
