#pragma once

#include <vector>

#include "dl/common.hpp"

namespace dl {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const;
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
};

// World pose; yaw is counterclockwise from world +x, normalized into (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 heading() const;  // unit vector along yaw
};

// One track sample: where the vehicle was at time t, and its ground speed.
struct TimedSample {
  double t = 0.0;
  Pose2D pose;
  double speed = 0.0;  // nonnegative scalar ground speed
};

// Body-frame motion sample: x lateral (right positive), y longitudinal
// (forward positive), v scalar speed.
struct BodyPoint {
  double v = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Fixed-horizon body-frame trajectory: exactly kHorizonLen points spaced dt.
struct Trajectory {
  std::vector<BodyPoint> points;
  double dt = kTick;

  void validate() const;
  double horizon() const { return dt * static_cast<double>(points.size()); }
};

// Wraps into (-pi, pi]. Throws std::invalid_argument on non-finite input.
double normalize_angle(double a);

// Shortest-arc interpolation between two angles; alpha in [0,1].
double lerp_angle(double a, double b, double alpha);

// World <-> body frame. Body frame: y along the reference heading (forward),
// x to the right of it.
Vec2 world_to_body(Vec2 p, const Pose2D& ref);
Vec2 body_to_world(Vec2 p, const Pose2D& ref);
std::vector<Vec2> world_to_body(const std::vector<Vec2>& pts, const Pose2D& ref);
std::vector<Vec2> body_to_world(const std::vector<Vec2>& pts, const Pose2D& ref);

// Linear interpolation of a strictly time-increasing track at query_times.
// Position and speed interpolate linearly, yaw along the shorter arc.
// Queries outside [front.t, back.t] throw std::out_of_range.
std::vector<TimedSample> interpolate_track(const std::vector<TimedSample>& track,
                                           const std::vector<double>& query_times);

}  // namespace dl
