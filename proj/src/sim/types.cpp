#include "dl/sim/types.hpp"

#include <algorithm>
#include <cmath>

namespace dl::sim {

const char* weather_name(Weather w) {
  switch (w) {
    case Weather::ClearDay: return "clear-day";
    case Weather::ClearSunset: return "clear-sunset";
    case Weather::FoggyDay: return "foggy-day";
    case Weather::RainyDay: return "rainy-day";
    case Weather::RainySunset: return "rainy-sunset";
  }
  return "?";
}

Weather parse_weather(const std::string& s) {
  for (Weather w : {Weather::ClearDay, Weather::ClearSunset, Weather::FoggyDay, Weather::RainyDay,
                    Weather::RainySunset})
    if (s == weather_name(w)) return w;
  throw ConfigError("unknown weather: " + s);
}

const char* command_name(Command c) {
  switch (c) {
    case Command::KeepStraight: return "keep-straight";
    case Command::TurnLeft: return "turn-left";
    case Command::TurnRight: return "turn-right";
  }
  return "?";
}

Command parse_command(const std::string& s) {
  for (Command c : {Command::KeepStraight, Command::TurnLeft, Command::TurnRight})
    if (s == command_name(c)) return c;
  throw ConfigError("unknown command: " + s);
}

VehicleParams VehicleParams::car() { return VehicleParams{2.7, 0.61, 3.0, 6.0, 4.5, 1.9}; }

VehicleParams VehicleParams::motorcycle() {
  return VehicleParams{1.4, 0.79, 4.0, 7.0, 2.2, 0.8};
}

VehicleState step_vehicle(const VehicleState& s, const Controls& u, const VehicleParams& p,
                          double dt, int substeps) {
  require(dt > 0 && substeps >= 1, "step_vehicle: bad dt/substeps");
  const double steer = std::clamp(u.steer, -p.max_steer, p.max_steer);
  const double accel = std::clamp(u.accel, -p.max_decel, p.max_accel);
  VehicleState out = s;
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) {
    out.pose.x += out.v * std::cos(out.pose.yaw) * h;
    out.pose.y += out.v * std::sin(out.pose.yaw) * h;
    out.pose.yaw = normalize_angle(out.pose.yaw + out.v / p.wheelbase * std::tan(steer) * h);
    out.v = std::max(0.0, out.v + accel * h);
  }
  return out;
}

std::array<Vec2, 4> vehicle_corners(const Pose2D& pose, double length, double width) {
  const double c = std::cos(pose.yaw), s = std::sin(pose.yaw);
  const double hl = length / 2, hw = width / 2;
  auto corner = [&](double dx, double dy) -> Vec2 {
    return {pose.x + dx * c - dy * s, pose.y + dx * s + dy * c};
  };
  return {corner(hl, hw), corner(hl, -hw), corner(-hl, -hw), corner(-hl, hw)};
}

bool boxes_overlap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b) {
  auto separated_by_edge = [](const std::array<Vec2, 4>& poly, const std::array<Vec2, 4>& other) {
    for (int i = 0; i < 4; ++i) {
      const Vec2 e = poly[(i + 1) % 4] - poly[i];
      const Vec2 axis{-e.y, e.x};
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const Vec2& p : poly) {
        const double d = axis.dot(p);
        amin = std::min(amin, d);
        amax = std::max(amax, d);
      }
      for (const Vec2& p : other) {
        const double d = axis.dot(p);
        bmin = std::min(bmin, d);
        bmax = std::max(bmax, d);
      }
      if (amax < bmin || bmax < amin) return true;
    }
    return false;
  };
  return !separated_by_edge(a, b) && !separated_by_edge(b, a);
}

}  // namespace dl::sim
