#pragma once

#include "dl/geometry.hpp"

#include <array>
#include <string>

namespace dl::sim {

enum class Weather { ClearDay, ClearSunset, FoggyDay, RainyDay, RainySunset };

const char* weather_name(Weather w);
Weather parse_weather(const std::string& s);  // throws ConfigError on unknown name

enum class Command { KeepStraight = 0, TurnLeft = 1, TurnRight = 2 };

const char* command_name(Command c);
Command parse_command(const std::string& s);

// Kinematic bicycle parameters. Steering and acceleration limits are hard
// clips applied inside the integrator.
struct VehicleParams {
  double wheelbase = 2.7;   // m
  double max_steer = 0.61;  // rad
  double max_accel = 3.0;   // m/s^2
  double max_decel = 6.0;   // m/s^2, stored positive
  double length = 4.5;      // m, collision box
  double width = 1.9;       // m

  static VehicleParams car();
  static VehicleParams motorcycle();
};

struct VehicleState {
  Pose2D pose;
  double v = 0.0;  // forward speed, m/s, never negative
};

struct Controls {
  double steer = 0.0;  // rad, positive turns left (counterclockwise)
  double accel = 0.0;  // m/s^2, negative brakes
};

// Advances one kinematic bicycle step of length dt split into `substeps`
// Euler updates. Inputs are clipped to the vehicle limits; speed floors at 0.
VehicleState step_vehicle(const VehicleState& s, const Controls& u, const VehicleParams& p,
                          double dt, int substeps = 1);

// Corners of the vehicle collision box in world coordinates, centered on pose.
std::array<Vec2, 4> vehicle_corners(const Pose2D& pose, double length, double width);

// Separating-axis test for two convex quads.
bool boxes_overlap(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b);

}  // namespace dl::sim
