#pragma once

#include "dl/sim/world.hpp"

namespace dl::sim {

// Scripted driver: pure pursuit steering on the route, speed from curvature,
// obstacles ahead, and the remaining distance. Used both to collect data and
// as the reference the learned planner imitates.
Controls expert_controls(const World& w);

}  // namespace dl::sim
