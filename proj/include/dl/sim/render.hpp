#pragma once

#include "dl/sim/map.hpp"

#include <cstdint>
#include <vector>

namespace dl::sim {

struct RenderAgent {
  Pose2D pose;
  double length = 4.5, width = 1.9, height = 1.5;
  int palette = 0;
};

struct RenderRequest {
  const MapData* map = nullptr;
  std::vector<RenderAgent> agents;  // everything except the ego
  Pose2D ego;                       // camera rig pose
  Weather weather = Weather::ClearDay;
  uint64_t speckle_seed = 0;        // per-frame stream for rain speckle
  int width = 96, height = 96;
  double rain_speckle_scale = 1.0;  // multiplies speckle probability
};

// Forward camera frame: pinhole at 1.4 m height, pitched 8 degrees down,
// 90 degree horizontal FOV. Returns interleaved RGB rows top to bottom.
std::vector<uint8_t> render_frame(const RenderRequest& req);

}  // namespace dl::sim
