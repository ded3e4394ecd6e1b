#pragma once

#include <string>
#include <vector>

#include "dl/sim/expert.hpp"
#include "dl/sim/world.hpp"

namespace dl::sim {

struct CollectOptions {
  Weather weather = Weather::ClearDay;
  VehicleParams profile = VehicleParams::car();
  std::string profile_name = "car";
  bool noise = true;
  bool traffic = true;
  double route_min_m = 300.0;
  double route_max_m = 1500.0;
  double noise_period = 6.0;
  double traffic_vehicles_per_km = 6.0;
  double traffic_peds_per_km = 6.0;
  int render_width = 96, render_height = 96;
  // Empty -> a random route in [route_min_m, route_max_m] drawn from the seed;
  // otherwise this exact node sequence is driven.
  std::vector<std::string> route_nodes;
};

struct EpisodeSummary {
  std::string id;
  std::string outcome;  // arrived | collision | off-road | timeout
  bool flagged = false;  // anything but a clean arrival
  int ticks = 0;
  double route_length = 0;  // m
  double distance = 0;      // m actually driven
  double duration = 0;      // s
};

// One recorded step as stored in ticks.jsonl. `applied` is what the vehicle
// executed (noise included); `reference` is the clean expert output that
// supervision uses.
struct TickRecord {
  int tick = 0;
  double t = 0;
  Pose2D pose;
  double v = 0;
  Controls applied, reference;
  Command cmd = Command::KeepStraight;
  bool noise = false;
  double route_s = 0;
};

struct EpisodeLog {
  std::string dir;  // directory this log was loaded from
  std::string id, map_name, profile;
  std::vector<std::string> route_nodes;  // node ids, rebuildable via build_route
  Weather weather = Weather::ClearDay;
  uint64_t seed = 0;
  double route_length = 0, distance = 0, duration = 0;
  bool noise = false, traffic = false;
  std::string outcome;
  bool flagged = false;
  long long failure_tick = -1;  // tick at which the episode failed, -1 if none
  int render_width = 0, render_height = 0;
  double dt = 0;
  std::vector<TickRecord> ticks;

  std::string frame_path(int tick) const;  // dir/frames/NNNNNN.ppm
};

// Runs the expert on a fresh random route and writes
// <out_dir>/<id>/{meta.json, ticks.jsonl, frames/*.ppm}. Failed episodes
// (collision, off-road, timeout) are flagged in the summary and in meta.json
// but still written; downstream filtering decides what to keep.
EpisodeSummary collect_episode(const MapData& map, const CollectOptions& opt, uint64_t seed,
                               const std::string& out_dir, const std::string& id);

// Reads an episode directory back. Throws DataError with file context on
// malformed input.
EpisodeLog load_episode(const std::string& dir);

}  // namespace dl::sim
