#pragma once

#include "dl/sim/render.hpp"
#include "dl/sim/route.hpp"

namespace dl::sim {

struct WorldConfig {
  VehicleParams ego_params = VehicleParams::car();
  Weather weather = Weather::ClearDay;
  uint64_t seed = 0;

  bool dynamic_traffic = false;
  double traffic_vehicles_per_km = 6.0;
  double traffic_peds_per_km = 6.0;

  // Periodic steering disturbance; a new window opens every `noise_period`
  // seconds with random duration, amplitude and sign.
  bool noise_enabled = false;
  double noise_period = 6.0;
  double noise_min_len = 0.2, noise_max_len = 1.0;    // s
  double noise_min_amp = 0.15, noise_max_amp = 0.45;  // rad

  int render_width = 96, render_height = 96;
  double rain_speckle_scale = 1.0;
  int substeps = 4;
};

struct Agent {
  bool pedestrian = false;
  VehicleState state;
  VehicleParams params;
  double target_speed = 0;
  size_t route_idx = 0;  // progress index for lane-following vehicles
  Vec2 walk_from, walk_to;
  double trigger_s = 0;  // ego arclength that starts a pedestrian crossing
  bool walking = false;
  bool active = true;
  int palette = 0;
};

// One record per completed step: the state the controls were computed from
// and the controls as commanded and as applied (after noise injection).
struct TickLog {
  double t = 0;
  Pose2D pose;
  double v = 0;
  Controls commanded, applied;
  Command cmd = Command::KeepStraight;
  bool noise_active = false;
  double route_s = 0;
};

enum class FailureKind { None, Collision, OffRoad, Timeout };
const char* failure_name(FailureKind f);

class World {
 public:
  World(MapData map, Route route, const WorldConfig& cfg);

  // Advances one tick of kTick seconds; returns the applied controls.
  Controls step(const Controls& commanded);

  const VehicleState& ego() const { return ego_; }
  const VehicleParams& ego_params() const { return cfg_.ego_params; }
  int tick() const { return tick_; }
  double time() const { return tick_ * kTick; }
  Command command() const;
  double progress_s() const { return route_.pts[progress_idx_].s; }
  size_t progress_index() const { return progress_idx_; }
  bool arrived() const { return arrived_; }
  FailureKind failure() const { return failure_; }
  bool failed() const { return failure_ != FailureKind::None; }

  const Route& route() const { return route_; }
  const MapData& map() const { return map_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const std::vector<TickLog>& log() const { return log_; }
  const WorldConfig& config() const { return cfg_; }

  std::vector<uint8_t> render() const;

  // Stateless lookup of the steering disturbance at time t.
  double noise_offset(double t) const;
  bool in_noise_window(double t) const;

  // Test hook: place the ego directly.
  void teleport(const VehicleState& s) { ego_ = s; }

 private:
  void spawn_traffic();
  void step_agents();
  void update_status();

  MapData map_;
  Route route_;
  WorldConfig cfg_;
  VehicleState ego_;
  std::vector<Agent> agents_;
  std::vector<TickLog> log_;
  size_t progress_idx_ = 0;
  int tick_ = 0;
  bool arrived_ = false;
  FailureKind failure_ = FailureKind::None;
};

}  // namespace dl::sim
