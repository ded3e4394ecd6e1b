#include "dl/sim/expert.hpp"

#include <algorithm>
#include <cmath>

namespace dl::sim {

namespace {
constexpr double kLatAccelLimit = 2.5;  // m/s^2 comfort bound in curves
constexpr double kBrakeAccel = 2.5;     // planned deceleration toward obstacles
}  // namespace

Controls expert_controls(const World& w) {
  const VehicleState& ego = w.ego();
  const Route& route = w.route();
  const double s = w.progress_s();

  const double lookahead = std::clamp(1.2 + 0.6 * ego.v, 3.0, 12.0);
  const RoutePoint target = route.at_arclength(s + lookahead);
  const double xb = world_to_body(target.p, ego.pose).x;

  Controls u;
  u.steer = std::atan(-2.0 * w.ego_params().wheelbase * xb / (lookahead * lookahead));
  // Pure pursuit alone reacts slowly to a yaw disturbance (the lookahead point
  // must drift far off axis before the command saturates), so align the
  // heading directly as well. Zero on the nominal path, decisive in recovery.
  const double psi_err =
      normalize_angle(route.at_arclength(s + 1.0).heading - ego.pose.yaw);
  u.steer = std::clamp(u.steer + 0.8 * psi_err, -w.ego_params().max_steer,
                       w.ego_params().max_steer);

  // Slow for upcoming curvature.
  double vdes = kCruiseSpeed;
  const double preview = std::max(10.0, ego.v * 2.4);
  for (double ds = 2.0; ds <= preview; ds += 2.0) {
    const double k = std::abs(route.at_arclength(s + ds).curvature);
    if (k > 1e-6) vdes = std::min(vdes, std::sqrt(kLatAccelLimit / k));
  }
  // Shed speed while far off course or misaligned: recovery at full cruise
  // speed overshoots, and a disturbed vehicle regains the lane faster slow.
  const double lat_err =
      std::abs(route.lateral_offset(ego.pose.position(), w.progress_index()));
  const double misalign = std::max(std::abs(psi_err), lat_err / 2.5);
  if (misalign > 0.25)
    vdes = std::min(vdes, kCruiseSpeed * std::clamp(1.25 - misalign, 0.3, 1.0));

  // Constraints that demand a full stop: route end and traffic ahead.
  const double remaining = route.length() - s;
  double vstop = std::sqrt(2.0 * 2.0 * std::max(0.0, remaining - 2.0));
  for (const Agent& a : w.agents()) {
    if (!a.active) continue;
    if (a.pedestrian && !a.walking) continue;
    const Vec2 rel = world_to_body(a.state.pose.position(), ego.pose);
    bool threat;
    if (a.pedestrian) {
      // A crossing pedestrian enters the lane band quickly, so anticipate:
      // brake while it is near the lane or still approaching it from the side.
      const double vx = a.state.v * std::sin(ego.pose.yaw - a.state.pose.yaw);
      threat = std::abs(rel.x) < 4.5 || (std::abs(rel.x) < 12.0 && rel.x * vx < 0.0);
    } else {
      threat = std::abs(rel.x) < 3.0;
    }
    if (threat && rel.y > 0 && rel.y < 45.0) {
      const double gap = a.pedestrian ? 5.0 : 7.0;
      vstop = std::min(vstop, std::sqrt(2.0 * kBrakeAccel * std::max(0.0, rel.y - gap)));
    }
    // Anything inside the safety corridor is an emergency stop.
    if (std::abs(rel.x) < kLaneOffset && rel.y > 0 && rel.y < 12.0) vstop = 0.0;
  }
  vdes = std::min(vdes, vstop);

  u.accel = std::clamp(0.8 * (vdes - ego.v), -w.ego_params().max_decel,
                       w.ego_params().max_accel);
  // A proportional term alone lags the braking ramp and overruns the stop
  // point, so feed the ramp's deceleration forward when slowing for a stop.
  if (vstop < ego.v)
    u.accel = std::clamp(-kBrakeAccel + 0.8 * (vstop - ego.v),
                         -w.ego_params().max_decel, u.accel);
  if (vdes < 0.5 && ego.v > 0.0) u.accel = -w.ego_params().max_decel;
  return u;
}

}  // namespace dl::sim
