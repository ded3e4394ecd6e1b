#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dl/geometry.hpp"
#include "dl/rng.hpp"

#include <cmath>

using namespace dl;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("normalize_angle wraps into (-pi, pi]") {
  CHECK(normalize_angle(0.0) == doctest::Approx(0.0));
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));  // -pi maps to the closed end
  CHECK(normalize_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-3.5 * kPi) == doctest::Approx(0.5 * kPi));
  CHECK(normalize_angle(2 * kPi + 0.25) == doctest::Approx(0.25));

  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double n = normalize_angle(a);
    CHECK(n > -kPi - 1e-15);
    CHECK(n <= kPi + 1e-15);
    // Same direction: sin/cos agree with the input angle.
    CHECK(std::sin(n) == doctest::Approx(std::sin(a)).epsilon(1e-9));
    CHECK(std::cos(n) == doctest::Approx(std::cos(a)).epsilon(1e-9));
  }
}

TEST_CASE("lerp_angle takes the shorter arc") {
  CHECK(lerp_angle(0.0, kPi / 2, 0.5) == doctest::Approx(kPi / 4));
  // Across the wrap: 170deg -> -170deg should pass through 180deg.
  const double a = 170.0 * kPi / 180.0;
  const double b = -170.0 * kPi / 180.0;
  CHECK(std::abs(lerp_angle(a, b, 0.5)) == doctest::Approx(kPi));
  CHECK(lerp_angle(a, b, 0.0) == doctest::Approx(a));
  CHECK(lerp_angle(a, b, 1.0) == doctest::Approx(normalize_angle(b)));
}

TEST_CASE("world/body transforms match hand-built cases") {
  // Vehicle at origin facing +x (yaw 0): forward is +x world, so a point dead
  // ahead has body y > 0; a point to the vehicle's right (world -y) has x > 0.
  Pose2D ref{0, 0, 0};
  Vec2 ahead = world_to_body({5, 0}, ref);
  CHECK(ahead.x == doctest::Approx(0.0));
  CHECK(ahead.y == doctest::Approx(5.0));
  Vec2 right = world_to_body({0, -2}, ref);
  CHECK(right.x == doctest::Approx(2.0));
  CHECK(right.y == doctest::Approx(0.0));

  // Facing +y (yaw pi/2): world +x is the vehicle's right.
  Pose2D up{1, 1, kPi / 2};
  Vec2 p = world_to_body({2, 1}, up);
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == doctest::Approx(0.0));
}

TEST_CASE("world/body round trip is exact to 1e-9") {
  Rng rng(42);
  for (int i = 0; i < 5000; ++i) {
    Pose2D ref{rng.uniform(-500, 500), rng.uniform(-500, 500), rng.uniform(-kPi, kPi)};
    Vec2 p{rng.uniform(-500, 500), rng.uniform(-500, 500)};
    Vec2 rt = body_to_world(world_to_body(p, ref), ref);
    CHECK(std::abs(rt.x - p.x) < 1e-9);
    CHECK(std::abs(rt.y - p.y) < 1e-9);
    Vec2 rt2 = world_to_body(body_to_world(p, ref), ref);
    CHECK(std::abs(rt2.x - p.x) < 1e-9);
    CHECK(std::abs(rt2.y - p.y) < 1e-9);
  }
}

TEST_CASE("interpolate_track is exact at knots and linear between") {
  std::vector<TimedSample> track;
  for (int i = 0; i <= 10; ++i) {
    TimedSample s;
    s.t = 0.5 * i;
    s.pose = {double(i), double(i * i), normalize_angle(0.1 * i)};
    s.speed = 2.0 + 0.3 * i;
    track.push_back(s);
  }

  auto exact = interpolate_track(track, {0.0, 2.5, 5.0});
  CHECK(exact[0].pose.x == doctest::Approx(0.0));
  CHECK(exact[1].pose.x == doctest::Approx(5.0));
  CHECK(exact[1].pose.y == doctest::Approx(25.0));
  CHECK(exact[2].speed == doctest::Approx(2.0 + 3.0));

  auto mid = interpolate_track(track, {0.25});
  CHECK(mid[0].pose.x == doctest::Approx(0.5));
  CHECK(mid[0].pose.y == doctest::Approx(0.5));
  CHECK(mid[0].speed == doctest::Approx(2.15));

  CHECK_THROWS_AS(interpolate_track(track, {-0.1}), std::out_of_range);
  CHECK_THROWS_AS(interpolate_track(track, {5.01}), std::out_of_range);
}

TEST_CASE("interpolate_track handles yaw wrap between knots") {
  std::vector<TimedSample> track(2);
  track[0] = {0.0, {0, 0, 170.0 * kPi / 180.0}, 1.0};
  track[1] = {1.0, {1, 0, -170.0 * kPi / 180.0}, 1.0};
  auto mid = interpolate_track(track, {0.5});
  CHECK(std::abs(mid[0].pose.yaw) == doctest::Approx(kPi));
}

TEST_CASE("trajectory validation enforces point count and finiteness") {
  Trajectory tr;
  tr.points.resize(kHorizonLen);
  CHECK_NOTHROW(tr.validate());
  tr.points.resize(10);
  CHECK_THROWS(tr.validate());
  tr.points.resize(kHorizonLen);
  tr.points[3].x = std::nan("");
  CHECK_THROWS(tr.validate());
}
