#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dl/sim/collect.hpp"
#include "dl/sim/map.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace dl;
using namespace dl::sim;
namespace fs = std::filesystem;

namespace {

std::string asset(const std::string& rel) { return std::string(DRIVELINE_ASSET_DIR) + "/" + rel; }

MapData town_a() { return parse_map(asset("maps/town-a.map")); }

MapData straight_map(double len = 400) {
  std::string txt = "town line\nbounds -50 -50 " + std::to_string(len + 50) +
                    " 50\nnode a 0 0\nnode b " + std::to_string(len) + " 0\nedge a b\n";
  return parse_map_text(txt, "inline");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("driveline_collect_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

size_t count_noise_windows(const EpisodeLog& log) {
  size_t windows = 0;
  bool prev = false;
  for (const TickRecord& r : log.ticks) {
    if (r.noise && !prev) ++windows;
    prev = r.noise;
  }
  return windows;
}

}  // namespace

TEST_CASE("clean episode on an empty straight road arrives and round-trips") {
  TempDir tmp("clean");
  MapData m = straight_map(400);
  CollectOptions opt;
  opt.noise = false;
  opt.traffic = false;
  opt.route_nodes = {"a", "b"};

  EpisodeSummary sum = collect_episode(m, opt, 3, tmp.path.string(), "ep0");
  CHECK(sum.outcome == "arrived");
  CHECK_FALSE(sum.flagged);
  CHECK(sum.route_length == doctest::Approx(380).epsilon(0.01));  // minus end cuts
  CHECK(sum.distance > sum.route_length - 15);
  CHECK(sum.distance < sum.route_length + 5);
  CHECK(sum.duration < 60);

  const fs::path dir = tmp.path / "ep0";
  CHECK(fs::exists(dir / "meta.json"));
  CHECK(fs::exists(dir / "ticks.jsonl"));
  size_t frames = 0;
  for (const auto& e : fs::directory_iterator(dir / "frames")) {
    CHECK(e.path().extension() == ".ppm");
    ++frames;
  }
  CHECK(frames == static_cast<size_t>(sum.ticks));

  EpisodeLog log = load_episode(dir.string());
  CHECK(log.id == "ep0");
  CHECK(log.map_name == "line");
  CHECK(log.profile == "car");
  CHECK(log.route_nodes == std::vector<std::string>{"a", "b"});
  CHECK(log.weather == Weather::ClearDay);
  CHECK(log.seed == 3);
  CHECK(log.dt == kTick);
  CHECK(log.outcome == sum.outcome);
  CHECK(log.flagged == sum.flagged);
  CHECK(log.failure_tick == -1);
  CHECK(log.route_length == sum.route_length);
  CHECK(log.distance == sum.distance);
  CHECK(log.duration == sum.duration);
  CHECK(log.ticks.size() == static_cast<size_t>(sum.ticks));
  CHECK(log.render_width == 96);
  CHECK(log.render_height == 96);
  CHECK(fs::exists(log.frame_path(0)));
  CHECK(fs::exists(log.frame_path(sum.ticks - 1)));

  for (size_t i = 0; i < log.ticks.size(); ++i) {
    const TickRecord& r = log.ticks[i];
    CHECK(r.tick == static_cast<int>(i));
    CHECK(r.t == static_cast<double>(static_cast<int>(i)) * kTick);  // uniform tick times
    CHECK_FALSE(r.noise);
    // Noise off: what the vehicle executed is exactly what the expert asked.
    CHECK(r.applied.steer == r.reference.steer);
    CHECK(r.applied.accel == r.reference.accel);
    CHECK(r.cmd == Command::KeepStraight);
    CHECK(r.v >= 0);
  }
}

TEST_CASE("noise windows appear on schedule and touch only steering") {
  TempDir tmp("noise");
  MapData m = town_a();
  CollectOptions opt;
  opt.noise = true;
  opt.traffic = false;
  opt.route_min_m = 300;
  opt.route_max_m = 500;

  EpisodeSummary sum = collect_episode(m, opt, 11, tmp.path.string(), "ep0");
  EpisodeLog log = load_episode((tmp.path / "ep0").string());
  REQUIRE(log.ticks.size() > 0);

  CHECK(count_noise_windows(log) >=
        static_cast<size_t>(std::floor(sum.duration / opt.noise_period)));

  bool any_perturbed = false;
  for (const TickRecord& r : log.ticks) {
    CHECK(r.applied.accel == r.reference.accel);  // noise only perturbs steer
    if (!r.noise) {
      CHECK(r.applied.steer == r.reference.steer);
    } else {
      if (r.applied.steer != r.reference.steer) any_perturbed = true;
      CHECK(std::abs(r.applied.steer - r.reference.steer) <= 0.45 + 1e-12);
    }
  }
  CHECK(any_perturbed);
}

TEST_CASE("replay from the log reproduces every state, control and frame decision") {
  TempDir tmp("replay");
  MapData m = town_a();
  CollectOptions opt;
  opt.noise = true;
  opt.traffic = true;
  opt.route_min_m = 300;
  opt.route_max_m = 500;

  collect_episode(m, opt, 7, tmp.path.string(), "ep0");
  EpisodeLog log = load_episode((tmp.path / "ep0").string());
  REQUIRE(log.ticks.size() > 10);

  std::vector<int> nodes;
  for (const std::string& id : log.route_nodes) nodes.push_back(m.node_index(id));
  Route route = build_route(m, nodes);
  CHECK(route.length() == log.route_length);

  WorldConfig wc;
  wc.weather = log.weather;
  wc.seed = log.seed;
  wc.dynamic_traffic = log.traffic;
  wc.noise_enabled = log.noise;
  World w(m, route, wc);

  for (const TickRecord& r : log.ticks) {
    REQUIRE(w.tick() == r.tick);
    // The log round-trips losslessly: replayed state matches to the last bit.
    REQUIRE(w.ego().pose.x == r.pose.x);
    REQUIRE(w.ego().pose.y == r.pose.y);
    REQUIRE(w.ego().pose.yaw == r.pose.yaw);
    REQUIRE(w.ego().v == r.v);
    REQUIRE(w.progress_s() == r.route_s);
    CHECK(w.command() == r.cmd);
    CHECK(w.in_noise_window(w.time()) == r.noise);
    // Clean-trace property: the stored reference equals the expert recomputed
    // at the logged state; the noise overlay never leaks into it.
    Controls e = expert_controls(w);
    REQUIRE(e.steer == r.reference.steer);
    REQUIRE(e.accel == r.reference.accel);
    Controls applied = w.step(e);
    REQUIRE(applied.steer == r.applied.steer);
    REQUIRE(applied.accel == r.applied.accel);
  }
  CHECK(w.arrived() == (log.outcome == "arrived"));
  CHECK((log.outcome == "arrived" || w.failed()));
}

TEST_CASE("logged commands follow the route with one contiguous turn segment") {
  TempDir tmp("cmd");
  MapData m = town_a();
  CollectOptions opt;
  opt.noise = false;
  opt.traffic = false;

  // East then north through the junction at (140, 0): a single left turn.
  opt.route_nodes = {"a00", "a10", "a11"};
  collect_episode(m, opt, 5, tmp.path.string(), "left");
  EpisodeLog log = load_episode((tmp.path / "left").string());
  CHECK(log.outcome == "arrived");

  int runs = 0;
  bool in_turn = false;
  double first_turn_s = -1;
  for (const TickRecord& r : log.ticks) {
    CHECK(r.cmd != Command::TurnRight);
    if (r.cmd == Command::TurnLeft && !in_turn) {
      ++runs;
      if (first_turn_s < 0) first_turn_s = r.route_s;
    }
    in_turn = r.cmd == Command::TurnLeft;
  }
  CHECK(runs == 1);
  // The junction arc begins 140 - kJunctionCut past the 10 m start cut; the
  // label leads it by kCommandLead. One tick covers ~1.5 m at cruise speed.
  const double onset_s = (140.0 - kJunctionCut - 10.0) - kCommandLead;
  CHECK(first_turn_s >= onset_s - 1.0);
  CHECK(first_turn_s <= onset_s + 2.5);

  // Mirrored route: south then west is a right turn.
  opt.route_nodes = {"a11", "a10", "a00"};
  collect_episode(m, opt, 5, tmp.path.string(), "right");
  EpisodeLog rlog = load_episode((tmp.path / "right").string());
  int rruns = 0;
  bool rin = false;
  for (const TickRecord& r : rlog.ticks) {
    CHECK(r.cmd != Command::TurnLeft);
    if (r.cmd == Command::TurnRight && !rin) ++rruns;
    rin = r.cmd == Command::TurnRight;
  }
  CHECK(rruns == 1);
}

TEST_CASE("an episode that cannot finish is flagged as timeout but still written") {
  TempDir tmp("timeout");
  MapData m = straight_map(200);
  CollectOptions opt;
  opt.noise = false;
  opt.traffic = false;
  opt.route_nodes = {"a", "b"};
  opt.profile = VehicleParams::car();
  opt.profile.max_accel = 0.05;  // creeps far below cruise speed
  opt.profile_name = "crippled-car";

  EpisodeSummary sum = collect_episode(m, opt, 1, tmp.path.string(), "ep0");
  CHECK(sum.outcome == "timeout");
  CHECK(sum.flagged);
  CHECK(sum.distance < sum.route_length);

  EpisodeLog log = load_episode((tmp.path / "ep0").string());
  CHECK(log.outcome == "timeout");
  CHECK(log.flagged);
  CHECK(log.failure_tick == sum.ticks - 1);
  CHECK(log.profile == "crippled-car");
  CHECK(log.ticks.size() == static_cast<size_t>(sum.ticks));
  CHECK(fs::exists(log.frame_path(sum.ticks - 1)));
}

TEST_CASE("collection is byte-identical across reruns of the same seed") {
  TempDir tmp("det");
  MapData m = town_a();
  CollectOptions opt;
  opt.noise = true;
  opt.traffic = true;
  opt.route_min_m = 120;
  opt.route_max_m = 250;

  collect_episode(m, opt, 21, tmp.path.string(), "a");
  collect_episode(m, opt, 21, tmp.path.string(), "b");
  collect_episode(m, opt, 22, tmp.path.string(), "c");

  const fs::path da = tmp.path / "a", db = tmp.path / "b", dc = tmp.path / "c";
  // meta.json differs only in the id field; everything else must match.
  std::string ma = read_bytes(da / "meta.json"), mb = read_bytes(db / "meta.json");
  CHECK(ma.substr(ma.find("\"map\"")) == mb.substr(mb.find("\"map\"")));
  CHECK(read_bytes(da / "ticks.jsonl") == read_bytes(db / "ticks.jsonl"));
  CHECK(read_bytes(da / "ticks.jsonl") != read_bytes(dc / "ticks.jsonl"));

  std::vector<fs::path> fa;
  for (const auto& e : fs::directory_iterator(da / "frames")) fa.push_back(e.path());
  std::sort(fa.begin(), fa.end());
  size_t fb_count = std::distance(fs::directory_iterator(db / "frames"), {});
  REQUIRE(fa.size() == fb_count);
  for (const fs::path& p : fa)
    REQUIRE(read_bytes(p) == read_bytes(db / "frames" / p.filename()));
}

TEST_CASE("loading a missing or corrupt episode reports the offending file") {
  TempDir tmp("bad");
  CHECK_THROWS_AS(load_episode((tmp.path / "nope").string()), DataError);

  fs::create_directories(tmp.path / "ep");
  std::ofstream(tmp.path / "ep" / "meta.json") << "{\"id\": 3}";
  try {
    load_episode((tmp.path / "ep").string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("meta.json") != std::string::npos);
  }
}
