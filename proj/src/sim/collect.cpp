#include "dl/sim/collect.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dl/jsonw.hpp"
#include "dl/ppm.hpp"

namespace dl::sim {

namespace fs = std::filesystem;

namespace {

std::string frame_name(int tick) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d.ppm", tick);
  return buf;
}

}  // namespace

std::string EpisodeLog::frame_path(int tick) const {
  return (fs::path(dir) / "frames" / frame_name(tick)).string();
}

EpisodeSummary collect_episode(const MapData& map, const CollectOptions& opt, uint64_t seed,
                               const std::string& out_dir, const std::string& id) {
  std::vector<int> nodes;
  if (opt.route_nodes.empty()) {
    Rng route_rng = Rng::substream(seed, Rng::hash_str("route"));
    nodes = random_route_nodes(map, route_rng, opt.route_min_m, opt.route_max_m);
  } else {
    for (const std::string& id : opt.route_nodes) nodes.push_back(map.node_index(id));
  }
  Route route = build_route(map, nodes);

  WorldConfig wc;
  wc.ego_params = opt.profile;
  wc.weather = opt.weather;
  wc.seed = seed;
  wc.dynamic_traffic = opt.traffic;
  wc.traffic_vehicles_per_km = opt.traffic_vehicles_per_km;
  wc.traffic_peds_per_km = opt.traffic_peds_per_km;
  wc.noise_enabled = opt.noise;
  wc.noise_period = opt.noise_period;
  wc.render_width = opt.render_width;
  wc.render_height = opt.render_height;
  World w(map, route, wc);

  // Recollecting into an existing directory must not leave stale frames
  // behind, or reruns would stop being byte-identical.
  const fs::path dir = fs::path(out_dir) / id;
  fs::remove_all(dir);
  fs::create_directories(dir / "frames");

  // Generous budget: a clean run cruises at 40 km/h, so well under half of it.
  const int max_ticks =
      static_cast<int>((route.length() / (0.4 * kCruiseSpeed) + 30.0) / kTick);

  double distance = 0;
  Pose2D last_pose = w.ego().pose;
  while (!w.arrived() && !w.failed() && w.tick() < max_ticks) {
    write_ppm((dir / "frames" / frame_name(w.tick())).string(), wc.render_width,
              wc.render_height, w.render());
    w.step(expert_controls(w));
    distance += (w.ego().pose.position() - last_pose.position()).norm();
    last_pose = w.ego().pose;
  }

  EpisodeSummary sum;
  sum.id = id;
  sum.outcome = w.arrived()  ? "arrived"
                : w.failed() ? failure_name(w.failure())
                             : "timeout";
  sum.flagged = !w.arrived();
  sum.ticks = w.tick();
  sum.route_length = route.length();
  sum.distance = distance;
  sum.duration = w.time();

  {
    JsonWriter j;
    j.begin_obj();
    j.kv("id", sum.id);
    j.kv("map", map.name);
    j.kv("weather", weather_name(opt.weather));
    j.kv("profile", opt.profile_name);
    j.key("route_nodes").begin_arr();
    for (int n : nodes) j.value(map.nodes[static_cast<size_t>(n)].id);
    j.end_arr();
    j.key("seed").value(static_cast<unsigned long long>(seed));
    j.kv("dt", kTick);
    j.kv("ticks", sum.ticks);
    j.kv("route_length", sum.route_length);
    j.kv("distance", sum.distance);
    j.kv("duration", sum.duration);
    j.kv("noise", opt.noise);
    j.kv("noise_period", opt.noise_period);
    j.kv("traffic", opt.traffic);
    j.kv("outcome", sum.outcome);
    j.kv("flagged", sum.flagged);
    // Index into ticks.jsonl of the step on which the episode ended badly.
    j.kv("failure_tick", sum.flagged ? static_cast<long long>(sum.ticks - 1) : -1LL);
    j.kv("render_width", wc.render_width);
    j.kv("render_height", wc.render_height);
    j.end_obj();
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw DataError("collect: cannot write " + (dir / "meta.json").string());
    out << j.str() << '\n';
  }

  {
    std::ofstream out(dir / "ticks.jsonl", std::ios::binary);
    if (!out) throw DataError("collect: cannot write " + (dir / "ticks.jsonl").string());
    int i = 0;
    for (const TickLog& lg : w.log()) {
      JsonWriter j;
      j.begin_obj();
      j.kv("tick", i++);
      j.kv("t", lg.t);
      j.kv("x", lg.pose.x);
      j.kv("y", lg.pose.y);
      j.kv("yaw", lg.pose.yaw);
      j.kv("v", lg.v);
      j.kv("steer", lg.applied.steer);
      j.kv("accel", lg.applied.accel);
      j.kv("ref_steer", lg.commanded.steer);
      j.kv("ref_accel", lg.commanded.accel);
      j.kv("cmd", command_name(lg.cmd));
      j.kv("noise", lg.noise_active);
      j.kv("s", lg.route_s);
      j.end_obj();
      out << j.str() << '\n';
    }
  }
  return sum;
}

EpisodeLog load_episode(const std::string& dir) {
  EpisodeLog log;
  log.dir = dir;

  const fs::path meta_path = fs::path(dir) / "meta.json";
  std::ifstream meta_in(meta_path, std::ios::binary);
  if (!meta_in) throw DataError("episode: cannot open " + meta_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(meta_in);
    log.id = m.at("id").get<std::string>();
    log.map_name = m.at("map").get<std::string>();
    log.weather = parse_weather(m.at("weather").get<std::string>());
    log.profile = m.at("profile").get<std::string>();
    log.route_nodes = m.at("route_nodes").get<std::vector<std::string>>();
    log.seed = m.at("seed").get<uint64_t>();
    log.dt = m.at("dt").get<double>();
    log.route_length = m.at("route_length").get<double>();
    log.distance = m.at("distance").get<double>();
    log.duration = m.at("duration").get<double>();
    log.noise = m.at("noise").get<bool>();
    log.traffic = m.at("traffic").get<bool>();
    log.outcome = m.at("outcome").get<std::string>();
    log.flagged = m.at("flagged").get<bool>();
    log.failure_tick = m.at("failure_tick").get<long long>();
    log.render_width = m.at("render_width").get<int>();
    log.render_height = m.at("render_height").get<int>();
  } catch (const std::exception& e) {
    throw DataError("episode: bad meta " + meta_path.string() + ": " + e.what());
  }

  const fs::path ticks_path = fs::path(dir) / "ticks.jsonl";
  std::ifstream in(ticks_path, std::ios::binary);
  if (!in) throw DataError("episode: cannot open " + ticks_path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      TickRecord r;
      r.tick = j.at("tick").get<int>();
      r.t = j.at("t").get<double>();
      r.pose.x = j.at("x").get<double>();
      r.pose.y = j.at("y").get<double>();
      r.pose.yaw = j.at("yaw").get<double>();
      r.v = j.at("v").get<double>();
      r.applied.steer = j.at("steer").get<double>();
      r.applied.accel = j.at("accel").get<double>();
      r.reference.steer = j.at("ref_steer").get<double>();
      r.reference.accel = j.at("ref_accel").get<double>();
      r.cmd = parse_command(j.at("cmd").get<std::string>());
      r.noise = j.at("noise").get<bool>();
      r.route_s = j.at("s").get<double>();
      log.ticks.push_back(r);
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError("episode: bad tick record " + ticks_path.string() + ":" +
                      std::to_string(lineno) + ": " + e.what());
    }
  }
  if (static_cast<long long>(log.ticks.size()) !=
      m.at("ticks").get<long long>())
    throw DataError("episode: " + ticks_path.string() + " has " +
                    std::to_string(log.ticks.size()) + " records, meta says " +
                    m.at("ticks").dump());
  return log;
}

}  // namespace dl::sim
