#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dl/geometry.hpp"
#include "dl/sim/collect.hpp"

namespace dl::dataset {

// Coarse driving-situation label used for rebalancing. "Brake" when the
// future clearly sheds speed, "recovery" when the history contains an
// injected disturbance, "cruise" otherwise; brake wins when both apply.
enum class Behavior { Cruise = 0, Brake = 1, Recovery = 2 };

const char* behavior_name(Behavior b);
Behavior parse_behavior(const std::string& s);  // throws DataError on unknown name

// One supervised example: 12 observation frames plus body-frame motion
// history, and the 22-point future both expressed in the frame of the most
// recent pose. The newest motion sample is exactly (v, 0, 0) by construction.
struct FrameRecord {
  std::string episode;  // source episode id
  int tick = 0;         // center tick within that episode
  sim::Command command = sim::Command::KeepStraight;
  sim::Weather weather = sim::Weather::ClearDay;
  Behavior behavior = Behavior::Cruise;
  std::vector<std::string> frames;  // kHistoryLen observation paths, oldest first
  std::vector<BodyPoint> motion;    // kHistoryLen samples, oldest first
  std::vector<BodyPoint> future;    // kHorizonLen samples, nearest first
};

// Every center tick t with a full 12-frame history and a 22-frame future
// becomes one record. Poses are interpolated to the exact frame times before
// body-frame conversion. Center ticks whose future window reaches the tick of
// a collision or off-road failure are dropped; an episode shorter than one
// window yields an empty list.
std::vector<FrameRecord> build_records(const sim::EpisodeLog& log);

// Per-cell cap/floor. A cell is a concrete (weather, command, behavior)
// triple; rule fields are name strings or "*". Several rules may match one
// cell: the tightest cap and the highest floor win.
struct QuotaRule {
  std::string weather = "*";
  std::string command = "*";
  std::string behavior = "*";
  long long cap = -1;   // keep at most this many records, -1 = unlimited
  long long floor = 0;  // want at least this many (deficiency is reported)
};

struct CellReport {
  std::string weather, command, behavior;
  size_t before = 0, after = 0;
  long long floor = 0;
  bool deficient = false;  // fewer records than the floor asked for
};

struct BalanceReport {
  std::vector<CellReport> cells;  // sorted by (weather, command, behavior)
  size_t before_total = 0, after_total = 0;
};

// Deterministically subsamples over-cap cells; the draw for each cell comes
// from an independent substream of `seed`, so adding rules for one cell never
// reshuffles another. Record order is preserved. No rules = identity.
std::pair<std::vector<FrameRecord>, BalanceReport> balance(
    const std::vector<FrameRecord>& records, const std::vector<QuotaRule>& quotas,
    uint64_t seed);

struct SplitRatios {
  int train = 7, val = 1, test = 2;
};

struct DatasetManifest {
  int version = 1;
  double dt = kTick;
  int obs_width = 0, obs_height = 0;
  int history = kHistoryLen, horizon = kHorizonLen;
  std::vector<size_t> train, val, test;  // record indices per split
  std::map<std::string, size_t> weather_counts, command_counts, behavior_counts;
  BalanceReport balance;
};

// Assigns whole episodes to splits (no episode straddles two), matching the
// ratios within one episode's worth of records: shuffled episodes go greedily
// to the split with the largest remaining deficit. Requires >= 10 episodes.
// Count fields are filled from `records`; dt/observation shape are left for
// the caller, who knows the source logs.
DatasetManifest split(const std::vector<FrameRecord>& records, const SplitRatios& ratios,
                      uint64_t seed);

struct Dataset {
  DatasetManifest manifest;
  std::vector<FrameRecord> records;  // frame paths resolved against the dataset dir
};

// Writes dir/manifest.json, dir/records.jsonl and dir/frames/. Each source
// observation is stored once per tick (hard-linked when the filesystem
// allows) no matter how many overlapping windows reference it.
void save_dataset(const std::vector<FrameRecord>& records, const DatasetManifest& manifest,
                  const std::string& dir);

// Throws DataError with file context on version mismatch or corrupt rows.
Dataset load_dataset(const std::string& dir);

}  // namespace dl::dataset
