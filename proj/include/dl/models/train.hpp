#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dl/models/net.hpp"

namespace dl::models {

// One supervised example: a history window and the future to imitate.
struct TrainSample {
  nn::Tensor images;   // {history, 3, obs_h, obs_w} in [0,1]
  nn::Tensor motions;  // {history, 3}
  sim::Command command = sim::Command::KeepStraight;
  nn::Tensor target;   // {horizon, 3}
};

// Lazily materialized sample store. get() must be safe to call from several
// threads at once; training never holds more than a batch in memory.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual size_t size() const = 0;
  virtual TrainSample get(size_t index) const = 0;
};

// Trivial in-memory source, used by tests and synthetic tasks.
class VectorSource final : public SampleSource {
 public:
  explicit VectorSource(std::vector<TrainSample> samples) : samples_(std::move(samples)) {}
  size_t size() const override { return samples_.size(); }
  TrainSample get(size_t index) const override { return samples_.at(index); }

 private:
  std::vector<TrainSample> samples_;
};

struct TrainOptions {
  double lr = 1e-4;
  int batch_size = 15;
  int max_steps = 20000;
  int eval_every = 200;       // optimizer steps between validation passes
  int patience = 10;          // validation passes without improvement -> stop
  int eval_max_samples = 0;   // 0 = whole validation split
  int jobs = 1;               // batch-shard worker threads
  uint64_t seed = 0;          // shuffling only; model weights are seeded at build
  std::string checkpoint_path;  // best-validation model; empty = don't save
  std::string curve_path;       // loss-curve CSV; empty = don't save
  bool verbose = false;
};

struct CurvePoint {
  long long step = 0;
  double train_loss = 0;  // mean training loss since the previous evaluation
  double val_loss = 0;
};

struct TrainResult {
  std::vector<CurvePoint> curve;
  double best_val = 0;
  long long best_step = 0;
  long long steps = 0;
  bool early_stopped = false;
};

// Mini-batch Adam on the model's parameters. Each sample runs through its own
// command branch; per-sample gradients are merged in sample order, so results
// are independent of the worker count. Throws DataError on an empty split and
// VerifyError (with step/batch diagnostics) when the loss turns non-finite.
TrainResult train(Model& model, const SampleSource& train_set, const SampleSource& val_set,
                  const TrainOptions& opt);

// Mean loss of the model over (a deterministic subset of) a sample source;
// the loss is heteroscedastic when the variant has an uncertainty head, else
// half mean squared error.
double evaluate(const Model& model, const SampleSource& source, int max_samples = 0,
                int jobs = 1);

}  // namespace dl::models
