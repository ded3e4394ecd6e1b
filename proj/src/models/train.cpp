#include "dl/models/train.hpp"

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>
#include <vector>

#include "dl/jsonw.hpp"
#include "dl/nn/adam.hpp"

namespace dl::models {

using nn::Tensor;
using nn::real;

namespace {

// Epoch shuffling: a fresh Fisher-Yates permutation whenever one is used up.
class Shuffler {
 public:
  Shuffler(size_t n, uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), size_t{0});
    reshuffle();
  }
  size_t next() {
    if (cur_ >= order_.size()) reshuffle();
    return order_[cur_++];
  }

 private:
  void reshuffle() {
    for (size_t i = order_.size(); i > 1; --i)
      std::swap(order_[i - 1], order_[rng_.uniform_int(i)]);
    cur_ = 0;
  }
  std::vector<size_t> order_;
  size_t cur_ = 0;
  Rng rng_;
};

double sample_loss(const Model& m, const TrainSample& s) {
  ModelOutput out = m.forward(s.images, s.motions, s.command);
  Tensor loss = has_uncertainty(m.variant())
                    ? heteroscedastic_loss(out.trajectory, out.log_var, s.target)
                    : mse_loss(out.trajectory, s.target);
  return static_cast<double>(loss.item());
}

// Same architecture, private storage: workers backpropagate into a shadow and
// the main thread folds shadow gradients into the model in sample order.
Model make_shadow(const Model& m) {
  Model s(m.config(), m.variant(), 0);
  auto& sp = s.params();
  const auto& mp = m.params();
  for (size_t i = 0; i < sp.size(); ++i) sp[i].second.values() = mp[i].second.values();
  return s;
}

// One gradient-accumulation batch. Per-sample gradients merge in index order
// behind a turnstile, so the result does not depend on the worker count.
double run_batch(Model& model, const SampleSource& src, const std::vector<size_t>& batch,
                 std::vector<Model>& shadows, long long step) {
  const real scale = real(1) / real(batch.size());
  double loss_sum = 0;
  std::atomic<size_t> next{0};
  size_t next_reduce = 0;
  bool failed = false;
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::exception_ptr> errors(shadows.size());

  auto work = [&](size_t w) {
    Model& shadow = shadows[w];
    try {
      auto& sp = shadow.params();
      auto& mp = model.params();  // identical build order as the shadow
      for (size_t p = 0; p < sp.size(); ++p) sp[p].second.values() = mp[p].second.values();
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= batch.size()) break;
        const TrainSample s = src.get(batch[i]);
        for (auto& [name, t] : shadow.params()) t.zero_grad();
        double loss;
        {
          nn::Tape tape;
          ModelOutput out = shadow.forward(s.images, s.motions, s.command);
          Tensor l = has_uncertainty(shadow.variant())
                         ? heteroscedastic_loss(out.trajectory, out.log_var, s.target)
                         : mse_loss(out.trajectory, s.target);
          loss = static_cast<double>(l.item());
          tape.backward(l);
        }
        std::unique_lock lk(mu);
        cv.wait(lk, [&] { return failed || next_reduce == i; });
        if (failed) break;
        for (size_t p = 0; p < mp.size(); ++p) {
          auto& dst = mp[p].second.grads();
          const auto& g = sp[p].second.grads();
          for (size_t j = 0; j < dst.size(); ++j) dst[j] += g[j] * scale;
        }
        loss_sum += loss;
        ++next_reduce;
        cv.notify_all();
      }
    } catch (...) {
      errors[w] = std::current_exception();
      std::lock_guard lk(mu);
      failed = true;
      cv.notify_all();
    }
  };

  if (shadows.size() == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < shadows.size(); ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }
  for (std::exception_ptr& e : errors)
    if (e) {
      try {
        std::rethrow_exception(e);
      } catch (const VerifyError& v) {
        std::string ids;
        for (size_t b : batch) ids += (ids.empty() ? "" : ",") + std::to_string(b);
        throw VerifyError("training aborted at step " + std::to_string(step) + ": " +
                          v.what() + " (batch samples " + ids + ")");
      }
    }
  return loss_sum / static_cast<double>(batch.size());
}

}  // namespace

double evaluate(const Model& model, const SampleSource& source, int max_samples, int jobs) {
  if (source.size() == 0) throw DataError("evaluate: sample source is empty");
  const size_t n = max_samples > 0
                       ? std::min(source.size(), static_cast<size_t>(max_samples))
                       : source.size();
  std::vector<double> losses(n, 0);
  std::atomic<size_t> next{0};
  const size_t workers = std::min(static_cast<size_t>(std::max(jobs, 1)), n);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](size_t w) {
    try {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n) break;
        losses[i] = sample_loss(model, source.get(i));  // inference only: no tape
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (errors.size() == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (size_t w = 0; w < errors.size(); ++w) pool.emplace_back(work, w);
    for (std::thread& t : pool) t.join();
  }
  for (std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  double sum = 0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(n);
}

TrainResult train(Model& model, const SampleSource& train_set, const SampleSource& val_set,
                  const TrainOptions& opt) {
  if (train_set.size() == 0) throw DataError("train: training split is empty");
  if (val_set.size() == 0) throw DataError("train: validation split is empty");
  require(opt.lr > 0, "train: learning rate must be positive");
  require(opt.batch_size >= 1 && opt.max_steps >= 1 && opt.eval_every >= 1 &&
              opt.patience >= 1 && opt.jobs >= 1,
          "train: batch size, step counts and jobs must be positive");

  std::vector<Tensor> params;
  for (auto& [name, t] : model.params()) params.push_back(t);
  nn::Adam adam(params, real(opt.lr));

  const size_t workers = static_cast<size_t>(
      std::max(1, std::min(opt.jobs, opt.batch_size)));
  std::vector<Model> shadows;
  shadows.reserve(workers);
  for (size_t w = 0; w < workers; ++w) shadows.push_back(make_shadow(model));

  Shuffler shuffle(train_set.size(), opt.seed);
  TrainResult res;
  res.best_val = std::numeric_limits<double>::infinity();
  double train_accum = 0;
  long long train_batches = 0;
  int stale = 0;

  for (long long step = 1; step <= opt.max_steps; ++step) {
    std::vector<size_t> batch(static_cast<size_t>(opt.batch_size));
    for (size_t& b : batch) b = shuffle.next();
    adam.zero_grad();
    train_accum += run_batch(model, train_set, batch, shadows, step);
    ++train_batches;
    adam.step();
    res.steps = step;

    if (step % opt.eval_every == 0 || step == opt.max_steps) {
      const double val = evaluate(model, val_set, opt.eval_max_samples, opt.jobs);
      if (!std::isfinite(val))
        throw VerifyError("training aborted at step " + std::to_string(step) +
                          ": validation loss is not finite");
      CurvePoint pt{step, train_accum / static_cast<double>(train_batches), val};
      res.curve.push_back(pt);
      train_accum = 0;
      train_batches = 0;
      const bool improved = val < res.best_val;
      if (improved) {
        res.best_val = val;
        res.best_step = step;
        stale = 0;
        if (!opt.checkpoint_path.empty()) model.save(opt.checkpoint_path);
      } else {
        ++stale;
      }
      if (opt.verbose) {
        std::printf("step %lld  train %.6f  val %.6f  best %.6f @ %lld%s\n", pt.step,
                    pt.train_loss, pt.val_loss, res.best_val, res.best_step,
                    improved ? " *" : "");
        std::fflush(stdout);
      }
      if (stale >= opt.patience) {
        res.early_stopped = true;
        break;
      }
    }
  }

  if (!opt.curve_path.empty()) {
    std::ofstream out(opt.curve_path, std::ios::binary);
    if (!out) throw DataError("train: cannot write loss curve: " + opt.curve_path);
    out << "step,train_loss,val_loss\n";
    for (const CurvePoint& pt : res.curve)
      out << pt.step << ',' << fmt_double(pt.train_loss) << ',' << fmt_double(pt.val_loss)
          << '\n';
  }
  return res;
}

}  // namespace dl::models
