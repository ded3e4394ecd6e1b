#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dl/models/train.hpp"
#include "dl/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

using namespace dl;
using namespace dl::models;
using nn::Tensor;
using nn::real;

namespace {

NetConfig tiny() {
  NetConfig c;
  c.obs_h = 12;
  c.obs_w = 12;
  c.stem_ch = 3;
  c.blocks = {{2, 4, 2}, {2, 4, 1}};
  c.f_img = 6;
  c.f_mot = 4;
  c.att_hidden = 6;
  c.hidden = 6;
  c.lstm_layers = 2;
  c.history = 3;
  c.horizon = 4;
  c.fc_width = 8;
  return c;
}

TrainSample make_sample(const NetConfig& c, Rng& rng, double target_scale = 0.5) {
  TrainSample s;
  s.images = Tensor::zeros({c.history, 3, c.obs_h, c.obs_w});
  for (real& v : s.images.values()) v = real(rng.uniform());
  s.motions = Tensor::zeros({c.history, 3});
  for (real& v : s.motions.values()) v = real(rng.uniform(-1.0, 1.0));
  s.command = sim::Command::KeepStraight;
  s.target = Tensor::zeros({c.horizon, 3});
  for (real& v : s.target.values()) v = real(rng.normal(0.0, target_scale));
  return s;
}

// Every sample shares one observation; targets differ. The best any model can
// do is predict the target mean, leaving exactly the injected noise.
std::vector<TrainSample> constant_input_noisy_targets(const NetConfig& c, int n, double sd,
                                                      uint64_t seed) {
  Rng rng(seed);
  TrainSample base = make_sample(c, rng);
  std::vector<TrainSample> out;
  for (int i = 0; i < n; ++i) {
    TrainSample s;
    s.images = base.images;
    s.motions = base.motions;
    s.command = base.command;
    s.target = Tensor::zeros({c.horizon, 3});
    for (int64_t j = 0; j < s.target.numel(); ++j)
      s.target.values()[j] = base.target.values()[j] + real(rng.normal(0.0, sd));
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("training overfits a single sample") {
  const NetConfig cfg = tiny();
  Model m(cfg, Variant::M1, 5);
  Rng rng(3);
  VectorSource data({make_sample(cfg, rng)});

  const double initial = evaluate(m, data);
  TrainOptions opt;
  opt.lr = 1e-2;
  opt.batch_size = 4;
  opt.max_steps = 500;
  opt.eval_every = 100;
  opt.patience = 100;
  opt.seed = 1;
  TrainResult res = train(m, data, data, opt);
  const double final = evaluate(m, data);
  CHECK(final < 0.1 * initial);
  CHECK(res.steps == 500);
  CHECK(res.curve.size() == 5);
}

TEST_CASE("predicted log variance converges to the injected noise level") {
  for (double sd : {0.1, 0.5}) {
    CAPTURE(sd);
    const NetConfig cfg = tiny();
    Model m(cfg, Variant::M0, 9);
    VectorSource data(constant_input_noisy_targets(cfg, 200, sd, 17));

    TrainOptions opt;
    opt.lr = 1e-2;
    opt.batch_size = 10;
    opt.max_steps = 1200;
    opt.eval_every = 300;
    opt.patience = 100;
    opt.seed = 2;
    train(m, data, data, opt);

    TrainSample probe = data.get(0);
    ModelOutput out = m.forward(probe.images, probe.motions, probe.command);
    double mean_lv = 0;
    for (real v : out.log_var.values()) mean_lv += static_cast<double>(v);
    mean_lv /= static_cast<double>(out.log_var.numel());
    CHECK(std::abs(mean_lv - std::log(sd * sd)) < 0.2);
  }
}

TEST_CASE("same seed gives identical loss curves and worker count does not matter") {
  const NetConfig cfg = tiny();
  Rng rng(7);
  std::vector<TrainSample> tr, va;
  for (int i = 0; i < 12; ++i) tr.push_back(make_sample(cfg, rng));
  for (int i = 0; i < 4; ++i) va.push_back(make_sample(cfg, rng));
  VectorSource train_set(tr), val_set(va);

  TrainOptions opt;
  opt.lr = 1e-3;
  opt.batch_size = 5;
  opt.max_steps = 40;
  opt.eval_every = 10;
  opt.patience = 100;
  opt.seed = 11;

  Model a(cfg, Variant::M0, 13);
  TrainResult ra = train(a, train_set, val_set, opt);
  Model b(cfg, Variant::M0, 13);
  TrainResult rb = train(b, train_set, val_set, opt);
  opt.jobs = 3;
  Model c(cfg, Variant::M0, 13);
  TrainResult rc = train(c, train_set, val_set, opt);

  REQUIRE(ra.curve.size() == rb.curve.size());
  REQUIRE(ra.curve.size() == rc.curve.size());
  for (size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].train_loss == rb.curve[i].train_loss);
    CHECK(ra.curve[i].val_loss == rb.curve[i].val_loss);
    // Gradients merge in sample order, so threading must not change bits.
    CHECK(ra.curve[i].train_loss == rc.curve[i].train_loss);
    CHECK(ra.curve[i].val_loss == rc.curve[i].val_loss);
  }
  for (size_t p = 0; p < a.params().size(); ++p)
    for (int64_t j = 0; j < a.params()[p].second.numel(); ++j)
      REQUIRE(a.params()[p].second.values()[j] == c.params()[p].second.values()[j]);
}

TEST_CASE("early stopping keeps the best-validation checkpoint") {
  namespace fs = std::filesystem;
  const fs::path ckpt = fs::temp_directory_path() / "driveline_train_best.ckpt";
  const fs::path curve = fs::temp_directory_path() / "driveline_train_curve.csv";
  const NetConfig cfg = tiny();
  Rng rng(19);
  // Validation targets sit far from the training targets: fitting one drives
  // the other's loss up, which must trip the patience counter.
  TrainSample t = make_sample(cfg, rng);
  TrainSample v = t;
  v.target = Tensor::full({cfg.horizon, 3}, 4);
  VectorSource train_set({t}), val_set({v});

  Model m(cfg, Variant::M1, 23);
  TrainOptions opt;
  opt.lr = 1e-2;
  opt.batch_size = 2;
  opt.max_steps = 5000;
  opt.eval_every = 10;
  opt.patience = 5;
  opt.seed = 4;
  opt.checkpoint_path = ckpt.string();
  opt.curve_path = curve.string();
  TrainResult res = train(m, train_set, val_set, opt);

  CHECK(res.early_stopped);
  CHECK(res.steps < opt.max_steps);
  CHECK(res.best_step <= res.steps);
  CHECK(res.best_val <= res.curve.back().val_loss);

  // The checkpoint holds the weights from the best evaluation, not the last.
  Model best = Model::load(ckpt.string());
  CHECK(evaluate(best, val_set) == res.best_val);
  CHECK(evaluate(m, val_set) >= res.best_val);

  std::ifstream in(curve);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,train_loss,val_loss");
  size_t rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == res.curve.size());
  fs::remove(ckpt);
  fs::remove(curve);
}

TEST_CASE("training rejects empty splits and aborts on non-finite loss") {
  const NetConfig cfg = tiny();
  Model m(cfg, Variant::M1, 2);
  Rng rng(5);
  VectorSource data({make_sample(cfg, rng)});
  VectorSource empty(std::vector<TrainSample>{});
  TrainOptions opt;
  opt.max_steps = 5;
  opt.eval_every = 5;
  CHECK_THROWS_AS(train(m, empty, data, opt), DataError);
  CHECK_THROWS_AS(train(m, data, empty, opt), DataError);

  TrainSample poison = make_sample(cfg, rng);
  poison.target.values()[0] = std::numeric_limits<real>::quiet_NaN();
  VectorSource bad({poison});
  Model m2(cfg, Variant::M1, 2);
  try {
    train(m2, bad, data, opt);
    FAIL("expected VerifyError");
  } catch (const VerifyError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step 1") != std::string::npos);
    CHECK(msg.find("batch samples") != std::string::npos);
  }
}
