#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dl/models/net.hpp"
#include "dl/nn/gradcheck.hpp"
#include "dl/nn/ops.hpp"
#include "dl/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace dl;
using namespace dl::models;
using nn::Shape;
using nn::Tensor;
using nn::real;

namespace {

// Small enough that every parameter can go through finite differences.
NetConfig tiny() {
  NetConfig c;
  c.obs_h = 12;
  c.obs_w = 12;
  c.stem_ch = 3;
  c.blocks = {{2, 4, 2}, {2, 4, 1}};  // second block carries the residual path
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

Tensor rand_images(const NetConfig& c, Rng& rng) {
  Tensor t = Tensor::zeros({c.history, 3, c.obs_h, c.obs_w});
  for (real& v : t.values()) v = real(rng.uniform());
  return t;
}

Tensor rand_motions(const NetConfig& c, Rng& rng) {
  Tensor t = Tensor::zeros({c.history, 3});
  for (real& v : t.values()) v = real(rng.uniform(-2.0, 2.0));
  return t;
}

bool all_finite(const Tensor& t) {
  for (real v : t.values())
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

const std::vector<Variant> kAllVariants = {Variant::M0,    Variant::M1,
                                           Variant::M2,    Variant::M3,
                                           Variant::CnnFc, Variant::CnnLstm,
                                           Variant::CnnStateFc};

}  // namespace

TEST_CASE("config presets and json round trip") {
  NetConfig toy = NetConfig::toy();
  toy.validate();
  CHECK(toy.combined() == 160);  // 128 image + 32 motion
  CHECK(toy.out_dim() == 66);
  CHECK(toy.history == 12);
  CHECK(toy.horizon == 22);

  NetConfig full = NetConfig::full();
  full.validate();
  CHECK(full.blocks.size() == 17);
  CHECK(full.f_img == 512);
  CHECK(full.f_mot == 128);
  CHECK(full.combined() == 640);
  CHECK(full.hidden == 256);
  CHECK(full.lstm_layers == 3);

  const std::string j = full.to_json();
  NetConfig back = NetConfig::from_json(j);
  CHECK(back.to_json() == j);

  NetConfig bad = toy;
  bad.blocks.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = toy;
  bad.blocks.assign(8, {2, 4, 2});  // collapses a 96x96 input below 1x1
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(NetConfig::from_json("{"), ConfigError);
  CHECK_THROWS_AS(NetConfig::from_json("{}"), ConfigError);

  CHECK(parse_variant("m0") == Variant::M0);
  CHECK(parse_variant("cnnstate-fc") == Variant::CnnStateFc);
  CHECK_THROWS_AS(parse_variant("m9"), ConfigError);
  for (Variant v : kAllVariants) CHECK(parse_variant(variant_name(v)) == v);
}

TEST_CASE("forward output shapes per variant") {
  const NetConfig cfg = tiny();
  Rng rng(7);
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);
  for (Variant v : kAllVariants) {
    CAPTURE(variant_name(v));
    Model m(cfg, v, 1);
    ModelOutput out = m.forward(images, motions, sim::Command::KeepStraight);
    CHECK(out.trajectory.shape() == Shape{cfg.horizon, 3});
    CHECK(all_finite(out.trajectory));
    CHECK(out.log_var.defined() == has_uncertainty(v));
    if (out.log_var.defined()) {
      CHECK(out.log_var.shape() == Shape{cfg.horizon, 3});
      for (real lv : out.log_var.values()) {
        CHECK(lv >= real(kLogVarMin));
        CHECK(lv <= real(kLogVarMax));
      }
    }
    CHECK(out.attention.defined() == has_attention(v));
    if (out.attention.defined()) CHECK(out.attention.shape() == Shape{cfg.history});
  }

  Tensor bad = Tensor::zeros({cfg.history, 3, cfg.obs_h, cfg.obs_w + 1});
  Model m0(cfg, Variant::M0, 1);
  CHECK_THROWS(m0.forward(bad, motions, sim::Command::KeepStraight));
  CHECK_THROWS(m0.forward(images, Tensor::zeros({cfg.history, 2}),
                          sim::Command::KeepStraight));
}

TEST_CASE("attention starts uniform, stays positive and sums to one") {
  const NetConfig cfg = tiny();
  Model m(cfg, Variant::M0, 3);
  Rng rng(9);

  // Zero-initialized final attention layer: equal logits, uniform weights.
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);
  ModelOutput out = m.forward(images, motions, sim::Command::TurnLeft);
  for (real a : out.attention.values())
    CHECK(a == doctest::Approx(1.0 / cfg.history).epsilon(1e-12));

  // Softmax identities hold for arbitrary attention parameters.
  for (auto& [name, t] : m.params())
    if (name.find(".att") != std::string::npos)
      for (real& v : t.values()) v = real(rng.normal(0.0, 1.0));
  for (int trial = 0; trial < 5; ++trial) {
    Tensor im = rand_images(cfg, rng);
    Tensor mo = rand_motions(cfg, rng);
    ModelOutput o = m.forward(im, mo, sim::Command::TurnRight);
    real sum = 0;
    for (real a : o.attention.values()) {
      CHECK(a > real(0));
      sum += a;
    }
    CHECK(std::abs(static_cast<double>(sum) - 1.0) < 1e-9);
  }
}

TEST_CASE("unselected branches do not influence the output") {
  const NetConfig cfg = tiny();
  Rng rng(11);
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);
  for (Variant v : kAllVariants) {
    CAPTURE(variant_name(v));
    Model m(cfg, v, 5);
    ModelOutput before = m.forward(images, motions, sim::Command::TurnLeft);
    for (auto& [name, t] : m.params())
      if (name.rfind("branch0.", 0) == 0 || name.rfind("branch2.", 0) == 0)
        for (real& w : t.values()) w += real(0.37);
    ModelOutput after = m.forward(images, motions, sim::Command::TurnLeft);
    for (int64_t i = 0; i < before.trajectory.numel(); ++i)
      CHECK(before.trajectory.values()[i] == after.trajectory.values()[i]);
    if (has_uncertainty(v))
      for (int64_t i = 0; i < before.log_var.numel(); ++i)
        CHECK(before.log_var.values()[i] == after.log_var.values()[i]);
  }
}

TEST_CASE("image features occupy the leading combined indices and zero motion gives zero motion features") {
  const NetConfig cfg = tiny();
  Rng rng(13);
  Tensor images = rand_images(cfg, rng);
  const std::string wname = "branch0.lstm0.w_ih";

  // Zero the LSTM input columns that read the image part: the output must
  // then be invariant to the image, proving images feed indices [0, f_img).
  Model a(cfg, Variant::M0, 21);
  {
    Tensor w = a.param(wname);  // {4*hidden, combined}
    for (int r = 0; r < w.dim(0); ++r)
      for (int c = 0; c < cfg.f_img; ++c) w.values()[r * w.dim(1) + c] = 0;
  }
  Tensor motions = rand_motions(cfg, rng);
  ModelOutput o1 = a.forward(images, motions, sim::Command::KeepStraight);
  ModelOutput o2 = a.forward(rand_images(cfg, rng), motions, sim::Command::KeepStraight);
  for (int64_t i = 0; i < o1.trajectory.numel(); ++i)
    CHECK(o1.trajectory.values()[i] == o2.trajectory.values()[i]);

  // Zero motion input with zero encoder biases yields exactly zero motion
  // features: randomizing the motion columns of the LSTM input cannot matter.
  Model b(cfg, Variant::M0, 21);
  Tensor zero_mot = Tensor::zeros({cfg.history, 3});
  ModelOutput base = b.forward(images, zero_mot, sim::Command::KeepStraight);
  {
    Tensor w = b.param(wname);
    for (int r = 0; r < w.dim(0); ++r)
      for (int c = cfg.f_img; c < cfg.combined(); ++c)
        w.values()[r * w.dim(1) + c] = real(rng.normal(0.0, 3.0));
  }
  ModelOutput moved = b.forward(images, zero_mot, sim::Command::KeepStraight);
  for (int64_t i = 0; i < base.trajectory.numel(); ++i)
    CHECK(base.trajectory.values()[i] == moved.trajectory.values()[i]);
}

TEST_CASE("outputs respond to single-pixel changes and are deterministic per seed") {
  const NetConfig cfg = tiny();
  Rng rng(17);
  Model m(cfg, Variant::M0, 2);
  Model same(cfg, Variant::M0, 2);
  Model other(cfg, Variant::M0, 3);

  Tensor zero_img = Tensor::zeros({cfg.history, 3, cfg.obs_h, cfg.obs_w});
  Tensor motions = rand_motions(cfg, rng);
  ModelOutput z = m.forward(zero_img, motions, sim::Command::KeepStraight);
  CHECK(all_finite(z.trajectory));

  ModelOutput z2 = same.forward(zero_img, motions, sim::Command::KeepStraight);
  for (int64_t i = 0; i < z.trajectory.numel(); ++i)
    CHECK(z.trajectory.values()[i] == z2.trajectory.values()[i]);

  Tensor bumped = Tensor::zeros({cfg.history, 3, cfg.obs_h, cfg.obs_w});
  bumped.values()[42] = real(0.9);
  ModelOutput zb = m.forward(bumped, motions, sim::Command::KeepStraight);
  bool changed = false;
  for (int64_t i = 0; i < z.trajectory.numel(); ++i)
    changed = changed || z.trajectory.values()[i] != zb.trajectory.values()[i];
  CHECK(changed);

  ModelOutput zo = other.forward(zero_img, motions, sim::Command::KeepStraight);
  bool differs = false;
  for (int64_t i = 0; i < z.trajectory.numel(); ++i)
    differs = differs || z.trajectory.values()[i] != zo.trajectory.values()[i];
  CHECK(differs);
}

TEST_CASE("attention-free variant equals the full variant under uniform attention") {
  // At initialization the full model's attention is exactly uniform (1/12), so
  // feeding unscaled features through input weights scaled by 1/history must
  // reproduce it. This pins the modulation down to where it acts.
  const NetConfig cfg = tiny();
  Model m0(cfg, Variant::M0, 31);
  Model m2(cfg, Variant::M2, 99);
  for (auto& [name, t] : m2.params()) {
    Tensor src = m0.param(name);  // every attention-free tensor exists in m0
    t.values() = src.values();
    if (name.find("lstm0.w_ih") != std::string::npos)
      for (real& v : t.values()) v /= real(cfg.history);
  }
  Rng rng(23);
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);
  for (sim::Command c : {sim::Command::KeepStraight, sim::Command::TurnLeft}) {
    ModelOutput a = m0.forward(images, motions, c);
    ModelOutput b = m2.forward(images, motions, c);
    for (int64_t i = 0; i < a.trajectory.numel(); ++i)
      CHECK(a.trajectory.values()[i] ==
            doctest::Approx(b.trajectory.values()[i]).epsilon(1e-12));
  }
}

TEST_CASE("loss values match hand-computed cases") {
  Tensor zero = Tensor::zeros({22, 3});
  CHECK(heteroscedastic_loss(zero, zero, zero).item() == real(0));

  // r=1, lv=0: every element contributes 1/2.
  Tensor ones = Tensor::full({22, 3}, 1);
  CHECK(heteroscedastic_loss(ones, zero, zero).item() == doctest::Approx(0.5));

  // r=2, lv=ln4: 4/(2*4) + ln(4)/2 per element.
  Tensor twos = Tensor::full({22, 3}, 2);
  Tensor ln4 = Tensor::full({22, 3}, real(std::log(4.0)));
  CHECK(heteroscedastic_loss(twos, ln4, zero).item() ==
        doctest::Approx(0.5 + std::log(4.0) / 2).epsilon(1e-12));

  // Non-uniform residuals, lv = 0: reduces exactly to 1/2 MSE.
  Rng rng(29);
  Tensor pred = Tensor::zeros({22, 3});
  Tensor truth = Tensor::zeros({22, 3});
  for (real& v : pred.values()) v = real(rng.normal(0.0, 2.0));
  for (real& v : truth.values()) v = real(rng.normal(0.0, 2.0));
  CHECK(heteroscedastic_loss(pred, zero, truth).item() == mse_loss(pred, truth).item());

  CHECK_THROWS(mse_loss(pred, Tensor::zeros({21, 3})));
  Tensor inf = Tensor::full({22, 3}, std::numeric_limits<real>::infinity());
  CHECK_THROWS_AS(mse_loss(inf, zero), VerifyError);
}

TEST_CASE("loss in log variance is minimized exactly at ln r^2") {
  // d/dlv [ r^2 e^{-lv}/2 + lv/2 ] = 0  <=>  lv = ln r^2. Scan a grid around
  // the analytic optimum and require it to beat every other grid point.
  for (double r : {0.3, 1.0, 2.5}) {
    Tensor pred = Tensor::full({4, 3}, real(r));
    Tensor truth = Tensor::zeros({4, 3});
    const double best_lv = std::log(r * r);
    const double best =
        static_cast<double>(heteroscedastic_loss(pred, Tensor::full({4, 3}, real(best_lv)), truth).item());
    for (int i = -40; i <= 40; ++i) {
      if (i == 0) continue;
      const double lv = best_lv + 0.1 * i;
      Tensor lvt = Tensor::full({4, 3}, real(lv));
      CHECK(static_cast<double>(heteroscedastic_loss(pred, lvt, truth).item()) > best);
    }
  }
}

TEST_CASE("end-to-end gradient of loss of forward matches finite differences") {
  const NetConfig cfg = tiny();
  Model m(cfg, Variant::M0, 41);
  Rng rng(43);
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);
  Tensor truth = Tensor::zeros({cfg.horizon, 3});
  for (real& v : truth.values()) v = real(rng.normal(0.0, 1.0));

  std::vector<Tensor> inputs;
  for (auto& [name, t] : m.params())
    if (name.rfind("branch0.", 0) == 0 || name.rfind("trunk.", 0) == 0)
      inputs.push_back(t);

  auto loss = [&] {
    ModelOutput out = m.forward(images, motions, sim::Command::KeepStraight);
    return heteroscedastic_loss(out.trajectory, out.log_var, truth);
  };
  nn::GradCheckReport rep = nn::grad_check(loss, inputs);
  CAPTURE(rep.worst);
  CHECK(rep.max_rel_err < 1e-3);
}

TEST_CASE("checkpoint round trip preserves parameters, config and outputs") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "driveline_model_rt.ckpt";
  const NetConfig cfg = tiny();
  Rng rng(51);
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);

  Model m(cfg, Variant::M0, 8);
  ModelOutput before = m.forward(images, motions, sim::Command::TurnRight);
  m.save(path.string());
  Model r = Model::load(path.string());
  CHECK(r.variant() == Variant::M0);
  CHECK(r.config().to_json() == cfg.to_json());
  CHECK(r.param_count() == m.param_count());
  ModelOutput after = r.forward(images, motions, sim::Command::TurnRight);
  for (int64_t i = 0; i < before.trajectory.numel(); ++i)
    CHECK(before.trajectory.values()[i] == after.trajectory.values()[i]);
  for (int64_t i = 0; i < before.log_var.numel(); ++i)
    CHECK(before.log_var.values()[i] == after.log_var.values()[i]);

  // Saving the reloaded model reproduces the file byte for byte.
  const fs::path path2 = fs::temp_directory_path() / "driveline_model_rt2.ckpt";
  r.save(path2.string());
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
  CHECK(!b1.empty());
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("private per-branch encoders isolate the trunk too") {
  NetConfig cfg = tiny();
  cfg.shared_trunk = false;
  const NetConfig shared = tiny();
  Model priv(cfg, Variant::M1, 61);
  Model base(shared, Variant::M1, 61);
  CHECK(priv.param_count() > base.param_count());

  Rng rng(67);
  Tensor images = rand_images(cfg, rng);
  Tensor motions = rand_motions(cfg, rng);
  ModelOutput before = priv.forward(images, motions, sim::Command::KeepStraight);
  for (auto& [name, t] : priv.params())
    if (name.rfind("branch1.trunk.", 0) == 0)
      for (real& w : t.values()) w += real(0.5);
  ModelOutput after = priv.forward(images, motions, sim::Command::KeepStraight);
  for (int64_t i = 0; i < before.trajectory.numel(); ++i)
    CHECK(before.trajectory.values()[i] == after.trajectory.values()[i]);
  // ... while the selected branch's private trunk does matter.
  for (auto& [name, t] : priv.params())
    if (name.rfind("branch0.trunk.", 0) == 0)
      for (real& w : t.values()) w += real(0.5);
  ModelOutput moved = priv.forward(images, motions, sim::Command::KeepStraight);
  bool changed = false;
  for (int64_t i = 0; i < before.trajectory.numel(); ++i)
    changed = changed || before.trajectory.values()[i] != moved.trajectory.values()[i];
  CHECK(changed);
}
