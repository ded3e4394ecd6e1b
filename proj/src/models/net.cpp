#include "dl/models/net.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "dl/jsonw.hpp"
#include "dl/nn/init.hpp"
#include "dl/nn/lstm.hpp"
#include "dl/nn/ops.hpp"

namespace dl::models {

using nn::Tensor;

Model::Model(const NetConfig& cfg, Variant variant, uint64_t seed)
    : cfg_(cfg), variant_(variant) {
  cfg_.validate();
  Rng rng(seed);
  build(rng);
}

void Model::build(Rng& rng) {
  auto add = [&](const std::string& name, Tensor t) { params_.emplace_back(name, t); };
  auto linear = [&](const std::string& name, int out, int in) {
    add(name + ".w", nn::uniform_init({out, in}, nn::fanin_bound(in), rng));
    add(name + ".b", nn::zeros_init({out}));
  };
  auto conv = [&](const std::string& name, int cout, int cin_per_group, int k) {
    add(name + ".w", nn::uniform_init({cout, cin_per_group, k, k},
                                      nn::fanin_bound(cin_per_group * k * k), rng));
    add(name + ".b", nn::zeros_init({cout}));
  };

  // Image trunk: stem + inverted-residual blocks + projection to f_img,
  // plus the motion encoder for variants that consume motion.
  auto encoders = [&](const std::string& t) {
    conv(t + "stem", cfg_.stem_ch, 3, 3);
    int ch = cfg_.stem_ch;
    for (size_t i = 0; i < cfg_.blocks.size(); ++i) {
      const BlockSpec& b = cfg_.blocks[i];
      const std::string base = t + "block" + std::to_string(i);
      if (b.t > 1) conv(base + ".expand", ch * b.t, ch, 1);
      conv(base + ".dw", ch * b.t, 1, 3);  // depthwise: one filter per channel
      conv(base + ".project", b.c, ch * b.t, 1);
      ch = b.c;
    }
    linear(t + "proj", cfg_.f_img, ch);
    if (uses_motion(variant_)) {
      linear(t + "motion1", cfg_.f_mot, 3);
      linear(t + "motion2", cfg_.f_mot, cfg_.f_mot);
    }
  };
  if (cfg_.shared_trunk) encoders("trunk.");

  auto lstm_stack = [&](const std::string& base, int input) {
    for (int l = 0; l < cfg_.lstm_layers; ++l) {
      const std::string lname = base + std::to_string(l);
      const int in = l == 0 ? input : cfg_.hidden;
      add(lname + ".w_ih",
          nn::uniform_init({4 * cfg_.hidden, in}, nn::fanin_bound(in), rng));
      add(lname + ".w_hh", nn::uniform_init({4 * cfg_.hidden, cfg_.hidden},
                                            nn::fanin_bound(cfg_.hidden), rng));
      Tensor bias = nn::zeros_init({4 * cfg_.hidden});
      // Forget gate (second quarter) starts open.
      for (int i = cfg_.hidden; i < 2 * cfg_.hidden; ++i) bias.values()[i] = 1;
      add(lname + ".bias", bias);
    }
  };
  // Output heads. The final feature is compressed by two stacked FC layers;
  // the first is shared, then parallel projections produce the trajectory and
  // (for the full model) the log variance. Reading the head as
  // shared-hidden-then-split is a deliberate choice over two fully separate
  // two-layer stacks.
  auto heads = [&](const std::string& p, int in) {
    linear(p + "head.fc", cfg_.hidden, in);
    linear(p + "head.traj", cfg_.out_dim(), cfg_.hidden);
    if (has_uncertainty(variant_)) linear(p + "head.lv", cfg_.out_dim(), cfg_.hidden);
  };

  // One branch per command; each holds everything past the shared encoders.
  for (int c = 0; c < 3; ++c) {
    const std::string p = "branch" + std::to_string(c) + ".";
    if (!cfg_.shared_trunk) encoders(p + "trunk.");
    switch (variant_) {
      case Variant::M0:
      case Variant::M1: {
        linear(p + "att1", cfg_.att_hidden, cfg_.history * cfg_.combined());
        // Zero weights make the initial attention exactly uniform.
        add(p + "att2.w", nn::zeros_init({cfg_.history, cfg_.att_hidden}));
        add(p + "att2.b", nn::zeros_init({cfg_.history}));
        lstm_stack(p + "lstm", cfg_.combined());
        heads(p, cfg_.hidden);
        break;
      }
      case Variant::M2: {
        lstm_stack(p + "lstm", cfg_.combined());
        heads(p, cfg_.hidden);
        break;
      }
      case Variant::M3: {
        lstm_stack(p + "lstm_img", cfg_.f_img);
        lstm_stack(p + "lstm_mot", cfg_.f_mot);
        heads(p, 2 * cfg_.hidden);
        break;
      }
      case Variant::CnnLstm: {
        lstm_stack(p + "lstm", cfg_.f_img);
        heads(p, cfg_.hidden);
        break;
      }
      case Variant::CnnFc:
      case Variant::CnnStateFc: {
        const int in = variant_ == Variant::CnnFc ? cfg_.f_img : cfg_.combined();
        linear(p + "fc1", cfg_.fc_width, in);
        linear(p + "fc2", cfg_.fc_width, cfg_.fc_width);
        linear(p + "head.traj", cfg_.out_dim(), cfg_.fc_width);
        break;
      }
    }
  }
}

Tensor Model::param(const std::string& name) const {
  return nn::find_tensor(params_, name);
}

int64_t Model::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.numel();
  return n;
}

ModelOutput Model::forward(const Tensor& images, const Tensor& motions,
                           sim::Command cmd) const {
  const int ci = static_cast<int>(cmd);
  require(ci >= 0 && ci < 3, "model forward: unknown command " + std::to_string(ci));
  require(images.defined() && images.ndim() == 4 && images.dim(0) == cfg_.history &&
              images.dim(1) == 3 && images.dim(2) == cfg_.obs_h && images.dim(3) == cfg_.obs_w,
          "model forward: images must be {history,3,obs_h,obs_w}");
  if (uses_motion(variant_))
    require(motions.defined() && motions.ndim() == 2 && motions.dim(0) == cfg_.history &&
                motions.dim(1) == 3,
            "model forward: motions must be {history,3}");
  const std::string p = "branch" + std::to_string(ci) + ".";
  const std::string t = cfg_.shared_trunk ? "trunk." : p + "trunk.";
  auto P = [&](const std::string& name) { return param(name); };

  // Image trunk over the whole history as one batch.
  Tensor x = nn::add_const(images, nn::real(-0.5));  // fixed input normalization
  x = nn::relu6(nn::conv2d(x, P(t + "stem.w"), P(t + "stem.b"), 2, 1));
  int ch = cfg_.stem_ch;
  for (size_t i = 0; i < cfg_.blocks.size(); ++i) {
    const BlockSpec& b = cfg_.blocks[i];
    const std::string base = t + "block" + std::to_string(i);
    Tensor h = x;
    if (b.t > 1)
      h = nn::relu6(nn::conv2d(h, P(base + ".expand.w"), P(base + ".expand.b"), 1, 0));
    h = nn::relu6(nn::conv2d(h, P(base + ".dw.w"), P(base + ".dw.b"), b.s, 1, ch * b.t));
    h = nn::conv2d(h, P(base + ".project.w"), P(base + ".project.b"), 1, 0);
    if (b.s == 1 && b.c == ch) h = nn::add(h, x);
    x = h;
    ch = b.c;
  }
  Tensor f_img = nn::affine(nn::spatial_mean(x), P(t + "proj.w"), P(t + "proj.b"));

  Tensor f_mot;
  if (uses_motion(variant_)) {
    f_mot = nn::relu(nn::affine(motions, P(t + "motion1.w"), P(t + "motion1.b")));
    f_mot = nn::affine(f_mot, P(t + "motion2.w"), P(t + "motion2.b"));
  }

  auto rows = [&](const Tensor& m) {
    std::vector<Tensor> out;
    for (int k = 0; k < cfg_.history; ++k)
      out.push_back(nn::reshape(nn::slice(m, 0, k, 1), {m.dim(1)}));
    return out;
  };
  auto lstm_layers = [&](const std::string& base) {
    std::vector<nn::LstmLayer> layers;
    for (int l = 0; l < cfg_.lstm_layers; ++l) {
      const std::string lname = base + std::to_string(l);
      layers.push_back({P(lname + ".w_ih"), P(lname + ".w_hh"), P(lname + ".bias")});
    }
    return layers;
  };
  auto last_row = [&](const Tensor& m) {
    return nn::reshape(nn::slice(m, 0, cfg_.history - 1, 1), {m.dim(1)});
  };

  ModelOutput out;
  Tensor feat;  // input to the output head(s)
  switch (variant_) {
    case Variant::M0:
    case Variant::M1: {
      Tensor combined = nn::concat({f_img, f_mot}, 1);  // {history, combined}
      Tensor flat = nn::reshape(combined, {cfg_.history * cfg_.combined()});
      Tensor a = nn::relu(nn::affine(flat, P(p + "att1.w"), P(p + "att1.b")));
      a = nn::softmax(nn::affine(a, P(p + "att2.w"), P(p + "att2.b")));
      out.attention = a;
      Tensor modulated = nn::row_scale(combined, a);
      feat = nn::lstm_forward(rows(modulated), lstm_layers(p + "lstm"));
      break;
    }
    case Variant::M2: {
      Tensor combined = nn::concat({f_img, f_mot}, 1);
      feat = nn::lstm_forward(rows(combined), lstm_layers(p + "lstm"));
      break;
    }
    case Variant::M3: {
      Tensor hi = nn::lstm_forward(rows(f_img), lstm_layers(p + "lstm_img"));
      Tensor hm = nn::lstm_forward(rows(f_mot), lstm_layers(p + "lstm_mot"));
      feat = nn::concat({hi, hm}, 0);
      break;
    }
    case Variant::CnnLstm: {
      feat = nn::lstm_forward(rows(f_img), lstm_layers(p + "lstm"));
      break;
    }
    case Variant::CnnFc:
    case Variant::CnnStateFc: {
      Tensor f = variant_ == Variant::CnnFc
                     ? last_row(f_img)
                     : nn::concat({last_row(f_img), last_row(f_mot)}, 0);
      f = nn::relu(nn::affine(f, P(p + "fc1.w"), P(p + "fc1.b")));
      feat = nn::relu(nn::affine(f, P(p + "fc2.w"), P(p + "fc2.b")));
      break;
    }
  }

  if (variant_ != Variant::CnnFc && variant_ != Variant::CnnStateFc)
    feat = nn::relu(nn::affine(feat, P(p + "head.fc.w"), P(p + "head.fc.b")));
  out.trajectory = nn::reshape(
      nn::affine(feat, P(p + "head.traj.w"), P(p + "head.traj.b")), {cfg_.horizon, 3});
  if (has_uncertainty(variant_))
    out.log_var =
        nn::clamp(nn::reshape(nn::affine(feat, P(p + "head.lv.w"), P(p + "head.lv.b")),
                              {cfg_.horizon, 3}),
                  nn::real(kLogVarMin), nn::real(kLogVarMax));
  return out;
}

void Model::save(const std::string& path) const {
  JsonWriter meta;
  meta.begin_obj();
  meta.key("variant").value(variant_name(variant_));
  meta.key("config").raw(cfg_.to_json());
  meta.end_obj();
  nn::save_checkpoint(path, params_, meta.str());
}

Model Model::load(const std::string& path) {
  nn::LoadedCheckpoint ck = nn::load_checkpoint(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ck.meta_json);
  } catch (const std::exception& e) {
    throw DataError(std::string("model load: bad meta json: ") + e.what());
  }
  if (!meta.contains("variant") || !meta.contains("config"))
    throw DataError("model load: meta lacks variant/config");
  Model m;
  m.variant_ = parse_variant(meta["variant"].get<std::string>());
  m.cfg_ = NetConfig::from_json(meta["config"].dump());
  Rng rng(0);
  m.build(rng);
  for (auto& [name, t] : m.params_) {
    Tensor loaded = nn::find_tensor(ck.tensors, name);
    if (loaded.shape() != t.shape())
      throw DataError("model load: tensor " + name + " has shape " +
                      nn::shape_str(loaded.shape()) + ", expected " +
                      nn::shape_str(t.shape()));
    t.values() = loaded.values();
  }
  return m;
}

Tensor heteroscedastic_loss(const Tensor& pred, const Tensor& log_var, const Tensor& truth) {
  require(pred.shape() == truth.shape() && pred.shape() == log_var.shape(),
          "loss: prediction, log-variance and truth shapes must match");
  Tensor r = nn::sub(pred, truth);
  Tensor lv = nn::clamp(log_var, nn::real(kLogVarMin), nn::real(kLogVarMax));
  Tensor fit = nn::mul(nn::mul(r, r), nn::exp(nn::scale(lv, nn::real(-1))));
  Tensor loss = nn::mean_all(nn::scale(nn::add(fit, lv), nn::real(0.5)));
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw VerifyError("loss is not finite");
  return loss;
}

Tensor mse_loss(const Tensor& pred, const Tensor& truth) {
  require(pred.shape() == truth.shape(), "loss: prediction and truth shapes must match");
  Tensor r = nn::sub(pred, truth);
  Tensor loss = nn::mean_all(nn::scale(nn::mul(r, r), nn::real(0.5)));
  if (!std::isfinite(static_cast<double>(loss.item())))
    throw VerifyError("loss is not finite");
  return loss;
}

}  // namespace dl::models
