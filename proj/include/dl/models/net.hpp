#pragma once

#include <string>

#include "dl/models/config.hpp"
#include "dl/nn/checkpoint.hpp"
#include "dl/nn/tensor.hpp"
#include "dl/rng.hpp"
#include "dl/sim/types.hpp"

namespace dl::models {

struct ModelOutput {
  nn::Tensor trajectory;  // {horizon, 3}: (v, x, y) per future sample
  nn::Tensor log_var;     // {horizon, 3} log variance; defined only for m0
  nn::Tensor attention;   // {history} weights; defined only for m0/m1
};

// Trajectory-prediction network: a shared depthwise-separable CNN trunk and
// motion encoder feed one of three command-selected branches (attention +
// LSTM + linear heads, or the variant's substitute).
class Model {
 public:
  Model(const NetConfig& cfg, Variant variant, uint64_t seed);

  static Model load(const std::string& path);
  void save(const std::string& path) const;

  // images: {history, 3, obs_h, obs_w} with values in [0,1].
  // motions: {history, 3} rows (speed, x, y) in the current body frame.
  ModelOutput forward(const nn::Tensor& images, const nn::Tensor& motions,
                      sim::Command cmd) const;

  nn::NamedTensors& params() { return params_; }
  const nn::NamedTensors& params() const { return params_; }
  nn::Tensor param(const std::string& name) const;
  int64_t param_count() const;

  const NetConfig& config() const { return cfg_; }
  Variant variant() const { return variant_; }

 private:
  Model() = default;
  void build(Rng& rng);

  NetConfig cfg_;
  Variant variant_ = Variant::M0;
  nn::NamedTensors params_;
};

// Gaussian negative log-likelihood with predicted log variance, averaged over
// all elements: mean( r^2 / (2 exp(lv)) + lv / 2 ). log_var is clamped to
// [-10, 10] before exponentiation. Throws VerifyError when non-finite.
nn::Tensor heteroscedastic_loss(const nn::Tensor& pred, const nn::Tensor& log_var,
                                const nn::Tensor& truth);

// mean( r^2 / 2 ); the loss for variants without an uncertainty head.
nn::Tensor mse_loss(const nn::Tensor& pred, const nn::Tensor& truth);

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

}  // namespace dl::models
