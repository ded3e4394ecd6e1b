#pragma once

#include <string>
#include <vector>

#include "dl/common.hpp"

namespace dl::models {

// One inverted-residual block: 1x1 expansion (ratio t) -> 3x3 depthwise
// convolution with the given stride -> 1x1 projection to c channels, relu6
// in between. A residual connection applies when stride is 1 and the channel
// count is unchanged.
struct BlockSpec {
  int t = 1;
  int c = 8;
  int s = 1;
};

struct NetConfig {
  int obs_h = 96, obs_w = 96;  // input image size, 3 channels
  int stem_ch = 6;             // stem 3x3 stride-2 output channels
  std::vector<BlockSpec> blocks;
  int f_img = 128;     // image feature width
  int f_mot = 32;      // motion feature width
  int att_hidden = 64;  // attention MLP hidden width
  int hidden = 96;     // LSTM hidden width
  int lstm_layers = 3;
  int history = 12;  // input frames / motion samples
  int horizon = 22;  // predicted trajectory samples
  int fc_width = 512;  // hidden width of the FC-stack baselines
  // The image trunk and motion encoder are shared across the three command
  // branches by default; false gives every branch its own private copies.
  bool shared_trunk = true;

  int combined() const { return f_img + f_mot; }
  int out_dim() const { return horizon * 3; }

  void validate() const;  // throws ConfigError
  std::string to_json() const;
  static NetConfig from_json(const std::string& text);

  // Small network that trains in minutes on a CPU.
  static NetConfig toy();
  // Full-scale reference: 17 bottleneck blocks, 512/128 features, hidden 256.
  static NetConfig full();
};

// Network variants: the full model, its ablations, and the baselines.
//   M0 full: attention over history + uncertainty head
//   M1: drops the uncertainty head
//   M2: additionally drops attention
//   M3: processes image and motion sequences with two separate LSTMs
//   CnnFc / CnnLstm: image-only baselines (FC stack / LSTM)
//   CnnStateFc: image+motion fused by an FC stack
enum class Variant { M0, M1, M2, M3, CnnFc, CnnLstm, CnnStateFc };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);  // throws ConfigError

inline bool has_uncertainty(Variant v) { return v == Variant::M0; }
inline bool has_attention(Variant v) { return v == Variant::M0 || v == Variant::M1; }
inline bool uses_motion(Variant v) {
  return v == Variant::M0 || v == Variant::M1 || v == Variant::M2 || v == Variant::M3 ||
         v == Variant::CnnStateFc;
}

}  // namespace dl::models
