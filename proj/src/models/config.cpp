#include "dl/models/config.hpp"

#include <nlohmann/json.hpp>

#include "dl/jsonw.hpp"

namespace dl::models {

void NetConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("net config: ") + what);
  };
  check(obs_h > 0 && obs_w > 0, "observation size must be positive");
  check(stem_ch > 0, "stem channels must be positive");
  check(!blocks.empty(), "at least one bottleneck block");
  for (const BlockSpec& b : blocks) {
    check(b.t >= 1, "expansion ratio must be >= 1");
    check(b.c > 0, "block channels must be positive");
    check(b.s == 1 || b.s == 2, "block stride must be 1 or 2");
  }
  check(f_img > 0 && f_mot > 0 && att_hidden > 0 && hidden > 0 && fc_width > 0,
        "feature widths must be positive");
  check(lstm_layers >= 1, "lstm layers must be >= 1");
  check(history >= 1 && horizon >= 1, "history and horizon must be >= 1");
  // Every stride-2 block must still have spatial extent to halve; a 1x1 input
  // would make the stride a no-op and the config degenerate.
  int h = (obs_h + 1) / 2, w = (obs_w + 1) / 2;  // after the stride-2 stem
  for (const BlockSpec& b : blocks) {
    if (b.s == 2) {
      check(h > 1 && w > 1, "too many stride-2 blocks for the observation size");
      h = (h + 1) / 2;
      w = (w + 1) / 2;
    }
  }
}

std::string NetConfig::to_json() const {
  JsonWriter j;
  j.begin_obj();
  j.key("obs_h").value(obs_h);
  j.key("obs_w").value(obs_w);
  j.key("stem_ch").value(stem_ch);
  j.key("blocks").begin_arr();
  for (const BlockSpec& b : blocks) {
    j.begin_arr();
    j.value(b.t).value(b.c).value(b.s);
    j.end_arr();
  }
  j.end_arr();
  j.key("f_img").value(f_img);
  j.key("f_mot").value(f_mot);
  j.key("att_hidden").value(att_hidden);
  j.key("hidden").value(hidden);
  j.key("lstm_layers").value(lstm_layers);
  j.key("history").value(history);
  j.key("horizon").value(horizon);
  j.key("fc_width").value(fc_width);
  j.key("shared_trunk").value(shared_trunk);
  j.end_obj();
  return j.str();
}

NetConfig NetConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("net config: bad json: ") + e.what());
  }
  NetConfig c;
  try {
    c.obs_h = j.at("obs_h").get<int>();
    c.obs_w = j.at("obs_w").get<int>();
    c.stem_ch = j.at("stem_ch").get<int>();
    c.blocks.clear();
    for (const auto& b : j.at("blocks"))
      c.blocks.push_back({b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>()});
    c.f_img = j.at("f_img").get<int>();
    c.f_mot = j.at("f_mot").get<int>();
    c.att_hidden = j.at("att_hidden").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.lstm_layers = j.at("lstm_layers").get<int>();
    c.history = j.at("history").get<int>();
    c.horizon = j.at("horizon").get<int>();
    c.fc_width = j.at("fc_width").get<int>();
    c.shared_trunk = j.at("shared_trunk").get<bool>();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("net config: missing field: ") + e.what());
  }
  c.validate();
  return c;
}

NetConfig NetConfig::toy() {
  NetConfig c;
  c.blocks = {{3, 12, 2}, {3, 16, 1}, {3, 24, 2}, {3, 32, 1}};
  return c;
}

NetConfig NetConfig::full() {
  NetConfig c;
  c.stem_ch = 32;
  // 17 inverted-residual blocks, the standard depthwise-separable layout.
  c.blocks = {{1, 16, 1},                            //
              {6, 24, 2},  {6, 24, 1},               //
              {6, 32, 2},  {6, 32, 1},  {6, 32, 1},  //
              {6, 64, 2},  {6, 64, 1},  {6, 64, 1},  {6, 64, 1},  //
              {6, 96, 1},  {6, 96, 1},  {6, 96, 1},  //
              {6, 160, 2}, {6, 160, 1}, {6, 160, 1}, //
              {6, 320, 1}};
  c.f_img = 512;
  c.f_mot = 128;
  c.hidden = 256;
  return c;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::M0: return "m0";
    case Variant::M1: return "m1";
    case Variant::M2: return "m2";
    case Variant::M3: return "m3";
    case Variant::CnnFc: return "cnn-fc";
    case Variant::CnnLstm: return "cnn-lstm";
    case Variant::CnnStateFc: return "cnnstate-fc";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::M0, Variant::M1, Variant::M2, Variant::M3, Variant::CnnFc,
                    Variant::CnnLstm, Variant::CnnStateFc})
    if (s == variant_name(v)) return v;
  throw ConfigError("unknown model variant: " + s);
}

}  // namespace dl::models
