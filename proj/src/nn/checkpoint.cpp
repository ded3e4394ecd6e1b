#include "dl/nn/checkpoint.hpp"

#include "dl/jsonw.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace dl::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'D', 'L', 'C', 'K', 'P', 'T', '0', '1'};
}

void save_checkpoint(const std::string& path, const NamedTensors& tensors,
                     const std::string& meta_json) {
  JsonWriter w;
  w.begin_obj();
  w.kv("format", "DLCKPT01");
  w.kv("precision", kPrecision);
  w.key("tensors").begin_arr();
  long long offset = 0;
  for (const auto& [name, t] : tensors) {
    w.begin_obj();
    w.kv("name", name);
    w.key("shape").begin_arr();
    for (int d : t.shape()) w.value(d);
    w.end_arr();
    w.kv("offset", offset);
    w.kv("count", static_cast<long long>(t.numel()));
    w.end_obj();
    offset += static_cast<long long>(t.numel());
  }
  w.end_arr();
  w.key("meta").raw(meta_json);
  w.end_obj();

  const std::string& header = w.str();
  require(header.size() <= UINT32_MAX, "checkpoint header too large");
  const uint32_t hlen = static_cast<uint32_t>(header.size());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open checkpoint for writing: " + path);
  f.write(kMagic, sizeof(kMagic));
  const unsigned char lenb[4] = {
      static_cast<unsigned char>(hlen & 0xff), static_cast<unsigned char>((hlen >> 8) & 0xff),
      static_cast<unsigned char>((hlen >> 16) & 0xff),
      static_cast<unsigned char>((hlen >> 24) & 0xff)};
  f.write(reinterpret_cast<const char*>(lenb), 4);
  f.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, t] : tensors) {
    const auto& v = t.values();
    f.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(real)));
  }
  if (!f) throw DataError("short write while saving checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a checkpoint file (bad magic): " + path);
  unsigned char lenb[4];
  f.read(reinterpret_cast<char*>(lenb), 4);
  if (!f) throw DataError("truncated checkpoint header: " + path);
  const uint32_t hlen = uint32_t(lenb[0]) | (uint32_t(lenb[1]) << 8) | (uint32_t(lenb[2]) << 16) |
                        (uint32_t(lenb[3]) << 24);
  std::string header(hlen, '\0');
  f.read(header.data(), hlen);
  if (!f) throw DataError("truncated checkpoint header: " + path);

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad checkpoint header in " + path + ": " + e.what());
  }
  if (h.value("format", "") != "DLCKPT01")
    throw DataError("unsupported checkpoint format in " + path);
  if (h.value("precision", "") != kPrecision)
    throw DataError("checkpoint precision " + h.value("precision", std::string("?")) +
                    " does not match build precision " + kPrecision + ": " + path);

  LoadedCheckpoint out;
  out.meta_json = h.contains("meta") ? h["meta"].dump() : "{}";
  const std::streamoff payload_base = 12 + std::streamoff(hlen);
  for (const auto& entry : h.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    Shape shape;
    for (const auto& d : entry.at("shape")) shape.push_back(d.get<int>());
    const long long count = entry.at("count").get<long long>();
    const long long offset = entry.at("offset").get<long long>();
    require(shape_numel(shape) == count, "checkpoint tensor " + name + " shape/count mismatch");
    Tensor t = Tensor::zeros(shape);
    f.seekg(payload_base + std::streamoff(offset) * std::streamoff(sizeof(real)));
    f.read(reinterpret_cast<char*>(t.values().data()),
           static_cast<std::streamsize>(size_t(count) * sizeof(real)));
    if (!f) throw DataError("truncated checkpoint payload at tensor " + name + ": " + path);
    out.tensors.emplace_back(name, t);
  }
  return out;
}

Tensor find_tensor(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw DataError("checkpoint is missing tensor: " + name);
}

}  // namespace dl::nn
