#pragma once

#include "dl/nn/tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dl::nn {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Checkpoint file layout:
//   bytes 0..7   magic "DLCKPT01"
//   bytes 8..11  header length, unsigned 32-bit little-endian
//   header       JSON: format, precision, tensor directory (name/shape/offset/
//                count, offsets in elements), and a caller-supplied meta object
//   payload      all tensor values concatenated, little-endian IEEE 754
void save_checkpoint(const std::string& path, const NamedTensors& tensors,
                     const std::string& meta_json = "{}");

struct LoadedCheckpoint {
  NamedTensors tensors;
  std::string meta_json;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

// Looks a tensor up by name; throws DataError when absent.
Tensor find_tensor(const NamedTensors& tensors, const std::string& name);

}  // namespace dl::nn
