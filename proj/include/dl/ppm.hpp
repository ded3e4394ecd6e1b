#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dl/common.hpp"

namespace dl {

// Binary PPM (P6), maxval 255, interleaved RGB rows top to bottom.
void write_ppm(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb);

struct PpmImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;
};

// Throws DataError with the offending path on malformed input.
PpmImage read_ppm(const std::string& path);

}  // namespace dl
