#include "dl/ppm.hpp"

#include <cstdio>
#include <memory>

namespace dl {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Reads one whitespace/comment-separated PPM header token.
int next_header_int(std::FILE* f, const std::string& path) {
  int c;
  for (;;) {
    c = std::fgetc(f);
    if (c == '#') {
      while (c != '\n' && c != EOF) c = std::fgetc(f);
    } else if (!std::isspace(c)) {
      break;
    }
  }
  int v = 0;
  bool any = false;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    any = true;
    c = std::fgetc(f);
  }
  if (!any) throw DataError("malformed PPM header in " + path);
  return v;
}

}  // namespace

void write_ppm(const std::string& path, int width, int height, const std::vector<uint8_t>& rgb) {
  require(width > 0 && height > 0, "write_ppm: bad dimensions");
  require(rgb.size() == static_cast<size_t>(width) * height * 3, "write_ppm: buffer size mismatch");
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw DataError("cannot open for write: " + path);
  std::fprintf(f.get(), "P6\n%d %d\n255\n", width, height);
  if (std::fwrite(rgb.data(), 1, rgb.size(), f.get()) != rgb.size())
    throw DataError("short write: " + path);
}

PpmImage read_ppm(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw DataError("cannot open: " + path);
  char magic[3] = {0, 0, 0};
  if (std::fread(magic, 1, 2, f.get()) != 2 || magic[0] != 'P' || magic[1] != '6')
    throw DataError("not a P6 PPM: " + path);
  PpmImage img;
  img.width = next_header_int(f.get(), path);
  img.height = next_header_int(f.get(), path);
  int maxval = next_header_int(f.get(), path);
  if (maxval != 255) throw DataError("unsupported PPM maxval in " + path);
  const size_t n = static_cast<size_t>(img.width) * img.height * 3;
  img.rgb.resize(n);
  if (std::fread(img.rgb.data(), 1, n, f.get()) != n)
    throw DataError("truncated PPM payload in " + path);
  return img;
}

}  // namespace dl
