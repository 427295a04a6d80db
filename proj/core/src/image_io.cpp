#include "modcodec/image_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace modcodec {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  if (next_token(in) != "P6") {
    throw DataError(path + ": not a binary PPM (P6) file");
  }
  const std::string ws = next_token(in), hs = next_token(in),
                    ms = next_token(in);
  size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(ws);
    h = std::stoul(hs);
    maxval = std::stoul(ms);
  } catch (const std::exception&) {
    throw DataError(path + ": malformed PPM header");
  }
  if (w == 0 || h == 0) throw DataError(path + ": empty image");
  if (maxval != 255) {
    throw DataError(path + ": only 8-bit PPM supported (maxval 255)");
  }
  std::vector<uint8_t> raw(w * h * 3);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size()) {
    throw DataError(path + ": truncated pixel data");
  }
  Tensor img = Tensor::zeros(Shape{1, 3, h, w});
  for (size_t y = 0; y < h; ++y) {
    for (size_t x = 0; x < w; ++x) {
      for (size_t c = 0; c < 3; ++c) {
        img.at(0, c, y, x) = raw[(y * w + x) * 3 + c] / 255.0;
      }
    }
  }
  return img;
}

void write_ppm(const std::string& path, const Tensor& image) {
  const Shape& s = image.shape();
  if (s.batch != 1 || s.channels != 3) {
    throw DataError("write_ppm expects a (1,3,H,W) tensor, got " + s.str());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image: " + path);
  out << "P6\n" << s.width << " " << s.height << "\n255\n";
  std::vector<uint8_t> raw(s.width * s.height * 3);
  for (size_t y = 0; y < s.height; ++y) {
    for (size_t x = 0; x < s.width; ++x) {
      for (size_t c = 0; c < 3; ++c) {
        double v = image.at(0, c, y, x);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        raw[(y * s.width + x) * 3 + c] =
            static_cast<uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw DataError("failed writing image: " + path);
}

}  // namespace modcodec
