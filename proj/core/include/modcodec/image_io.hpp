#pragma once

#include <string>

#include "modcodec/tensor.hpp"

namespace modcodec {

// Binary PPM (P6, 8-bit RGB). Values map to [0,1] on read; writes clamp to
// [0,1] and round to the nearest 8-bit level, so a write/read round trip is
// exact on 8-bit data.
Tensor read_ppm(const std::string& path);                 // (1,3,H,W)
void write_ppm(const std::string& path, const Tensor& image);

}  // namespace modcodec
