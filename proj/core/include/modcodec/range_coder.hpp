#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "modcodec/entropy.hpp"

namespace modcodec {

// 64-bit carry-less range coder, 16-bit frequency totals, byte-at-a-time
// renormalization. Strictly sequential per stream; the decoder replays the
// encoder's arithmetic exactly.
class RangeEncoder {
 public:
  // cum_lo/freq from a table whose frequencies sum to `total`; total <= 2^16.
  void encode(uint32_t cum_lo, uint32_t freq, uint32_t total);
  std::vector<uint8_t> finish();

 private:
  void renorm();
  uint64_t low_ = 0;
  uint64_t range_ = ~uint64_t{0};
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const uint8_t> payload);

  // Returns a value in [0,total); caller locates the bin, then advances.
  uint32_t decode_target(uint32_t total);
  void advance(uint32_t cum_lo, uint32_t freq);

 private:
  void renorm();
  uint8_t next_byte();
  uint64_t low_ = 0;
  uint64_t range_ = ~uint64_t{0};
  uint64_t code_ = 0;
  std::span<const uint8_t> payload_;
  size_t pos_ = 0;
};

// Whole-latent coding against per-channel tables. Symbols outside the table
// range are sent as the escape bin followed by the raw 32-bit value.
std::vector<uint8_t> range_encode(const Symbols& symbols,
                                  const QuantizedCdf& cdf);
Symbols range_decode(std::span<const uint8_t> payload, const QuantizedCdf& cdf,
                     const Shape& shape);

}  // namespace modcodec
