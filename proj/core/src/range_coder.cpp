#include "modcodec/range_coder.hpp"

#include <algorithm>

#include "modcodec/common.hpp"

namespace modcodec {

namespace {
constexpr uint64_t kTop = uint64_t{1} << 56;
constexpr uint64_t kBottom = uint64_t{1} << 48;
}  // namespace

void RangeEncoder::renorm() {
  while ((low_ ^ (low_ + range_)) < kTop ||
         (range_ < kBottom && ((range_ = (0 - low_) & (kBottom - 1)), true))) {
    out_.push_back(static_cast<uint8_t>(low_ >> 56));
    low_ <<= 8;
    range_ <<= 8;
  }
}

void RangeEncoder::encode(uint32_t cum_lo, uint32_t freq, uint32_t total) {
  if (freq == 0 || total == 0 || total > (1u << 16) ||
      cum_lo + freq > total) {
    throw ConfigError("range encoder: invalid frequency interval");
  }
  range_ /= total;
  low_ += cum_lo * range_;
  range_ *= freq;
  renorm();
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 8; ++i) {
    out_.push_back(static_cast<uint8_t>(low_ >> 56));
    low_ <<= 8;
  }
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const uint8_t> payload)
    : payload_(payload) {
  for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ >= payload_.size()) {
    throw DataError("range decoder: truncated payload");
  }
  return payload_[pos_++];
}

void RangeDecoder::renorm() {
  while ((low_ ^ (low_ + range_)) < kTop ||
         (range_ < kBottom && ((range_ = (0 - low_) & (kBottom - 1)), true))) {
    code_ = (code_ << 8) | next_byte();
    low_ <<= 8;
    range_ <<= 8;
  }
}

uint32_t RangeDecoder::decode_target(uint32_t total) {
  if (total == 0 || total > (1u << 16)) {
    throw ConfigError("range decoder: invalid total");
  }
  range_ /= total;
  const uint64_t t = (code_ - low_) / range_;
  return static_cast<uint32_t>(std::min<uint64_t>(t, total - 1));
}

void RangeDecoder::advance(uint32_t cum_lo, uint32_t freq) {
  low_ += cum_lo * range_;
  range_ *= freq;
  renorm();
}

namespace {

void encode_raw_u32(RangeEncoder& enc, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) {
    const uint32_t byte = (v >> shift) & 0xFF;
    enc.encode(byte << 8, 256, 1u << 16);
  }
}

uint32_t decode_raw_u32(RangeDecoder& dec) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const uint32_t t = dec.decode_target(1u << 16);
    const uint32_t byte = t >> 8;
    dec.advance(byte << 8, 256);
    v = (v << 8) | byte;
  }
  return v;
}

size_t channel_of(const Shape& s, size_t flat_index) {
  const size_t plane = s.height * s.width;
  return (flat_index / plane) % s.channels;
}

}  // namespace

std::vector<uint8_t> range_encode(const Symbols& symbols,
                                  const QuantizedCdf& cdf) {
  if (cdf.cum.size() != symbols.shape.channels) {
    throw ConfigError("range_encode: table channels do not match symbols");
  }
  RangeEncoder enc;
  const size_t esc = cdf.escape_bin();
  for (size_t i = 0; i < symbols.values.size(); ++i) {
    const size_t c = channel_of(symbols.shape, i);
    const auto& cum = cdf.cum[c];
    const int32_t v = symbols.values[i];
    if (v >= cdf.min_sym && v <= cdf.max_sym) {
      const size_t bin = static_cast<size_t>(v - cdf.min_sym);
      enc.encode(cum[bin], cum[bin + 1] - cum[bin], QuantizedCdf::kTotal);
    } else {
      enc.encode(cum[esc], cum[esc + 1] - cum[esc], QuantizedCdf::kTotal);
      encode_raw_u32(enc, static_cast<uint32_t>(v));
    }
  }
  return enc.finish();
}

Symbols range_decode(std::span<const uint8_t> payload, const QuantizedCdf& cdf,
                     const Shape& shape) {
  if (cdf.cum.size() != shape.channels) {
    throw ConfigError("range_decode: table channels do not match shape");
  }
  Symbols out;
  out.shape = shape;
  out.values.resize(shape.numel());
  RangeDecoder dec(payload);
  const size_t esc = cdf.escape_bin();
  for (size_t i = 0; i < out.values.size(); ++i) {
    const size_t c = channel_of(shape, i);
    const auto& cum = cdf.cum[c];
    const uint32_t target = dec.decode_target(QuantizedCdf::kTotal);
    // cum is strictly increasing; locate bin with cum[bin] <= target < cum[bin+1]
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const size_t bin = static_cast<size_t>(it - cum.begin()) - 1;
    dec.advance(cum[bin], cum[bin + 1] - cum[bin]);
    if (bin == esc) {
      out.values[i] = static_cast<int32_t>(decode_raw_u32(dec));
    } else {
      out.values[i] = cdf.min_sym + static_cast<int32_t>(bin);
    }
  }
  return out;
}

}  // namespace modcodec
