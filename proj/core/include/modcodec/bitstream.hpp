#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modcodec/codec.hpp"

namespace modcodec {

// Bitstream container, little-endian:
//   magic "TSMB", version byte 1
//   model checksum u64 (FNV-1a of the checkpoint file)
//   nonlinearity kind (u32 length + bytes), stages, hidden, latent as u32
//   original width/height u32, padded width/height u32
//   payload count u32, payload lengths u32 each, payload bytes
struct BitstreamHeader {
  uint64_t model_checksum = 0;
  std::string kind;
  uint32_t stages = 0;
  uint32_t hidden_channels = 0;
  uint32_t latent_channels = 0;
  uint32_t orig_width = 0;
  uint32_t orig_height = 0;
  uint32_t padded_width = 0;
  uint32_t padded_height = 0;
};

struct Bitstream {
  BitstreamHeader header;
  std::vector<std::vector<uint8_t>> payloads;

  size_t payload_bytes() const;
};

void write_bitstream(const std::string& path, const Bitstream& bs);
Bitstream read_bitstream(const std::string& path);

struct EncodeResult {
  Bitstream bitstream;
  Symbols latent;          // the coded integer latent
  double bpp = 0.0;        // payload bits / original pixels
  double estimated_bits = 0.0;  // rate model estimate on the rounded latent
};

// image (1,3,H,W) in [0,1] -> coded latent. Pads internally.
EncodeResult encode_image(const CodecModel& model, uint64_t model_checksum,
                          const Tensor& image);

// Inverse: exact latent recovery, synthesis, crop to original extents.
Tensor decode_image(const CodecModel& model, const Bitstream& bs);

// The decoder-side reconstruction for a given integer latent (synthesis of
// the rounded latent, cropped). encode+decode reproduces this bit for bit.
Tensor reconstruct_from_latent(const CodecModel& model, const Symbols& latent,
                               size_t orig_height, size_t orig_width);

}  // namespace modcodec
