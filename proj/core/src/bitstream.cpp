#include "modcodec/bitstream.hpp"

#include <cstring>
#include <fstream>

#include "modcodec/range_coder.hpp"

namespace modcodec {

namespace {

constexpr char kMagic[5] = "TSMB";
constexpr uint8_t kVersion = 1;

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

size_t Bitstream::payload_bytes() const {
  size_t n = 0;
  for (const auto& p : payloads) n += p.size();
  return n;
}

void write_bitstream(const std::string& path, const Bitstream& bs) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  put_u64(out, bs.header.model_checksum);
  put_u32(out, static_cast<uint32_t>(bs.header.kind.size()));
  out.insert(out.end(), bs.header.kind.begin(), bs.header.kind.end());
  put_u32(out, bs.header.stages);
  put_u32(out, bs.header.hidden_channels);
  put_u32(out, bs.header.latent_channels);
  put_u32(out, bs.header.orig_width);
  put_u32(out, bs.header.orig_height);
  put_u32(out, bs.header.padded_width);
  put_u32(out, bs.header.padded_height);
  put_u32(out, static_cast<uint32_t>(bs.payloads.size()));
  for (const auto& p : bs.payloads) {
    put_u32(out, static_cast<uint32_t>(p.size()));
  }
  for (const auto& p : bs.payloads) out.insert(out.end(), p.begin(), p.end());

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write bitstream: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing bitstream: " + path);
}

Bitstream read_bitstream(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open bitstream: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > buf.size()) throw DataError(path + ": truncated bitstream");
  };
  auto u32 = [&]() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos++]) << (8 * i);
    return v;
  };
  auto u64 = [&]() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos++]) << (8 * i);
    return v;
  };

  need(5);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw DataError(path + ": not a bitstream file");
  }
  pos = 4;
  if (buf[pos++] != kVersion) throw DataError(path + ": unsupported version");

  Bitstream bs;
  bs.header.model_checksum = u64();
  const uint32_t klen = u32();
  need(klen);
  bs.header.kind.assign(buf.begin() + static_cast<long>(pos),
                        buf.begin() + static_cast<long>(pos + klen));
  pos += klen;
  bs.header.stages = u32();
  bs.header.hidden_channels = u32();
  bs.header.latent_channels = u32();
  bs.header.orig_width = u32();
  bs.header.orig_height = u32();
  bs.header.padded_width = u32();
  bs.header.padded_height = u32();
  const uint32_t count = u32();
  std::vector<uint32_t> lengths(count);
  for (uint32_t i = 0; i < count; ++i) lengths[i] = u32();
  for (uint32_t i = 0; i < count; ++i) {
    need(lengths[i]);
    bs.payloads.emplace_back(buf.begin() + static_cast<long>(pos),
                             buf.begin() + static_cast<long>(pos + lengths[i]));
    pos += lengths[i];
  }
  if (pos != buf.size()) throw DataError(path + ": trailing bytes");
  return bs;
}

EncodeResult encode_image(const CodecModel& model, uint64_t model_checksum,
                          const Tensor& image) {
  const Shape& s = image.shape();
  if (s.batch != 1 || s.channels != model.config.input_channels) {
    throw ConfigError("encode: expected a single image with " +
                      std::to_string(model.config.input_channels) +
                      " channels");
  }
  PadResult padded = pad_to_factor(image, model.config.downsample_factor());

  Graph g = Graph::inference();
  Tensor latent = analysis_apply(g, model, padded.padded);
  Symbols symbols = quantize_round(latent);

  Tensor rate = rate_bits(g, symbols_to_tensor(symbols), model.prior);

  const QuantizedCdf cdf = build_cdf_table(model.prior);
  EncodeResult result;
  result.bitstream.header.model_checksum = model_checksum;
  result.bitstream.header.kind = to_string(model.config.nonlinearity);
  result.bitstream.header.stages = model.config.stages;
  result.bitstream.header.hidden_channels = model.config.hidden_channels;
  result.bitstream.header.latent_channels = model.config.latent_channels;
  result.bitstream.header.orig_width = static_cast<uint32_t>(s.width);
  result.bitstream.header.orig_height = static_cast<uint32_t>(s.height);
  result.bitstream.header.padded_width =
      static_cast<uint32_t>(padded.padded.shape().width);
  result.bitstream.header.padded_height =
      static_cast<uint32_t>(padded.padded.shape().height);
  result.bitstream.payloads.push_back(range_encode(symbols, cdf));
  result.latent = symbols;
  result.estimated_bits = rate.item();
  result.bpp = static_cast<double>(result.bitstream.payload_bytes()) * 8.0 /
               (static_cast<double>(s.width) * static_cast<double>(s.height));
  return result;
}

Tensor reconstruct_from_latent(const CodecModel& model, const Symbols& latent,
                               size_t orig_height, size_t orig_width) {
  Graph g = Graph::inference();
  Tensor recon = synthesis_apply(g, model, symbols_to_tensor(latent));
  return crop_spatial(recon, orig_height, orig_width);
}

Tensor decode_image(const CodecModel& model, const Bitstream& bs) {
  const BitstreamHeader& h = bs.header;
  if (h.kind != to_string(model.config.nonlinearity) ||
      h.stages != model.config.stages ||
      h.hidden_channels != model.config.hidden_channels ||
      h.latent_channels != model.config.latent_channels) {
    throw DataError("bitstream was produced by a different network layout");
  }
  const size_t f = model.config.downsample_factor();
  if (h.padded_width % f != 0 || h.padded_height % f != 0) {
    throw DataError("bitstream padded extents are not factor-aligned");
  }
  const Shape latent_shape{1, model.config.latent_channels,
                           h.padded_height / f, h.padded_width / f};
  if (bs.payloads.size() != 1) {
    throw DataError("expected a single payload stream");
  }
  const QuantizedCdf cdf = build_cdf_table(model.prior);
  Symbols symbols = range_decode(bs.payloads[0], cdf, latent_shape);
  return reconstruct_from_latent(model, symbols, h.orig_height, h.orig_width);
}

}  // namespace modcodec
