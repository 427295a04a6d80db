#include "modcodec/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace modcodec {

namespace {

constexpr char kMagic[9] = "TSMCKPT1";

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_string(std::vector<uint8_t>& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw DataError("checkpoint: truncated file");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[pos++]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[pos++]) << (8 * i);
    return v;
  }
  uint8_t u8() {
    need(1);
    return buf[pos++];
  }
  std::string str() {
    const uint32_t n = u32();
    need(n);
    std::string s(buf.begin() + static_cast<long>(pos),
                  buf.begin() + static_cast<long>(pos + n));
    pos += n;
    return s;
  }
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt,
                     bool f32_storage) {
  std::vector<uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  put_string(out, to_string(ckpt.config.nonlinearity));
  put_u32(out, ckpt.config.stages);
  put_u32(out, ckpt.config.hidden_channels);
  put_u32(out, ckpt.config.latent_channels);
  put_u32(out, ckpt.config.kernel);
  put_u32(out, ckpt.config.stride);
  put_u32(out, ckpt.config.restsm_depth);

  put_u32(out, static_cast<uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_string(out, name);
    out.push_back(f32_storage ? 1 : 0);
    const Shape& s = t.shape();
    put_u32(out, static_cast<uint32_t>(s.batch));
    put_u32(out, static_cast<uint32_t>(s.channels));
    put_u32(out, static_cast<uint32_t>(s.height));
    put_u32(out, static_cast<uint32_t>(s.width));
    for (double v : t.values()) {
      if (f32_storage) {
        const float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
      } else {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        put_u64(out, bits);
      }
    }
  }
  put_u64(out, fnv1a64(out));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write checkpoint: " + path);
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 8) != 0) {
    throw DataError(path + ": not a checkpoint file");
  }
  const size_t body = buf.size() - 8;
  uint64_t stored = 0;
  for (int i = 0; i < 8; ++i) {
    stored |= static_cast<uint64_t>(buf[body + i]) << (8 * i);
  }
  if (fnv1a64({buf.data(), body}) != stored) {
    throw DataError(path + ": checkpoint checksum mismatch");
  }

  Reader r{buf};
  r.pos = 8;
  Checkpoint ckpt;
  ckpt.config.nonlinearity = transform_kind_from_string(r.str());
  ckpt.config.stages = r.u32();
  ckpt.config.hidden_channels = r.u32();
  ckpt.config.latent_channels = r.u32();
  ckpt.config.kernel = r.u32();
  ckpt.config.stride = r.u32();
  ckpt.config.restsm_depth = r.u32();

  const uint32_t count = r.u32();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const uint8_t dtype = r.u8();
    if (dtype > 1) throw DataError(path + ": unknown dtype tag");
    Shape s;
    s.batch = r.u32();
    s.channels = r.u32();
    s.height = r.u32();
    s.width = r.u32();
    std::vector<double> values(s.numel());
    for (double& v : values) {
      if (dtype == 1) {
        const uint32_t bits = r.u32();
        float fv;
        std::memcpy(&fv, &bits, 4);
        v = fv;
      } else {
        const uint64_t bits = r.u64();
        std::memcpy(&v, &bits, 8);
      }
    }
    ckpt.tensors.emplace_back(std::move(name),
                              Tensor::from_vector(s, std::move(values)));
  }
  if (r.pos != body) throw DataError(path + ": trailing bytes in checkpoint");
  return ckpt;
}

uint64_t file_checksum(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path);
  std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                           std::istreambuf_iterator<char>());
  return fnv1a64(buf);
}

Checkpoint checkpoint_from_model(const CodecModel& model,
                                 const TrainState* state) {
  Checkpoint ckpt;
  ckpt.config = model.config;
  for (const auto& [name, t] : model.named_parameters()) {
    ckpt.tensors.emplace_back(name, t.clone());
  }
  if (state) {
    const auto params = model.named_parameters();
    const auto& m = state->adam.first_moments();
    const auto& v = state->adam.second_moments();
    if (m.size() != params.size()) {
      throw ConfigError("checkpoint: optimizer state does not match model");
    }
    for (size_t i = 0; i < params.size(); ++i) {
      const Shape& s = params[i].second.shape();
      ckpt.tensors.emplace_back("adam.m." + params[i].first,
                                Tensor::from_vector(s, m[i]));
      ckpt.tensors.emplace_back("adam.v." + params[i].first,
                                Tensor::from_vector(s, v[i]));
    }
    ckpt.tensors.emplace_back(
        "train.counters",
        Tensor::from_vector(Shape{1, 3, 1, 1},
                            {static_cast<double>(state->adam.step_count()),
                             static_cast<double>(state->global_step),
                             static_cast<double>(state->epoch)}));
  }
  return ckpt;
}

CodecModel model_from_checkpoint(const Checkpoint& ckpt) {
  CodecModel model = CodecModel::init(ckpt.config, /*seed=*/0);
  for (auto& [name, param] : model.named_parameters()) {
    const Tensor* stored = ckpt.find(name);
    if (!stored) throw DataError("checkpoint missing tensor \"" + name + "\"");
    if (stored->shape() != param.shape()) {
      throw DataError("checkpoint tensor \"" + name + "\" has shape " +
                      stored->shape().str() + ", expected " +
                      param.shape().str());
    }
    Tensor dst = param;
    std::copy(stored->values().begin(), stored->values().end(),
              dst.values().begin());
  }
  return model;
}

bool train_state_from_checkpoint(const Checkpoint& ckpt,
                                 const CodecModel& model, TrainState& out) {
  const Tensor* counters = ckpt.find("train.counters");
  if (!counters) return false;
  const auto params = model.named_parameters();
  out.adam = AdamState(model.parameters());
  for (size_t i = 0; i < params.size(); ++i) {
    const Tensor* m = ckpt.find("adam.m." + params[i].first);
    const Tensor* v = ckpt.find("adam.v." + params[i].first);
    if (!m || !v) {
      throw DataError("checkpoint optimizer state incomplete for \"" +
                      params[i].first + "\"");
    }
    out.adam.first_moments()[i].assign(m->values().begin(), m->values().end());
    out.adam.second_moments()[i].assign(v->values().begin(),
                                        v->values().end());
  }
  out.adam.set_step_count(static_cast<int64_t>(counters->values()[0]));
  out.global_step = static_cast<int64_t>(counters->values()[1]);
  out.epoch = static_cast<int64_t>(counters->values()[2]);
  return true;
}

}  // namespace modcodec
