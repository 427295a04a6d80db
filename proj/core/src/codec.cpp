#include "modcodec/codec.hpp"

#include <cmath>

#include "modcodec/common.hpp"

namespace modcodec {

size_t NetworkConfig::downsample_factor() const {
  size_t f = 1;
  for (uint32_t i = 0; i <= stages; ++i) f *= stride;
  return f;
}

void NetworkConfig::validate() const {
  if (hidden_channels < 1 || latent_channels < 1 || input_channels < 1) {
    throw ConfigError("network: channel counts must be >= 1");
  }
  if (stride < 1) throw ConfigError("network: stride must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) {
    throw ConfigError("network: kernel must be odd");
  }
  if (restsm_depth < 1) throw ConfigError("network: restsm_depth must be >= 1");
}

namespace {

ConvLayer init_conv(size_t out_ch, size_t in_ch, size_t k, Rng& rng) {
  ConvLayer layer;
  layer.weight = Tensor::zeros(Shape{out_ch, in_ch, k, k}, true);
  const double fan_in = static_cast<double>(in_ch * k * k);
  const double fan_out = static_cast<double>(out_ch * k * k);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  layer.bias = Tensor::zeros(Shape{1, out_ch, 1, 1}, true);
  return layer;
}

// Upsampling conv weight layout is (IN,OUT,k,k); the bias covers OUT.
ConvLayer init_deconv(size_t in_ch, size_t out_ch, size_t k, Rng& rng) {
  ConvLayer layer;
  layer.weight = Tensor::zeros(Shape{in_ch, out_ch, k, k}, true);
  const double fan_in = static_cast<double>(in_ch * k * k);
  const double fan_out = static_cast<double>(out_ch * k * k);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& w : layer.weight.values()) w = rng.uniform(-bound, bound);
  layer.bias = Tensor::zeros(Shape{1, out_ch, 1, 1}, true);
  return layer;
}

size_t analysis_conv_out(const NetworkConfig& c, size_t k) {
  return k == c.stages ? c.latent_channels : c.hidden_channels;
}

size_t analysis_conv_in(const NetworkConfig& c, size_t k) {
  return k == 0 ? c.input_channels : c.hidden_channels;
}

size_t synthesis_conv_out(const NetworkConfig& c, size_t k) {
  return k == c.stages ? c.input_channels : c.hidden_channels;
}

size_t synthesis_conv_in(const NetworkConfig& c, size_t k) {
  return k == 0 ? c.latent_channels : c.hidden_channels;
}

}  // namespace

CodecModel CodecModel::init(const NetworkConfig& config, uint64_t seed) {
  config.validate();
  CodecModel m;
  m.config = config;
  const uint32_t n = config.stages;
  for (uint32_t k = 0; k <= n; ++k) {
    Rng rng(mix_seed(seed, 0x10, k));
    m.analysis_conv.push_back(init_conv(analysis_conv_out(config, k),
                                        analysis_conv_in(config, k),
                                        config.kernel, rng));
    if (k < n) {
      m.analysis_nl.push_back(TransformLayer::make(
          config.nonlinearity, analysis_conv_out(config, k),
          /*synthesis_side=*/false, config.restsm_depth));
    }
  }
  for (uint32_t k = 0; k <= n; ++k) {
    Rng rng(mix_seed(seed, 0x20, k));
    m.synthesis_conv.push_back(init_deconv(synthesis_conv_in(config, k),
                                           synthesis_conv_out(config, k),
                                           config.kernel, rng));
    if (k >= 1) {
      m.synthesis_nl.push_back(TransformLayer::make(
          config.nonlinearity, synthesis_conv_out(config, k),
          /*synthesis_side=*/true, config.restsm_depth));
    }
  }
  m.prior = FactorizedPrior::make(config.latent_channels);
  return m;
}

std::vector<Tensor> CodecModel::parameters() const {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, Tensor>> CodecModel::named_parameters()
    const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (size_t k = 0; k < analysis_conv.size(); ++k) {
    const std::string p = "analysis.conv" + std::to_string(k);
    out.emplace_back(p + ".weight", analysis_conv[k].weight);
    out.emplace_back(p + ".bias", analysis_conv[k].bias);
    if (k < analysis_nl.size()) {
      auto ps = analysis_nl[k].named_parameters("analysis.nl" +
                                                std::to_string(k));
      out.insert(out.end(), ps.begin(), ps.end());
    }
  }
  for (size_t k = 0; k < synthesis_conv.size(); ++k) {
    const std::string p = "synthesis.conv" + std::to_string(k);
    out.emplace_back(p + ".weight", synthesis_conv[k].weight);
    out.emplace_back(p + ".bias", synthesis_conv[k].bias);
    if (k >= 1 && k - 1 < synthesis_nl.size()) {
      auto ps = synthesis_nl[k - 1].named_parameters("synthesis.nl" +
                                                     std::to_string(k - 1));
      out.insert(out.end(), ps.begin(), ps.end());
    }
  }
  auto pp = prior.named_parameters("prior");
  out.insert(out.end(), pp.begin(), pp.end());
  return out;
}

size_t CodecModel::param_count() const {
  size_t n = 0;
  for (const Tensor& p : parameters()) n += p.numel();
  return n;
}

Tensor analysis_apply(Graph& g, const CodecModel& model, const Tensor& image) {
  const NetworkConfig& c = model.config;
  if (image.shape().channels != c.input_channels) {
    throw ConfigError("analysis: image has " +
                      std::to_string(image.shape().channels) +
                      " channels, expected " +
                      std::to_string(c.input_channels));
  }
  const size_t f = c.downsample_factor();
  if (image.shape().height % f != 0 || image.shape().width % f != 0) {
    throw ConfigError("analysis: spatial extents must be multiples of " +
                      std::to_string(f) + ", got " + image.shape().str() +
                      " (pad first)");
  }
  const int pad = static_cast<int>(c.kernel / 2);
  Tensor x = image;
  for (size_t k = 0; k < model.analysis_conv.size(); ++k) {
    x = ops::conv2d(g, x, model.analysis_conv[k].weight,
                    model.analysis_conv[k].bias, static_cast<int>(c.stride),
                    pad);
    if (k < model.analysis_nl.size()) x = model.analysis_nl[k].forward(g, x);
  }
  return x;
}

Tensor synthesis_apply(Graph& g, const CodecModel& model, const Tensor& latent) {
  const NetworkConfig& c = model.config;
  if (latent.shape().channels != c.latent_channels) {
    throw ConfigError("synthesis: latent has " +
                      std::to_string(latent.shape().channels) +
                      " channels, expected " +
                      std::to_string(c.latent_channels));
  }
  const int pad = static_cast<int>(c.kernel / 2);
  const int out_pad = static_cast<int>(c.stride) - 1;
  Tensor x = latent;
  for (size_t k = 0; k < model.synthesis_conv.size(); ++k) {
    x = ops::conv_transpose2d(g, x, model.synthesis_conv[k].weight,
                              model.synthesis_conv[k].bias,
                              static_cast<int>(c.stride), pad, out_pad);
    if (k >= 1) x = model.synthesis_nl[k - 1].forward(g, x);
  }
  return x;
}

Tensor analysis_stage_features(Graph& g, const CodecModel& model,
                               const Tensor& image, size_t stage) {
  if (stage >= model.analysis_conv.size()) {
    throw ConfigError("analysis stage out of range");
  }
  const NetworkConfig& c = model.config;
  const int pad = static_cast<int>(c.kernel / 2);
  Tensor x = image;
  for (size_t k = 0; k <= stage; ++k) {
    x = ops::conv2d(g, x, model.analysis_conv[k].weight,
                    model.analysis_conv[k].bias, static_cast<int>(c.stride),
                    pad);
    if (k < model.analysis_nl.size()) x = model.analysis_nl[k].forward(g, x);
  }
  return x;
}

namespace {

size_t fold_pad_index(size_t i, size_t extent) {
  if (extent == 1) return 0;
  const size_t period = 2 * (extent - 1);
  size_t m = i % period;
  return m < extent ? m : period - m;
}

}  // namespace

PadResult pad_to_factor(const Tensor& image, size_t factor) {
  if (factor < 1) throw ConfigError("pad_to_factor: factor must be >= 1");
  const Shape& s = image.shape();
  PadResult r;
  r.orig_height = s.height;
  r.orig_width = s.width;
  const size_t ph = (s.height + factor - 1) / factor * factor;
  const size_t pw = (s.width + factor - 1) / factor * factor;
  if (ph == s.height && pw == s.width) {
    r.padded = image;
    return r;
  }
  Tensor out = Tensor::zeros(Shape{s.batch, s.channels, ph, pw});
  for (size_t b = 0; b < s.batch; ++b) {
    for (size_t c = 0; c < s.channels; ++c) {
      for (size_t y = 0; y < ph; ++y) {
        const size_t sy = fold_pad_index(y, s.height);
        for (size_t x = 0; x < pw; ++x) {
          out.at(b, c, y, x) = image.at(b, c, sy, fold_pad_index(x, s.width));
        }
      }
    }
  }
  r.padded = out;
  return r;
}

Tensor crop_spatial(const Tensor& image, size_t height, size_t width) {
  const Shape& s = image.shape();
  if (height > s.height || width > s.width) {
    throw ConfigError("crop exceeds image extents");
  }
  if (height == s.height && width == s.width) return image;
  Tensor out = Tensor::zeros(Shape{s.batch, s.channels, height, width});
  for (size_t b = 0; b < s.batch; ++b) {
    for (size_t c = 0; c < s.channels; ++c) {
      for (size_t y = 0; y < height; ++y) {
        for (size_t x = 0; x < width; ++x) {
          out.at(b, c, y, x) = image.at(b, c, y, x);
        }
      }
    }
  }
  return out;
}

size_t conv_param_count(size_t out_ch, size_t in_ch, size_t kh, size_t kw) {
  return out_ch * in_ch * kh * kw + out_ch;
}

uint64_t conv_flop_count(size_t out_ch, size_t in_ch, size_t kh, size_t kw,
                         size_t out_h, size_t out_w) {
  return static_cast<uint64_t>(out_ch * in_ch * kh * kw + out_ch) * out_h *
         out_w;
}

}  // namespace modcodec
