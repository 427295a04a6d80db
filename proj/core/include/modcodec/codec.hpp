#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "modcodec/entropy.hpp"
#include "modcodec/transforms.hpp"

namespace modcodec {

// Stage structure of the analysis/synthesis cascades. With n = stages, each
// side has n+1 strided convolutions and n nonlinear units: the final analysis
// stage and the first synthesis stage are pure (de)convolutions.
struct NetworkConfig {
  TransformKind nonlinearity = TransformKind::gdn;
  uint32_t stages = 3;           // n
  uint32_t hidden_channels = 128;  // N
  uint32_t latent_channels = 192;  // M
  uint32_t kernel = 5;
  uint32_t stride = 2;
  uint32_t restsm_depth = 2;
  uint32_t input_channels = 3;

  size_t downsample_factor() const;  // stride^(stages+1)
  void validate() const;
};

struct ConvLayer {
  Tensor weight;  // (OC,IC,KH,KW)
  Tensor bias;    // (1,OC,1,1)
};

struct CodecModel {
  NetworkConfig config;
  std::vector<ConvLayer> analysis_conv;      // stages+1
  std::vector<TransformLayer> analysis_nl;   // stages
  std::vector<ConvLayer> synthesis_conv;     // stages+1
  std::vector<TransformLayer> synthesis_nl;  // stages
  FactorizedPrior prior;

  static CodecModel init(const NetworkConfig& config, uint64_t seed);

  // Stable order/naming; checkpoints and optimizer state rely on it.
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  size_t param_count() const;
};

// Image (B,3,H,W) -> latent (B,M,H/f,W/f). Spatial extents must already be
// multiples of the downsampling factor (pad_to_factor does that).
Tensor analysis_apply(Graph& g, const CodecModel& model, const Tensor& image);

// Latent -> reconstruction, extents multiplied by the downsampling factor.
Tensor synthesis_apply(Graph& g, const CodecModel& model, const Tensor& latent);

// Feature map after analysis stage `stage` in [0, stages] (stage = stages
// yields the latent). For the per-channel energy report.
Tensor analysis_stage_features(Graph& g, const CodecModel& model,
                               const Tensor& image, size_t stage);

struct PadResult {
  Tensor padded;
  size_t orig_height = 0;
  size_t orig_width = 0;
};

// Reflect-pads right/bottom up to the next multiple of `factor` (replicates
// when an extent is 1 and reflection is undefined). crop_spatial inverts it.
PadResult pad_to_factor(const Tensor& image, size_t factor);
Tensor crop_spatial(const Tensor& image, size_t height, size_t width);

size_t conv_param_count(size_t out_ch, size_t in_ch, size_t kh, size_t kw);
uint64_t conv_flop_count(size_t out_ch, size_t in_ch, size_t kh, size_t kw,
                         size_t out_h, size_t out_w);

}  // namespace modcodec
