#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modcodec/graph.hpp"
#include "modcodec/ops.hpp"

namespace modcodec {

// Integer-valued latent (quantized symbols), same layout as Tensor.
struct Symbols {
  Shape shape;
  std::vector<int32_t> values;
};

// Per-channel logistic prior over integer latent bins. Scale is stored as a
// log so positivity survives any optimizer step; the effective scale is
// floored at kScaleFloor and bin likelihoods at kLikelihoodFloor.
struct FactorizedPrior {
  Tensor loc;        // (1,C,1,1)
  Tensor log_scale;  // (1,C,1,1)

  static constexpr double kScaleFloor = 1e-4;
  static constexpr double kLikelihoodFloor = 9.5367431640625e-07;  // 2^-20

  static FactorizedPrior make(size_t channels);
  size_t channels() const { return loc.shape().channels; }
  std::vector<Tensor> parameters() const { return {loc, log_scale}; }
  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
};

// The training-time channel proxy: y + u with u ~ U(-0.5, 0.5) i.i.d.,
// reproducible from the seed. Gradient w.r.t. y is the identity.
Tensor add_uniform_noise(Graph& g, const Tensor& y, uint64_t seed);

// Inference-time quantization, round half away from zero.
Symbols quantize_round(const Tensor& y);

Tensor symbols_to_tensor(const Symbols& s);

// Integer-bin likelihood p(v) = F(v+1/2) - F(v-1/2) under the per-channel
// logistic, floored at kLikelihoodFloor. Differentiable in y and the prior.
// apply_floor = false exposes the raw bin masses (they telescope to the CDF).
Tensor likelihood(Graph& g, const Tensor& y, const FactorizedPrior& prior,
                  bool apply_floor = true);

// Total code length estimate, sum of -log2 p, as a differentiable scalar.
Tensor rate_bits(Graph& g, const Tensor& y, const FactorizedPrior& prior);

// Fixed-point per-channel CDF tables for the range coder. Built bit-exactly
// from prior parameters (deterministic exp, largest-remainder allocation),
// so encoder and decoder derive identical tables from the same checkpoint on
// any platform. The final bin is the escape bin for out-of-range symbols.
struct QuantizedCdf {
  static constexpr uint32_t kTotal = 1u << 16;

  int32_t min_sym = -64;
  int32_t max_sym = 63;
  // cum[c] has bin_count()+1 entries: cum[c][0] = 0, cum[c].back() = kTotal,
  // strictly increasing (every bin frequency >= 1).
  std::vector<std::vector<uint32_t>> cum;

  size_t symbol_count() const {
    return static_cast<size_t>(max_sym - min_sym + 1);
  }
  size_t bin_count() const { return symbol_count() + 1; }
  size_t escape_bin() const { return symbol_count(); }
  uint32_t freq(size_t channel, size_t bin) const {
    return cum[channel][bin + 1] - cum[channel][bin];
  }
};

// Largest-remainder quantization of a probability vector to 16-bit integer
// frequencies summing to `total`, every entry >= 1. Deterministic.
std::vector<uint32_t> quantize_pmf(std::span<const double> pmf,
                                   uint32_t total = QuantizedCdf::kTotal);

QuantizedCdf build_cdf_table(const FactorizedPrior& prior,
                             int32_t min_sym = -64, int32_t max_sym = 63);

}  // namespace modcodec
