#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "modcodec/graph.hpp"
#include "modcodec/ops.hpp"

namespace modcodec {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kGdnBetaMin = 1e-6;

// Nonlinearity identifiers. The strings are stable interface: they appear in
// config files, checkpoint headers and bitstream headers.
enum class TransformKind { relu, gdn, sa, tam, tpm, tfm, tjm, restsm };

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

// Learned carrier branches. Each branch is a channel-mixing affine map
// applied per spatial location; disabled branches contribute the neutral
// element (amplitude 1, frequency 0, phase 0). The phase output is squashed
// into [-phase_scale, +phase_scale] by tanh.
struct CarrierParams {
  Tensor amp_weight, amp_bias;      // (C,C,1,1), (1,C,1,1)
  Tensor freq_weight, freq_bias;
  Tensor phase_weight, phase_bias;
  bool amplitude_enabled = false;
  bool frequency_enabled = false;
  bool phase_enabled = false;
  double phase_scale = kPi;

  // Zero-initialized branches: the transform starts out as the identity map
  // (times softplus(0) when the amplitude branch is on).
  static CarrierParams make(size_t channels, bool amplitude, bool frequency,
                            bool phase);

  size_t channels() const;
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
};

// Raw modulation primitive: x * amplitude * cos(omega + phase).
// Undefined tensors stand for the neutral branch values.
Tensor modulate(Graph& g, const Tensor& x, const Tensor& amplitude,
                const Tensor& omega, const Tensor& phase);

// The carrier value A(x) * cos(w(x) + phi(x)) for learned branches.
Tensor carrier(Graph& g, const Tensor& x, const CarrierParams& p);

// f(x) = x * carrier(x).
Tensor tsm_forward(Graph& g, const Tensor& x, const CarrierParams& p);

struct DenseStage {
  Tensor weight;  // (C,C,1,1), identity at init
  Tensor bias;    // (1,C,1,1)
  static DenseStage make_identity(size_t channels);
};

// Identity-shortcut block: y = x + g(x) where g is `depth` joint-modulation
// units with a channel mixer between consecutive units.
struct ResTsmParams {
  std::vector<CarrierParams> units;
  std::vector<DenseStage> mixers;  // units.size() - 1 entries

  static ResTsmParams make(size_t channels, size_t depth);
  size_t channels() const;
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
};

Tensor res_tsm_forward(Graph& g, const Tensor& x, const ResTsmParams& p);

// Divisive normalization, y_i = x_i / (beta_i^2 + sum_j gamma_ij x_j^2)^(1/2),
// or multiplicative when inverse is set. Stored as squares of free parameters
// so beta >= kGdnBetaMin and gamma >= 0 hold under any optimizer step.
struct GdnParams {
  Tensor beta_raw;   // (1,C,1,1)
  Tensor gamma_raw;  // (C,C,1,1)
  bool inverse = false;

  // beta = 1, gamma = 0.1*I
  static GdnParams make(size_t channels, bool inverse = false);
  // From effective values; beta must be >= kGdnBetaMin, gamma >= 0.
  static GdnParams from_effective(const std::vector<double>& beta,
                                  const std::vector<double>& gamma,
                                  bool inverse = false);

  size_t channels() const;
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
};

Tensor gdn_forward(Graph& g, const Tensor& x, const GdnParams& p);

// Amplitude-only carrier with A in {0,1}: y = x * 1[x > 0]. Matches the relu
// elementwise kind bit for bit (the zero-amplitude product is an exact +0).
Tensor relu_as_amplitude(Graph& g, const Tensor& x);

// Hard shrinkage: y = x * 1[|x/theta| > 0.5], theta > 0 per channel.
struct ShrinkageParams {
  Tensor theta;  // (1,C,1,1)
  static ShrinkageParams make(size_t channels, double theta0 = 1.0);
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
};

Tensor shrinkage_forward(Graph& g, const Tensor& x, const ShrinkageParams& p);

// One (de)modulation unit of the codec, dispatching on kind. Parameter and
// FLOP accounting conventions: a channel-mixing map costs (C^2 + C)*H*W
// (multiply-accumulates including bias), every per-element primitive
// (select, product, add, transcendental) costs C*H*W.
class TransformLayer {
 public:
  TransformLayer() = default;

  static TransformLayer make(TransformKind kind, size_t channels,
                             bool synthesis_side, size_t restsm_depth = 2);

  Tensor forward(Graph& g, const Tensor& x) const;
  std::vector<Tensor> parameters() const;
  std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;
  size_t param_count() const;
  uint64_t flop_count(size_t height, size_t width) const;

  TransformKind kind() const { return kind_; }
  size_t channels() const { return channels_; }

  GdnParams& gdn() { return std::get<GdnParams>(p_); }
  const GdnParams& gdn() const { return std::get<GdnParams>(p_); }
  CarrierParams& carrier_params() { return std::get<CarrierParams>(p_); }
  const CarrierParams& carrier_params() const {
    return std::get<CarrierParams>(p_);
  }
  ResTsmParams& res_tsm() { return std::get<ResTsmParams>(p_); }
  const ResTsmParams& res_tsm() const { return std::get<ResTsmParams>(p_); }
  ShrinkageParams& shrinkage() { return std::get<ShrinkageParams>(p_); }
  const ShrinkageParams& shrinkage() const {
    return std::get<ShrinkageParams>(p_);
  }

 private:
  TransformKind kind_ = TransformKind::relu;
  size_t channels_ = 0;
  std::variant<std::monostate, GdnParams, ShrinkageParams, CarrierParams,
               ResTsmParams>
      p_;
};

// Layer-level accounting without instantiating parameters.
size_t transform_param_count(TransformKind kind, size_t channels,
                             size_t restsm_depth = 2);
uint64_t transform_flop_count(TransformKind kind, size_t channels,
                              size_t height, size_t width,
                              size_t restsm_depth = 2);

// One MAC per element: the cost of a 1x1 identity/diagonal map.
inline uint64_t pointwise_flop_count(size_t channels, size_t height,
                                     size_t width) {
  return static_cast<uint64_t>(channels) * height * width;
}

}  // namespace modcodec
