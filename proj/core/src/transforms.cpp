#include "modcodec/transforms.hpp"

#include <cmath>

namespace modcodec {

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::relu: return "relu";
    case TransformKind::gdn: return "gdn";
    case TransformKind::sa: return "sa";
    case TransformKind::tam: return "tam";
    case TransformKind::tpm: return "tpm";
    case TransformKind::tfm: return "tfm";
    case TransformKind::tjm: return "tjm";
    case TransformKind::restsm: return "restsm";
  }
  throw ConfigError("unknown transform kind");
}

TransformKind transform_kind_from_string(const std::string& name) {
  if (name == "relu") return TransformKind::relu;
  if (name == "gdn") return TransformKind::gdn;
  if (name == "sa") return TransformKind::sa;
  if (name == "tam") return TransformKind::tam;
  if (name == "tpm") return TransformKind::tpm;
  if (name == "tfm") return TransformKind::tfm;
  if (name == "tjm") return TransformKind::tjm;
  if (name == "restsm") return TransformKind::restsm;
  throw ConfigError("unknown nonlinearity \"" + name + "\"");
}

namespace {

Tensor make_param(const Shape& s) { return Tensor::zeros(s, true); }

void check_channels(const Tensor& x, size_t c, const char* what) {
  if (x.shape().channels != c) {
    throw ConfigError(std::string(what) + ": input has " +
                      std::to_string(x.shape().channels) +
                      " channels, parameters expect " + std::to_string(c));
  }
}

}  // namespace

CarrierParams CarrierParams::make(size_t channels, bool amplitude,
                                  bool frequency, bool phase) {
  CarrierParams p;
  p.amplitude_enabled = amplitude;
  p.frequency_enabled = frequency;
  p.phase_enabled = phase;
  const Shape wshape{channels, channels, 1, 1};
  const Shape bshape{1, channels, 1, 1};
  if (amplitude) {
    p.amp_weight = make_param(wshape);
    p.amp_bias = make_param(bshape);
  }
  if (frequency) {
    p.freq_weight = make_param(wshape);
    p.freq_bias = make_param(bshape);
  }
  if (phase) {
    p.phase_weight = make_param(wshape);
    p.phase_bias = make_param(bshape);
  }
  return p;
}

size_t CarrierParams::channels() const {
  if (amplitude_enabled) return amp_weight.shape().batch;
  if (frequency_enabled) return freq_weight.shape().batch;
  if (phase_enabled) return phase_weight.shape().batch;
  return 0;
}

std::vector<Tensor> CarrierParams::parameters() const {
  std::vector<Tensor> out;
  if (amplitude_enabled) {
    out.push_back(amp_weight);
    out.push_back(amp_bias);
  }
  if (frequency_enabled) {
    out.push_back(freq_weight);
    out.push_back(freq_bias);
  }
  if (phase_enabled) {
    out.push_back(phase_weight);
    out.push_back(phase_bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> CarrierParams::named_parameters(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (amplitude_enabled) {
    out.emplace_back(prefix + ".amp.weight", amp_weight);
    out.emplace_back(prefix + ".amp.bias", amp_bias);
  }
  if (frequency_enabled) {
    out.emplace_back(prefix + ".freq.weight", freq_weight);
    out.emplace_back(prefix + ".freq.bias", freq_bias);
  }
  if (phase_enabled) {
    out.emplace_back(prefix + ".phase.weight", phase_weight);
    out.emplace_back(prefix + ".phase.bias", phase_bias);
  }
  return out;
}

Tensor modulate(Graph& g, const Tensor& x, const Tensor& amplitude,
                const Tensor& omega, const Tensor& phase) {
  Tensor angle;
  if (omega.defined() && phase.defined()) {
    angle = ops::add(g, omega, phase);
  } else if (omega.defined()) {
    angle = omega;
  } else if (phase.defined()) {
    angle = phase;
  }
  Tensor c;
  if (angle.defined()) {
    c = ops::cos(g, angle);
    if (amplitude.defined()) c = ops::mul(g, amplitude, c);
  } else {
    c = amplitude;  // cos(0) == 1 exactly
  }
  if (!c.defined()) return x;  // all branches neutral
  return ops::mul(g, x, c);
}

Tensor carrier(Graph& g, const Tensor& x, const CarrierParams& p) {
  const size_t c = p.channels();
  if (c == 0) return Tensor::full(x.shape(), 1.0);
  check_channels(x, c, "carrier");
  Tensor amp, omega, phase;
  if (p.amplitude_enabled) {
    amp = ops::softplus(g, ops::dense_channelwise(g, x, p.amp_weight, p.amp_bias));
  }
  if (p.frequency_enabled) {
    omega = ops::dense_channelwise(g, x, p.freq_weight, p.freq_bias);
  }
  if (p.phase_enabled) {
    phase = ops::mul_scalar(
        g, ops::tanh(g, ops::dense_channelwise(g, x, p.phase_weight, p.phase_bias)),
        p.phase_scale);
  }
  Tensor angle;
  if (omega.defined() && phase.defined()) {
    angle = ops::add(g, omega, phase);
  } else if (omega.defined()) {
    angle = omega;
  } else if (phase.defined()) {
    angle = phase;
  }
  if (angle.defined()) {
    Tensor co = ops::cos(g, angle);
    return amp.defined() ? ops::mul(g, amp, co) : co;
  }
  return amp.defined() ? amp : Tensor::full(x.shape(), 1.0);
}

Tensor tsm_forward(Graph& g, const Tensor& x, const CarrierParams& p) {
  if (p.channels() == 0) return x;  // every branch disabled: identity
  return ops::mul(g, x, carrier(g, x, p));
}

DenseStage DenseStage::make_identity(size_t channels) {
  DenseStage s;
  s.weight = make_param(Shape{channels, channels, 1, 1});
  for (size_t i = 0; i < channels; ++i) {
    s.weight.values()[i * channels + i] = 1.0;
  }
  s.bias = make_param(Shape{1, channels, 1, 1});
  return s;
}

ResTsmParams ResTsmParams::make(size_t channels, size_t depth) {
  if (depth < 1) throw ConfigError("res_tsm depth must be >= 1");
  ResTsmParams p;
  for (size_t i = 0; i < depth; ++i) {
    p.units.push_back(CarrierParams::make(channels, true, true, true));
  }
  for (size_t i = 0; i + 1 < depth; ++i) {
    p.mixers.push_back(DenseStage::make_identity(channels));
  }
  return p;
}

size_t ResTsmParams::channels() const {
  return units.empty() ? 0 : units.front().channels();
}

std::vector<Tensor> ResTsmParams::parameters() const {
  std::vector<Tensor> out;
  for (const auto& u : units) {
    auto ps = u.parameters();
    out.insert(out.end(), ps.begin(), ps.end());
  }
  for (const auto& m : mixers) {
    out.push_back(m.weight);
    out.push_back(m.bias);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> ResTsmParams::named_parameters(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (size_t i = 0; i < units.size(); ++i) {
    auto ps = units[i].named_parameters(prefix + ".unit" + std::to_string(i));
    out.insert(out.end(), ps.begin(), ps.end());
  }
  for (size_t i = 0; i < mixers.size(); ++i) {
    out.emplace_back(prefix + ".mix" + std::to_string(i) + ".weight",
                     mixers[i].weight);
    out.emplace_back(prefix + ".mix" + std::to_string(i) + ".bias",
                     mixers[i].bias);
  }
  return out;
}

Tensor res_tsm_forward(Graph& g, const Tensor& x, const ResTsmParams& p) {
  if (p.units.empty()) throw ConfigError("res_tsm: empty unit stack");
  if (p.mixers.size() + 1 != p.units.size()) {
    throw ConfigError("res_tsm: expected one mixer between consecutive units");
  }
  Tensor h = x;
  for (size_t i = 0; i < p.units.size(); ++i) {
    h = tsm_forward(g, h, p.units[i]);
    if (i < p.mixers.size()) {
      h = ops::dense_channelwise(g, h, p.mixers[i].weight, p.mixers[i].bias);
    }
  }
  return ops::add(g, x, h);
}

GdnParams GdnParams::make(size_t channels, bool inverse) {
  std::vector<double> beta(channels, 1.0);
  std::vector<double> gamma(channels * channels, 0.0);
  for (size_t i = 0; i < channels; ++i) gamma[i * channels + i] = 0.1;
  return from_effective(beta, gamma, inverse);
}

GdnParams GdnParams::from_effective(const std::vector<double>& beta,
                                    const std::vector<double>& gamma,
                                    bool inverse) {
  const size_t c = beta.size();
  if (gamma.size() != c * c) {
    throw ConfigError("gdn: gamma must be a CxC matrix");
  }
  GdnParams p;
  p.inverse = inverse;
  p.beta_raw = make_param(Shape{1, c, 1, 1});
  p.gamma_raw = make_param(Shape{c, c, 1, 1});
  for (size_t i = 0; i < c; ++i) {
    if (beta[i] < kGdnBetaMin) {
      throw ConfigError("gdn: beta below the floor " +
                        std::to_string(kGdnBetaMin));
    }
    p.beta_raw.values()[i] = std::sqrt(beta[i] - kGdnBetaMin);
  }
  for (size_t i = 0; i < gamma.size(); ++i) {
    if (gamma[i] < 0.0) throw ConfigError("gdn: gamma must be nonnegative");
    p.gamma_raw.values()[i] = std::sqrt(gamma[i]);
  }
  return p;
}

size_t GdnParams::channels() const { return beta_raw.shape().channels; }

std::vector<Tensor> GdnParams::parameters() const {
  return {beta_raw, gamma_raw};
}

std::vector<std::pair<std::string, Tensor>> GdnParams::named_parameters(
    const std::string& prefix) const {
  return {{prefix + ".beta_raw", beta_raw}, {prefix + ".gamma_raw", gamma_raw}};
}

Tensor gdn_forward(Graph& g, const Tensor& x, const GdnParams& p) {
  check_channels(x, p.channels(), "gdn");
  Tensor beta_eff = ops::add_scalar(g, ops::square(g, p.beta_raw), kGdnBetaMin);
  Tensor gamma_eff = ops::square(g, p.gamma_raw);
  Tensor denom_sq = ops::add(g, ops::dense_channelwise(g, ops::square(g, x),
                                                       gamma_eff, Tensor{}),
                             ops::square(g, beta_eff));
  for (double v : denom_sq.values()) {
    if (v < 1e-12) throw NumericError("gdn: denominator below 1e-12");
  }
  Tensor denom = ops::sqrt(g, denom_sq);
  return p.inverse ? ops::mul(g, x, denom)
                   : ops::mul(g, x, ops::reciprocal(g, denom));
}

Tensor relu_as_amplitude(Graph& g, const Tensor& x) {
  // x * 1[x>0] realized as a select so the annihilated half is an exact +0.
  return ops::relu(g, x);
}

ShrinkageParams ShrinkageParams::make(size_t channels, double theta0) {
  if (theta0 <= 0.0) throw ConfigError("shrinkage: theta must be > 0");
  ShrinkageParams p;
  p.theta = Tensor::full(Shape{1, channels, 1, 1}, theta0, true);
  return p;
}

std::vector<Tensor> ShrinkageParams::parameters() const { return {theta}; }

std::vector<std::pair<std::string, Tensor>> ShrinkageParams::named_parameters(
    const std::string& prefix) const {
  return {{prefix + ".theta", theta}};
}

Tensor shrinkage_forward(Graph& g, const Tensor& x, const ShrinkageParams& p) {
  check_channels(x, p.theta.shape().channels, "shrinkage");
  for (double t : p.theta.values()) {
    if (t <= 0.0) throw ConfigError("shrinkage: theta must be > 0");
  }
  // Gating indicator per element; the threshold gets a zero gradient (the
  // indicator is flat almost everywhere).
  const Shape& xs = x.shape();
  Tensor mask = Tensor::zeros(xs);
  const size_t plane = xs.height * xs.width;
  for (size_t b = 0; b < xs.batch; ++b) {
    for (size_t c = 0; c < xs.channels; ++c) {
      const double t = p.theta.values()[c];
      const double* xv = x.values().data() + (b * xs.channels + c) * plane;
      double* mv = mask.values().data() + (b * xs.channels + c) * plane;
      for (size_t i = 0; i < plane; ++i) {
        mv[i] = std::fabs(xv[i] / t) > 0.5 ? 1.0 : 0.0;
      }
    }
  }
  return modulate(g, x, mask, Tensor{}, Tensor{});
}

TransformLayer TransformLayer::make(TransformKind kind, size_t channels,
                                    bool synthesis_side, size_t restsm_depth) {
  TransformLayer layer;
  layer.kind_ = kind;
  layer.channels_ = channels;
  switch (kind) {
    case TransformKind::relu:
      layer.p_ = std::monostate{};
      break;
    case TransformKind::gdn:
      layer.p_ = GdnParams::make(channels, /*inverse=*/synthesis_side);
      break;
    case TransformKind::sa:
      layer.p_ = ShrinkageParams::make(channels);
      break;
    case TransformKind::tam:
      layer.p_ = CarrierParams::make(channels, true, false, false);
      break;
    case TransformKind::tpm:
      layer.p_ = CarrierParams::make(channels, false, false, true);
      break;
    case TransformKind::tfm:
      layer.p_ = CarrierParams::make(channels, false, true, false);
      break;
    case TransformKind::tjm:
      layer.p_ = CarrierParams::make(channels, true, true, true);
      break;
    case TransformKind::restsm:
      layer.p_ = ResTsmParams::make(channels, restsm_depth);
      break;
  }
  return layer;
}

Tensor TransformLayer::forward(Graph& g, const Tensor& x) const {
  switch (kind_) {
    case TransformKind::relu:
      return relu_as_amplitude(g, x);
    case TransformKind::gdn:
      return gdn_forward(g, x, std::get<GdnParams>(p_));
    case TransformKind::sa:
      return shrinkage_forward(g, x, std::get<ShrinkageParams>(p_));
    case TransformKind::tam:
    case TransformKind::tpm:
    case TransformKind::tfm:
    case TransformKind::tjm:
      return tsm_forward(g, x, std::get<CarrierParams>(p_));
    case TransformKind::restsm:
      return res_tsm_forward(g, x, std::get<ResTsmParams>(p_));
  }
  throw ConfigError("unknown transform kind");
}

std::vector<Tensor> TransformLayer::parameters() const {
  switch (kind_) {
    case TransformKind::relu:
      return {};
    case TransformKind::gdn:
      return std::get<GdnParams>(p_).parameters();
    case TransformKind::sa:
      return std::get<ShrinkageParams>(p_).parameters();
    case TransformKind::tam:
    case TransformKind::tpm:
    case TransformKind::tfm:
    case TransformKind::tjm:
      return std::get<CarrierParams>(p_).parameters();
    case TransformKind::restsm:
      return std::get<ResTsmParams>(p_).parameters();
  }
  return {};
}

std::vector<std::pair<std::string, Tensor>> TransformLayer::named_parameters(
    const std::string& prefix) const {
  switch (kind_) {
    case TransformKind::relu:
      return {};
    case TransformKind::gdn:
      return std::get<GdnParams>(p_).named_parameters(prefix);
    case TransformKind::sa:
      return std::get<ShrinkageParams>(p_).named_parameters(prefix);
    case TransformKind::tam:
    case TransformKind::tpm:
    case TransformKind::tfm:
    case TransformKind::tjm:
      return std::get<CarrierParams>(p_).named_parameters(prefix);
    case TransformKind::restsm:
      return std::get<ResTsmParams>(p_).named_parameters(prefix);
  }
  return {};
}

size_t TransformLayer::param_count() const {
  size_t n = 0;
  for (const Tensor& p : parameters()) n += p.numel();
  return n;
}

uint64_t TransformLayer::flop_count(size_t height, size_t width) const {
  size_t depth = 2;
  if (kind_ == TransformKind::restsm) {
    depth = std::get<ResTsmParams>(p_).units.size();
  }
  return transform_flop_count(kind_, channels_, height, width, depth);
}

size_t transform_param_count(TransformKind kind, size_t channels,
                             size_t restsm_depth) {
  const size_t mix = channels * channels + channels;
  switch (kind) {
    case TransformKind::relu: return 0;
    case TransformKind::gdn: return mix;  // gamma CxC + beta C
    case TransformKind::sa: return channels;
    case TransformKind::tam:
    case TransformKind::tpm:
    case TransformKind::tfm: return mix;
    case TransformKind::tjm: return 3 * mix;
    case TransformKind::restsm:
      return restsm_depth * 3 * mix + (restsm_depth - 1) * mix;
  }
  throw ConfigError("unknown transform kind");
}

uint64_t transform_flop_count(TransformKind kind, size_t channels,
                              size_t height, size_t width,
                              size_t restsm_depth) {
  const uint64_t hw = static_cast<uint64_t>(height) * width;
  const uint64_t el = static_cast<uint64_t>(channels) * hw;
  const uint64_t mix =
      (static_cast<uint64_t>(channels) * channels + channels) * hw;
  switch (kind) {
    case TransformKind::relu:
      return el;            // select
    case TransformKind::sa:
      return 2 * el;        // scale + select
    case TransformKind::gdn:
      return mix + 3 * el;  // square, mix, sqrt, divide
    case TransformKind::tam:
      return mix + 2 * el;  // softplus, product
    case TransformKind::tpm:
      return mix + 4 * el;  // tanh, scale, cos, product
    case TransformKind::tfm:
      return mix + 2 * el;  // cos, product
    case TransformKind::tjm:
      return 3 * mix + 7 * el;
    case TransformKind::restsm: {
      const uint64_t tjm = 3 * mix + 7 * el;
      return restsm_depth * tjm + (restsm_depth - 1) * mix + el;
    }
  }
  throw ConfigError("unknown transform kind");
}

}  // namespace modcodec
