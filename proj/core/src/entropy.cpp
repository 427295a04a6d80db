#include "modcodec/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "modcodec/common.hpp"
#include "modcodec/det_math.hpp"

namespace modcodec {

FactorizedPrior FactorizedPrior::make(size_t channels) {
  FactorizedPrior p;
  p.loc = Tensor::zeros(Shape{1, channels, 1, 1}, true);
  p.log_scale = Tensor::zeros(Shape{1, channels, 1, 1}, true);
  return p;
}

std::vector<std::pair<std::string, Tensor>> FactorizedPrior::named_parameters(
    const std::string& prefix) const {
  return {{prefix + ".loc", loc}, {prefix + ".log_scale", log_scale}};
}

Tensor add_uniform_noise(Graph& g, const Tensor& y, uint64_t seed) {
  Tensor noise = Tensor::zeros(y.shape());
  Rng rng(seed);
  for (double& v : noise.values()) v = rng.uniform() - 0.5;
  return ops::add_constant(g, y, noise);
}

Symbols quantize_round(const Tensor& y) {
  y.check_finite("quantize input");
  Symbols s;
  s.shape = y.shape();
  s.values.reserve(y.numel());
  for (double v : y.values()) {
    const double r = v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5);
    if (r < -2147483648.0 || r > 2147483647.0) {
      throw NumericError("quantized value exceeds 32-bit symbol range");
    }
    s.values.push_back(static_cast<int32_t>(r));
  }
  return s;
}

Tensor symbols_to_tensor(const Symbols& s) {
  std::vector<double> v(s.values.begin(), s.values.end());
  return Tensor::from_vector(s.shape, std::move(v));
}

Tensor likelihood(Graph& g, const Tensor& y, const FactorizedPrior& prior,
                  bool apply_floor) {
  if (y.shape().channels != prior.channels()) {
    throw ConfigError("likelihood: prior has " +
                      std::to_string(prior.channels()) +
                      " channels, latent has " +
                      std::to_string(y.shape().channels));
  }
  Tensor scale =
      ops::clamp_min(g, ops::exp(g, prior.log_scale), FactorizedPrior::kScaleFloor);
  Tensor inv_scale = ops::reciprocal(g, scale);
  Tensor centered = ops::sub(g, y, prior.loc);
  Tensor hi = ops::mul(g, ops::add_scalar(g, centered, 0.5), inv_scale);
  Tensor lo = ops::mul(g, ops::add_scalar(g, centered, -0.5), inv_scale);
  Tensor p = ops::sub(g, ops::sigmoid(g, hi), ops::sigmoid(g, lo));
  if (!apply_floor) return p;
  return ops::clamp_min(g, p, FactorizedPrior::kLikelihoodFloor);
}

Tensor rate_bits(Graph& g, const Tensor& y, const FactorizedPrior& prior) {
  Tensor p = likelihood(g, y, prior);
  constexpr double inv_ln2 = 1.4426950408889634074;
  return ops::mul_scalar(g, ops::sum_all(g, ops::neg(g, ops::log(g, p))),
                         inv_ln2);
}

std::vector<uint32_t> quantize_pmf(std::span<const double> pmf,
                                   uint32_t total) {
  const size_t n = pmf.size();
  if (n == 0) throw ConfigError("quantize_pmf: empty pmf");
  if (total < n) throw ConfigError("quantize_pmf: total smaller than bin count");

  double sum = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0)) throw NumericError("quantize_pmf: negative probability");
    sum += p;
  }

  std::vector<uint32_t> freq(n, 0);
  if (sum <= 0.0) {
    // Degenerate input: spread uniformly.
    const uint32_t base = total / static_cast<uint32_t>(n);
    uint32_t rem = total - base * static_cast<uint32_t>(n);
    for (size_t i = 0; i < n; ++i) freq[i] = base + (i < rem ? 1 : 0);
    return freq;
  }

  // Largest-remainder allocation, ties broken by lower index.
  std::vector<double> remainder(n);
  uint64_t assigned = 0;
  for (size_t i = 0; i < n; ++i) {
    const double exact = pmf[i] / sum * static_cast<double>(total);
    const double fl = std::floor(exact);
    freq[i] = static_cast<uint32_t>(fl);
    remainder[i] = exact - fl;
    assigned += freq[i];
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (remainder[a] != remainder[b]) return remainder[a] > remainder[b];
    return a < b;
  });
  uint64_t leftover = total - assigned;
  for (size_t i = 0; leftover > 0; i = (i + 1) % n) {
    ++freq[order[i]];
    --leftover;
  }

  // Every bin must stay codeable.
  for (size_t i = 0; i < n; ++i) {
    while (freq[i] == 0) {
      size_t donor = 0;
      uint32_t best = 0;
      for (size_t j = 0; j < n; ++j) {
        if (freq[j] > best) {
          best = freq[j];
          donor = j;
        }
      }
      if (best < 2) throw NumericError("quantize_pmf: cannot enforce min freq");
      --freq[donor];
      ++freq[i];
    }
  }
  return freq;
}

QuantizedCdf build_cdf_table(const FactorizedPrior& prior, int32_t min_sym,
                             int32_t max_sym) {
  if (min_sym > max_sym) throw ConfigError("build_cdf_table: empty range");
  QuantizedCdf cdf;
  cdf.min_sym = min_sym;
  cdf.max_sym = max_sym;
  const size_t nsym = cdf.symbol_count();
  cdf.cum.resize(prior.channels());
  for (size_t c = 0; c < prior.channels(); ++c) {
    const double mu = prior.loc.values()[c];
    double s = detmath::det_exp(prior.log_scale.values()[c]);
    if (s < FactorizedPrior::kScaleFloor) s = FactorizedPrior::kScaleFloor;

    std::vector<double> pmf(nsym + 1, 0.0);
    double in_range = 0.0;
    for (size_t i = 0; i < nsym; ++i) {
      const double v = static_cast<double>(min_sym + static_cast<int32_t>(i));
      const double hi = detmath::logistic_cdf((v + 0.5 - mu) / s);
      const double lo = detmath::logistic_cdf((v - 0.5 - mu) / s);
      pmf[i] = hi > lo ? hi - lo : 0.0;
      in_range += pmf[i];
    }
    pmf[nsym] = in_range < 1.0 ? 1.0 - in_range : 0.0;  // escape/tail mass

    const std::vector<uint32_t> freq = quantize_pmf(pmf, QuantizedCdf::kTotal);
    std::vector<uint32_t> cum(nsym + 2, 0);
    for (size_t i = 0; i <= nsym; ++i) cum[i + 1] = cum[i] + freq[i];
    cdf.cum[c] = std::move(cum);
  }
  return cdf;
}

}  // namespace modcodec
