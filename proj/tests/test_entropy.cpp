#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "modcodec/bitstream.hpp"
#include "modcodec/checkpoint.hpp"
#include "modcodec/entropy.hpp"
#include "modcodec/range_coder.hpp"
#include "support/test_support.hpp"

using namespace modcodec;
using testsup::random_tensor;
using testsup::rel_err;

namespace {

double logistic_cdf_ref(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Inverse-CDF sampling from the per-channel logistic prior.
Tensor sample_from_prior(const FactorizedPrior& prior, const Shape& shape,
                         Rng& rng) {
  Tensor y = Tensor::zeros(shape);
  const size_t plane = shape.height * shape.width;
  for (size_t b = 0; b < shape.batch; ++b) {
    for (size_t c = 0; c < shape.channels; ++c) {
      const double mu = prior.loc.values()[c];
      const double s =
          std::max(std::exp(prior.log_scale.values()[c]), 1e-4);
      for (size_t i = 0; i < plane; ++i) {
        const double u = std::min(std::max(rng.uniform(), 1e-12), 1.0 - 1e-12);
        y.values()[(b * shape.channels + c) * plane + i] =
            mu + s * std::log(u / (1.0 - u));
      }
    }
  }
  return y;
}

}  // namespace

TEST_CASE("uniform noise: support, mean, determinism") {
  Graph g = Graph::inference();
  Tensor y = Tensor::full(Shape{1, 4, 50, 50}, 3.0);
  Tensor noisy = add_uniform_noise(g, y, 42);
  for (size_t i = 0; i < y.numel(); ++i) {
    CHECK(std::fabs(noisy.values()[i] - 3.0) <= 0.5);
  }

  Tensor big = Tensor::zeros(Shape{1, 1, 1000, 1000});
  Tensor n = add_uniform_noise(g, big, 7);
  double mean = 0.0;
  for (double v : n.values()) mean += v;
  mean /= static_cast<double>(n.numel());
  CHECK(std::fabs(mean) < 0.002);

  Tensor again = add_uniform_noise(g, y, 42);
  Tensor other = add_uniform_noise(g, y, 43);
  bool same = true, diff = false;
  for (size_t i = 0; i < y.numel(); ++i) {
    same &= noisy.values()[i] == again.values()[i];
    diff |= noisy.values()[i] != other.values()[i];
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("rounding is half away from zero") {
  Tensor y = Tensor::from_vector(Shape{1, 1, 1, 6},
                                 {0.4, -1.6, 0.5, -0.5, 2.5, -0.49});
  Symbols s = quantize_round(y);
  CHECK(s.values == std::vector<int32_t>{0, -2, 1, -1, 3, 0});
}

TEST_CASE("noise and rounding stay within half a step") {
  Graph g = Graph::inference();
  Rng rng(5);
  Tensor y = random_tensor(Shape{1, 3, 8, 8}, rng, -10.0, 10.0);
  Tensor noisy = add_uniform_noise(g, y, 11);
  Symbols rounded = quantize_round(y);
  for (size_t i = 0; i < y.numel(); ++i) {
    CHECK(std::fabs(noisy.values()[i] - y.values()[i]) <= 0.5);
    CHECK(std::fabs(rounded.values[i] - y.values()[i]) <= 0.5);
  }
}

TEST_CASE("likelihood closed form, symmetry, telescoping sum") {
  Graph g = Graph::inference();
  FactorizedPrior prior = FactorizedPrior::make(1);

  SUBCASE("standard logistic at zero") {
    Tensor v = Tensor::zeros(Shape{1, 1, 1, 1});
    const double p = likelihood(g, v, prior).item();
    const double expected = logistic_cdf_ref(0.5) - logistic_cdf_ref(-0.5);
    CHECK(rel_err(p, expected) < 1e-12);
    CHECK(std::fabs(p - 0.24492) < 1e-5);
  }
  SUBCASE("symmetric around the location") {
    for (double v : {0.5, 1.0, 2.5, 7.0}) {
      Tensor plus = Tensor::full(Shape{1, 1, 1, 1}, v);
      Tensor minus = Tensor::full(Shape{1, 1, 1, 1}, -v);
      CHECK(rel_err(likelihood(g, plus, prior).item(),
                    likelihood(g, minus, prior).item()) < 1e-12);
    }
  }
  SUBCASE("bin masses telescope to one before flooring") {
    const size_t count = 2001;
    Tensor v = Tensor::zeros(Shape{1, 1, 1, count});
    for (size_t i = 0; i < count; ++i) {
      v.values()[i] = static_cast<double>(i) - 1000.0;
    }
    Tensor p = likelihood(g, v, prior, /*apply_floor=*/false);
    double sum = 0.0;
    for (double pv : p.values()) sum += pv;
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("rate in bits") {
  Graph g = Graph::inference();
  FactorizedPrior prior = FactorizedPrior::make(1);

  SUBCASE("all-zero latent of 100 elements") {
    Tensor v = Tensor::zeros(Shape{1, 1, 10, 10});
    const double bits = rate_bits(g, v, prior).item();
    const double p0 = logistic_cdf_ref(0.5) - logistic_cdf_ref(-0.5);
    CHECK(rel_err(bits, -100.0 * std::log2(p0)) < 1e-12);
    CHECK(std::fabs(bits - 203.0) < 0.05);
  }
  SUBCASE("the floor caps any element at 20 bits") {
    Tensor v = Tensor::full(Shape{1, 1, 1, 4}, 1e5);
    const double bits = rate_bits(g, v, prior).item();
    // the far tail sits exactly on the 2^-20 floor
    CHECK(std::fabs(bits - 4 * 20.0) < 1e-6);
  }
  SUBCASE("uniform half-probability bins cost one bit each") {
    // rate = sum(-log2 p); with p = 0.5 per element the total is the count
    Tensor p = Tensor::full(Shape{1, 1, 3, 4}, 0.5);
    double bits = 0.0;
    for (double pv : p.values()) bits += -std::log2(pv);
    CHECK(bits == 12.0);
  }
}

TEST_CASE("pmf quantization") {
  SUBCASE("two equiprobable bins") {
    const std::vector<double> pmf = {0.5, 0.5};
    const std::vector<uint32_t> f = quantize_pmf(pmf);
    CHECK(f == std::vector<uint32_t>{32768, 32768});
  }
  SUBCASE("totals and minimums hold for random pmfs") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> pmf(1 + rng.uniform_index(300));
      for (double& p : pmf) p = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
      const std::vector<uint32_t> f = quantize_pmf(pmf);
      uint64_t total = 0;
      for (uint32_t v : f) {
        CHECK(v >= 1);
        total += v;
      }
      CHECK(total == QuantizedCdf::kTotal);
    }
  }
}

TEST_CASE("cdf tables are deterministic across checkpoint reload") {
  testsup::TempDir tmp("cdf");
  NetworkConfig cfg;
  cfg.stages = 1;
  cfg.hidden_channels = 4;
  cfg.latent_channels = 6;
  cfg.kernel = 3;
  CodecModel model = CodecModel::init(cfg, 21);
  Rng rng(9);
  for (double& v : model.prior.loc.values()) v = rng.uniform(-2.0, 2.0);
  for (double& v : model.prior.log_scale.values()) v = rng.uniform(-1.0, 1.5);

  const QuantizedCdf before = build_cdf_table(model.prior);
  const std::string path = tmp.path() + "/m.ckpt";
  save_checkpoint(path, checkpoint_from_model(model));
  CodecModel reloaded = model_from_checkpoint(load_checkpoint(path));
  const QuantizedCdf after = build_cdf_table(reloaded.prior);

  REQUIRE(before.cum.size() == after.cum.size());
  for (size_t c = 0; c < before.cum.size(); ++c) {
    CHECK(before.cum[c] == after.cum[c]);
    CHECK(before.cum[c].front() == 0);
    CHECK(before.cum[c].back() == QuantizedCdf::kTotal);
    for (size_t i = 0; i + 1 < before.cum[c].size(); ++i) {
      CHECK(before.cum[c][i] < before.cum[c][i + 1]);
    }
  }
}

TEST_CASE("range coder round trips") {
  Rng rng(12);
  FactorizedPrior prior = FactorizedPrior::make(3);
  for (double& v : prior.log_scale.values()) v = rng.uniform(-0.5, 1.5);
  const QuantizedCdf cdf = build_cdf_table(prior);

  SUBCASE("random in-range symbols") {
    for (int trial = 0; trial < 10; ++trial) {
      Symbols s;
      s.shape = Shape{1, 3, 5, 7};
      for (size_t i = 0; i < s.shape.numel(); ++i) {
        s.values.push_back(static_cast<int32_t>(rng.uniform_index(128)) - 64);
      }
      const std::vector<uint8_t> payload = range_encode(s, cdf);
      const Symbols back = range_decode(payload, cdf, s.shape);
      CHECK(back.values == s.values);
    }
  }
  SUBCASE("extreme escape values survive") {
    Symbols s;
    s.shape = Shape{1, 3, 2, 2};
    s.values = {0,      1000000, -1000000, 64,  -65, 12,
                -40000, 2,       -3,       700, 0,   63};
    const std::vector<uint8_t> payload = range_encode(s, cdf);
    const Symbols back = range_decode(payload, cdf, s.shape);
    CHECK(back.values == s.values);
  }
  SUBCASE("truncation raises a decode error") {
    Symbols s;
    s.shape = Shape{1, 3, 4, 4};
    for (size_t i = 0; i < s.shape.numel(); ++i) {
      s.values.push_back(static_cast<int32_t>(rng.uniform_index(40)) - 20);
    }
    std::vector<uint8_t> payload = range_encode(s, cdf);
    payload.resize(payload.size() / 2);
    CHECK_THROWS_AS(range_decode(payload, cdf, s.shape), DataError);
  }
}

TEST_CASE("uniform 256-symbol source codes near 8 bits per symbol") {
  // one channel, a uniform pmf over 256 symbols plus escape
  QuantizedCdf cdf;
  cdf.min_sym = -128;
  cdf.max_sym = 127;
  std::vector<double> pmf(257, 1.0 / 256.0);
  pmf[256] = 1e-9;
  const std::vector<uint32_t> freq = quantize_pmf(pmf);
  std::vector<uint32_t> cum(freq.size() + 1, 0);
  for (size_t i = 0; i < freq.size(); ++i) cum[i + 1] = cum[i] + freq[i];
  cdf.cum = {cum};

  Rng rng(77);
  Symbols s;
  s.shape = Shape{1, 1, 20, 50};
  for (int i = 0; i < 1000; ++i) {
    s.values.push_back(static_cast<int32_t>(rng.uniform_index(256)) - 128);
  }
  const std::vector<uint8_t> payload = range_encode(s, cdf);
  CHECK(payload.size() <= 1010 + 16);
  CHECK(payload.size() >= 990);
}

TEST_CASE("payload length against the rate estimate and the entropy bound") {
  Rng rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    FactorizedPrior prior = FactorizedPrior::make(4);
    for (double& v : prior.loc.values()) v = rng.uniform(-1.0, 1.0);
    for (double& v : prior.log_scale.values()) v = rng.uniform(0.0, 2.0);

    const Shape shape{1, 4, 16, 16};
    Tensor y = sample_from_prior(prior, shape, rng);
    Symbols s = quantize_round(y);

    Graph g = Graph::inference();
    const double estimate = rate_bits(g, symbols_to_tensor(s), prior).item();
    const QuantizedCdf cdf = build_cdf_table(prior);
    const std::vector<uint8_t> payload = range_encode(s, cdf);

    CHECK(static_cast<double>(payload.size()) <= estimate / 8.0 + 32.0);

    // per-channel empirical entropy lower-bounds any decodable payload
    const size_t plane = shape.height * shape.width;
    double entropy_bits = 0.0;
    for (size_t c = 0; c < shape.channels; ++c) {
      std::map<int32_t, size_t> counts;
      for (size_t i = 0; i < plane; ++i) {
        ++counts[s.values[c * plane + i]];
      }
      for (const auto& [sym, count] : counts) {
        const double p = static_cast<double>(count) / plane;
        entropy_bits += -static_cast<double>(count) * std::log2(p);
      }
    }
    CHECK(static_cast<double>(payload.size()) * 8.0 >= entropy_bits);
  }
}

TEST_CASE("bitstream container and image encode/decode round trip") {
  testsup::TempDir tmp("bs");
  NetworkConfig cfg;
  cfg.stages = 1;
  cfg.hidden_channels = 4;
  cfg.latent_channels = 5;
  cfg.kernel = 3;
  CodecModel model = CodecModel::init(cfg, 50);

  Tensor image = testsup::synth_image(4, 37, 41);  // forces padding
  EncodeResult enc = encode_image(model, /*model_checksum=*/0xABCD, image);
  CHECK(enc.bitstream.header.orig_width == 41);
  CHECK(enc.bitstream.header.padded_width % 4 == 0);
  CHECK(enc.bpp > 0.0);

  const std::string path = tmp.path() + "/img.tsmb";
  write_bitstream(path, enc.bitstream);
  Bitstream reread = read_bitstream(path);
  CHECK(reread.header.model_checksum == 0xABCD);
  CHECK(reread.payloads == enc.bitstream.payloads);

  Tensor direct = reconstruct_from_latent(model, enc.latent, 37, 41);
  Tensor decoded = decode_image(model, reread);
  REQUIRE(decoded.shape() == direct.shape());
  for (size_t i = 0; i < decoded.numel(); ++i) {
    CHECK(decoded.values()[i] == direct.values()[i]);
  }
}
