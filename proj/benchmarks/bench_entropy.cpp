#include <benchmark/benchmark.h>

#include "modcodec/range_coder.hpp"

using namespace modcodec;

namespace {

struct CoderFixture {
  FactorizedPrior prior;
  QuantizedCdf cdf;
  Symbols symbols;

  explicit CoderFixture(size_t channels, size_t extent)
      : prior(FactorizedPrior::make(channels)) {
    Rng rng(9);
    for (double& v : prior.log_scale.values()) v = rng.uniform(0.0, 1.5);
    cdf = build_cdf_table(prior);
    symbols.shape = Shape{1, channels, extent, extent};
    for (size_t i = 0; i < symbols.shape.numel(); ++i) {
      symbols.values.push_back(static_cast<int32_t>(rng.uniform_index(41)) - 20);
    }
  }
};

void BM_RangeEncode(benchmark::State& state) {
  CoderFixture fx(48, static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    std::vector<uint8_t> payload = range_encode(fx.symbols, fx.cdf);
    benchmark::DoNotOptimize(payload.data());
  }
  state.SetItemsProcessed(state.iterations() * fx.symbols.values.size());
}

void BM_RangeRoundTrip(benchmark::State& state) {
  CoderFixture fx(48, static_cast<size_t>(state.range(0)));
  const std::vector<uint8_t> payload = range_encode(fx.symbols, fx.cdf);
  for (auto _ : state) {
    Symbols back = range_decode(payload, fx.cdf, fx.symbols.shape);
    benchmark::DoNotOptimize(back.values.data());
  }
  state.SetItemsProcessed(state.iterations() * fx.symbols.values.size());
}

void BM_BuildCdf(benchmark::State& state) {
  FactorizedPrior prior = FactorizedPrior::make(static_cast<size_t>(state.range(0)));
  Rng rng(5);
  for (double& v : prior.log_scale.values()) v = rng.uniform(-0.5, 1.5);
  for (auto _ : state) {
    QuantizedCdf cdf = build_cdf_table(prior);
    benchmark::DoNotOptimize(cdf.cum.data());
  }
}

}  // namespace

BENCHMARK(BM_RangeEncode)->Arg(8)->Arg(16);
BENCHMARK(BM_RangeRoundTrip)->Arg(8)->Arg(16);
BENCHMARK(BM_BuildCdf)->Arg(48)->Arg(192);
