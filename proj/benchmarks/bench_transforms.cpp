#include <benchmark/benchmark.h>

#include "modcodec/transforms.hpp"

using namespace modcodec;

namespace {

Tensor feature_map(size_t channels, size_t extent) {
  Rng rng(42);
  Tensor x = Tensor::zeros(Shape{1, channels, extent, extent});
  for (double& v : x.values()) v = rng.uniform(-2.0, 2.0);
  return x;
}

void BM_TransformForward(benchmark::State& state, TransformKind kind) {
  const size_t channels = static_cast<size_t>(state.range(0));
  const size_t extent = static_cast<size_t>(state.range(1));
  TransformLayer layer = TransformLayer::make(kind, channels, false, 2);
  Tensor x = feature_map(channels, extent);
  for (auto _ : state) {
    Graph g = Graph::inference();
    Tensor y = layer.forward(g, x);
    benchmark::DoNotOptimize(y.values().data());
  }
  state.SetItemsProcessed(state.iterations() * x.numel());
}

}  // namespace

BENCHMARK_CAPTURE(BM_TransformForward, gdn, TransformKind::gdn)
    ->Args({32, 32})
    ->Args({192, 32});
BENCHMARK_CAPTURE(BM_TransformForward, tpm, TransformKind::tpm)
    ->Args({32, 32})
    ->Args({192, 32});
BENCHMARK_CAPTURE(BM_TransformForward, tjm, TransformKind::tjm)
    ->Args({32, 32})
    ->Args({192, 32});
BENCHMARK_CAPTURE(BM_TransformForward, restsm, TransformKind::restsm)
    ->Args({32, 32})
    ->Args({192, 32});
