#include <benchmark/benchmark.h>

#include "modcodec/optim.hpp"
#include "modcodec/training.hpp"

using namespace modcodec;

namespace {

CodecModel desk_model(TransformKind kind) {
  NetworkConfig net;
  net.nonlinearity = kind;
  net.stages = 3;
  net.hidden_channels = 32;
  net.latent_channels = 48;
  return CodecModel::init(net, 7);
}

Tensor image_batch(size_t batch, size_t extent) {
  Rng rng(3);
  Tensor x = Tensor::zeros(Shape{batch, 3, extent, extent});
  for (double& v : x.values()) v = rng.uniform(0.0, 1.0);
  return x;
}

void BM_AnalysisForward(benchmark::State& state, TransformKind kind) {
  CodecModel model = desk_model(kind);
  Tensor image = image_batch(1, static_cast<size_t>(state.range(0)));
  for (auto _ : state) {
    Graph g = Graph::inference();
    Tensor latent = analysis_apply(g, model, image);
    benchmark::DoNotOptimize(latent.values().data());
  }
  state.SetItemsProcessed(state.iterations() * image.numel());
}

void BM_TrainStep(benchmark::State& state, TransformKind kind) {
  CodecModel model = desk_model(kind);
  AdamState adam(model.parameters());
  RdLossConfig rd;
  rd.lambda = 0.013;
  Tensor batch = image_batch(4, 64);
  uint64_t step = 0;
  for (auto _ : state) {
    StepStats stats = train_step(model, batch, adam, rd, 1e-4, 1.0, step++);
    benchmark::DoNotOptimize(stats.loss);
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_AnalysisForward, gdn, TransformKind::gdn)
    ->Arg(64)
    ->Arg(256)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_AnalysisForward, tpm, TransformKind::tpm)
    ->Arg(64)
    ->Arg(256)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainStep, gdn, TransformKind::gdn)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainStep, tpm, TransformKind::tpm)
    ->Unit(benchmark::kMillisecond);
