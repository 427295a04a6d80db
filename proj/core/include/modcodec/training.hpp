#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "modcodec/checkpoint.hpp"
#include "modcodec/codec.hpp"
#include "modcodec/optim.hpp"

namespace modcodec {

struct RdLossConfig {
  enum class Metric { mse, msssim };

  double lambda = 0.01;
  Metric metric = Metric::mse;
  double pixel_scale = 255.0;

  void validate() const;
};

struct RdLossResult {
  Tensor loss;        // scalar: lambda * scaled distortion + bpp
  Tensor bpp;         // scalar: rate_bits / pixels
  Tensor distortion;  // scalar: MSE in [0,1] units, or 1 - MS-SSIM
};

// Distortion scaling: images live in [0,1], MSE is multiplied by
// lambda * pixel_scale^2 so the usual lambda magnitudes apply unchanged.
RdLossResult rd_loss(Graph& g, const Tensor& x, const Tensor& x_hat,
                     const Tensor& y_noisy, const FactorizedPrior& prior,
                     const RdLossConfig& cfg);

struct TrainConfig {
  uint32_t batch_size = 16;
  uint32_t epochs = 100;
  double lr = 1e-4;
  uint32_t lr_drop_epoch = 64;
  double lr_drop_factor = 0.5;
  double clip_threshold = 1.0;
  uint32_t crop = 256;
  uint64_t seed = 0;
  uint32_t checkpoint_interval = 0;  // epochs between checkpoint writes, 0 = end only
  uint64_t max_steps = 0;            // stop after this many steps, 0 = no cap
  std::string resume_from;           // checkpoint to continue from

  void validate(const NetworkConfig& net) const;
};

struct DatasetSpec {
  std::string directory;
  uint64_t shuffle_seed = 0;
};

// Loads every .ppm under a directory (sorted by name) and serves seed-derived
// random crops. Every random choice is a pure function of
// (seed, epoch, step), so runs are reproducible and resumable.
class PatchDataset {
 public:
  PatchDataset(const std::string& directory, uint32_t crop);

  size_t size() const { return images_.size(); }
  size_t steps_per_epoch(uint32_t batch_size) const;
  Tensor batch(uint64_t seed, uint64_t epoch, uint64_t step,
               uint32_t batch_size) const;

 private:
  std::vector<Tensor> images_;
  uint32_t crop_;
};

struct StepStats {
  double loss = 0.0;
  double bpp = 0.0;
  double mse = 0.0;
  double distortion = 0.0;
  double psnr = 0.0;
  double grad_norm = 0.0;
};

// forward -> noise -> rate -> synthesis -> loss -> backward -> clip -> adam
StepStats train_step(CodecModel& model, const Tensor& batch, AdamState& adam,
                     const RdLossConfig& cfg, double lr, double clip_threshold,
                     uint64_t noise_seed);

double lr_schedule(uint32_t epoch, const TrainConfig& cfg);

struct TrainOutput {
  std::string checkpoint_path;
  std::string metrics_path;
  uint64_t steps = 0;
  double first_loss = 0.0;
  double final_loss = 0.0;
};

// Writes <out_prefix>.ckpt and <out_prefix>_metrics.csv
// (CSV schema: step,epoch,lr,loss,bpp,mse,psnr, one row per step).
TrainOutput train_loop(const TrainConfig& cfg, const NetworkConfig& net,
                       const RdLossConfig& rd, const DatasetSpec& data,
                       const std::string& out_prefix);

}  // namespace modcodec
