#include "modcodec/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "modcodec/image_io.hpp"
#include "modcodec/metrics.hpp"

namespace modcodec {

void RdLossConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(pixel_scale > 0.0)) throw ConfigError("pixel_scale must be > 0");
}

void TrainConfig::validate(const NetworkConfig& net) const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(lr_drop_factor > 0.0)) throw ConfigError("lr_drop_factor must be > 0");
  if (!(clip_threshold > 0.0)) throw ConfigError("clip_threshold must be > 0");
  if (crop < 1) throw ConfigError("crop must be >= 1");
  if (crop % net.downsample_factor() != 0) {
    throw ConfigError("crop " + std::to_string(crop) +
                      " must be divisible by the downsampling factor " +
                      std::to_string(net.downsample_factor()));
  }
}

RdLossResult rd_loss(Graph& g, const Tensor& x, const Tensor& x_hat,
                     const Tensor& y_noisy, const FactorizedPrior& prior,
                     const RdLossConfig& cfg) {
  cfg.validate();
  if (x.shape() != x_hat.shape()) {
    throw ConfigError("rd_loss: reconstruction shape " + x_hat.shape().str() +
                      " does not match input " + x.shape().str());
  }
  const double pixels = static_cast<double>(x.shape().batch) *
                        static_cast<double>(x.shape().height) *
                        static_cast<double>(x.shape().width);
  RdLossResult out;
  out.bpp = ops::mul_scalar(g, rate_bits(g, y_noisy, prior), 1.0 / pixels);
  if (cfg.metric == RdLossConfig::Metric::mse) {
    out.distortion = ops::mean_all(g, ops::square(g, ops::sub(g, x_hat, x)));
    out.loss = ops::add(
        g,
        ops::mul_scalar(g, out.distortion,
                        cfg.lambda * cfg.pixel_scale * cfg.pixel_scale),
        out.bpp);
  } else {
    Tensor similarity = msssim_autograd(g, x, x_hat);
    out.distortion = ops::add_scalar(g, ops::neg(g, similarity), 1.0);
    out.loss =
        ops::add(g, ops::mul_scalar(g, out.distortion, cfg.lambda), out.bpp);
  }
  return out;
}

PatchDataset::PatchDataset(const std::string& directory, uint32_t crop)
    : crop_(crop) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(directory)) {
    throw ConfigError("dataset directory does not exist: " + directory);
  }
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(directory)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      paths.push_back(entry.path().string());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) {
    throw ConfigError("dataset directory has no .ppm images: " + directory);
  }
  for (const std::string& p : paths) {
    Tensor img = read_ppm(p);
    if (img.shape().height < crop_ || img.shape().width < crop_) {
      throw ConfigError(p + ": image smaller than the crop size " +
                        std::to_string(crop_));
    }
    images_.push_back(std::move(img));
  }
}

size_t PatchDataset::steps_per_epoch(uint32_t batch_size) const {
  return images_.size() / batch_size;
}

Tensor PatchDataset::batch(uint64_t seed, uint64_t epoch, uint64_t step,
                           uint32_t batch_size) const {
  if (batch_size > images_.size()) {
    throw ConfigError("batch size exceeds dataset size");
  }
  // Per-epoch shuffle, then per-step crop offsets, all seed-derived.
  std::vector<size_t> order(images_.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng shuffle_rng(mix_seed(seed, 0x5F0F, epoch));
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);
  }

  Rng crop_rng(mix_seed(mix_seed(seed, 0xC407), mix_seed(epoch, step)));
  Tensor out = Tensor::zeros(Shape{batch_size, 3, crop_, crop_});
  for (uint32_t b = 0; b < batch_size; ++b) {
    const size_t idx = order[(step * batch_size + b) % order.size()];
    const Tensor& img = images_[idx];
    const size_t oy = crop_rng.uniform_index(img.shape().height - crop_ + 1);
    const size_t ox = crop_rng.uniform_index(img.shape().width - crop_ + 1);
    for (size_t c = 0; c < 3; ++c) {
      for (size_t y = 0; y < crop_; ++y) {
        for (size_t x = 0; x < crop_; ++x) {
          out.at(b, c, y, x) = img.at(0, c, oy + y, ox + x);
        }
      }
    }
  }
  return out;
}

StepStats train_step(CodecModel& model, const Tensor& batch, AdamState& adam,
                     const RdLossConfig& cfg, double lr, double clip_threshold,
                     uint64_t noise_seed) {
  const std::vector<Tensor> params = model.parameters();
  for (const Tensor& p : params) {
    Tensor q = p;
    q.zero_grad();
  }

  Graph g;
  Tensor latent = analysis_apply(g, model, batch);
  Tensor noisy = add_uniform_noise(g, latent, noise_seed);
  Tensor x_hat = synthesis_apply(g, model, noisy);
  RdLossResult rd = rd_loss(g, batch, x_hat, noisy, model.prior, cfg);
  g.backward(rd.loss);

  StepStats stats;
  stats.grad_norm = clip_global_norm(params, clip_threshold);
  adam.step(params, lr);

  stats.loss = rd.loss.item();
  stats.bpp = rd.bpp.item();
  stats.distortion = rd.distortion.item();
  {
    Graph eval = Graph::inference();
    stats.mse =
        ops::mean_all(eval, ops::square(eval, ops::sub(eval, x_hat, batch)))
            .item();
  }
  stats.psnr = stats.mse > 0.0 ? 10.0 * std::log10(1.0 / stats.mse)
                               : std::numeric_limits<double>::infinity();
  return stats;
}

double lr_schedule(uint32_t epoch, const TrainConfig& cfg) {
  return epoch < cfg.lr_drop_epoch ? cfg.lr : cfg.lr * cfg.lr_drop_factor;
}

TrainOutput train_loop(const TrainConfig& cfg, const NetworkConfig& net,
                       const RdLossConfig& rd, const DatasetSpec& data,
                       const std::string& out_prefix) {
  net.validate();
  rd.validate();
  cfg.validate(net);

  PatchDataset dataset(data.directory, cfg.crop);
  const size_t steps_per_epoch = dataset.steps_per_epoch(cfg.batch_size);
  if (steps_per_epoch == 0) {
    throw ConfigError("dataset smaller than one batch");
  }

  CodecModel model;
  TrainState state;
  if (!cfg.resume_from.empty()) {
    Checkpoint ckpt = load_checkpoint(cfg.resume_from);
    model = model_from_checkpoint(ckpt);
    if (!train_state_from_checkpoint(ckpt, model, state)) {
      throw DataError(cfg.resume_from +
                      ": checkpoint has no optimizer state to resume from");
    }
  } else {
    model = CodecModel::init(net, mix_seed(cfg.seed, 0x1417));
    state.adam = AdamState(model.parameters());
  }

  TrainOutput out;
  out.checkpoint_path = out_prefix + ".ckpt";
  out.metrics_path = out_prefix + "_metrics.csv";

  std::ofstream csv(out.metrics_path);
  if (!csv) throw DataError("cannot write metrics CSV: " + out.metrics_path);
  csv << "step,epoch,lr,loss,bpp,mse,psnr\n";
  char row[256];

  const uint64_t shuffle_seed = data.shuffle_seed ? data.shuffle_seed : cfg.seed;
  uint64_t end_step = static_cast<uint64_t>(cfg.epochs) * steps_per_epoch;
  if (cfg.max_steps && cfg.max_steps < end_step) end_step = cfg.max_steps;

  bool first_recorded = state.global_step > 0;
  while (static_cast<uint64_t>(state.global_step) < end_step) {
    // The position in the run is a pure function of the step counter, so a
    // resumed run replays the remainder of the original trajectory.
    const uint64_t gs = static_cast<uint64_t>(state.global_step);
    const uint32_t epoch = static_cast<uint32_t>(gs / steps_per_epoch);
    const uint64_t s = gs % steps_per_epoch;
    const double lr = lr_schedule(epoch, cfg);
    Tensor batch = dataset.batch(shuffle_seed, epoch, s, cfg.batch_size);
    StepStats stats;
    try {
      stats = train_step(model, batch, state.adam, rd, lr, cfg.clip_threshold,
                         mix_seed(cfg.seed, 0x4015E, gs));
    } catch (const NumericError& e) {
      throw NumericError("training aborted at step " + std::to_string(gs) +
                         ": " + e.what());
    }
    ++state.global_step;
    state.epoch = state.global_step / static_cast<int64_t>(steps_per_epoch);
    std::snprintf(row, sizeof(row), "%lld,%u,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  static_cast<long long>(state.global_step), epoch, lr,
                  stats.loss, stats.bpp, stats.mse, stats.psnr);
    csv << row;
    if (!first_recorded) {
      out.first_loss = stats.loss;
      first_recorded = true;
    }
    out.final_loss = stats.loss;
    if (cfg.checkpoint_interval && s + 1 == steps_per_epoch &&
        (epoch + 1) % cfg.checkpoint_interval == 0) {
      save_checkpoint(out.checkpoint_path, checkpoint_from_model(model, &state));
    }
  }
  save_checkpoint(out.checkpoint_path, checkpoint_from_model(model, &state));
  out.steps = static_cast<uint64_t>(state.global_step);
  csv.close();
  if (!csv) throw DataError("failed writing metrics CSV: " + out.metrics_path);
  return out;
}

}  // namespace modcodec
