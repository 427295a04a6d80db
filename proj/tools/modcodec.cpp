// modcodec: learned image codec with pluggable modulation transforms.
//
// modcodec <train|encode|decode|eval|bdrate|energy|plot>
//          [--config PATH] [--seed N] [--lambda X] [--nonlinearity KIND]
//          [--out PATH] INPUTS...
//
// Exit codes: 0 success, 2 configuration error, 3 data/format error,
// 4 numeric failure.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "modcodec/bitstream.hpp"
#include "modcodec/config.hpp"
#include "modcodec/image_io.hpp"
#include "modcodec/metrics.hpp"
#include "modcodec/plot.hpp"
#include "modcodec/training.hpp"

namespace fs = std::filesystem;
using namespace modcodec;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  uint64_t seed = 0;
  bool seed_set = false;
  double lambda = 0.0;
  bool lambda_set = false;
  std::string nonlinearity;
  std::vector<std::string> overrides;  // KEY=VALUE
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--out", flags.out_path, "output path");
  cmd->add_option("--seed", flags.seed, "run seed")
      ->each([&](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--lambda", flags.lambda, "rate-distortion tradeoff")
      ->each([&](const std::string&) { flags.lambda_set = true; });
  cmd->add_option("--nonlinearity", flags.nonlinearity,
                  "relu|gdn|sa|tam|tpm|tfm|tjm|restsm");
  cmd->add_option("--set", flags.overrides,
                  "extra KEY=VALUE overrides (repeatable)");
}

void resolve_configs(const CommonFlags& flags, NetworkConfig& net,
                     TrainConfig& train, RdLossConfig& rd) {
  KeyValueConfig kv;
  if (!flags.config_path.empty()) {
    kv = KeyValueConfig::from_file(flags.config_path);
  }
  for (const std::string& kvpair : flags.overrides) {
    const size_t eq = kvpair.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects KEY=VALUE, got \"" + kvpair + "\"");
    }
    kv.set(kvpair.substr(0, eq), kvpair.substr(eq + 1));
  }
  if (flags.seed_set) kv.set("seed", std::to_string(flags.seed));
  if (flags.lambda_set) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", flags.lambda);
    kv.set("lambda", buf);
  }
  if (!flags.nonlinearity.empty()) kv.set("nonlinearity", flags.nonlinearity);
  kv.apply(net, train, rd);
}

struct LoadedModel {
  CodecModel model;
  uint64_t checksum = 0;
};

LoadedModel load_model(const std::string& checkpoint_path) {
  LoadedModel m;
  m.model = model_from_checkpoint(load_checkpoint(checkpoint_path));
  m.checksum = file_checksum(checkpoint_path);
  return m;
}

int cmd_train(const CommonFlags& flags, const std::string& dataset_dir) {
  NetworkConfig net;
  TrainConfig train;
  RdLossConfig rd;
  resolve_configs(flags, net, train, rd);
  const std::string prefix =
      flags.out_path.empty() ? "modcodec_run" : flags.out_path;

  const std::string resolved = KeyValueConfig::resolved_dump(net, train, rd);
  std::cout << "resolved config:\n" << resolved;
  {
    std::ofstream cfg_log(prefix + "_config.txt");
    cfg_log << resolved;
  }

  DatasetSpec data{dataset_dir, train.seed};
  TrainOutput out = train_loop(train, net, rd, data, prefix);
  std::cout << "steps: " << out.steps << "\n"
            << "final loss: " << out.final_loss << "\n"
            << "checkpoint: " << out.checkpoint_path << "\n"
            << "metrics: " << out.metrics_path << "\n";
  return 0;
}

int cmd_encode(const CommonFlags& flags, const std::string& checkpoint_path,
               const std::string& image_path) {
  if (flags.out_path.empty()) throw ConfigError("encode requires --out");
  LoadedModel lm = load_model(checkpoint_path);
  Tensor image = read_ppm(image_path);
  EncodeResult result = encode_image(lm.model, lm.checksum, image);
  write_bitstream(flags.out_path, result.bitstream);
  std::printf("payload bytes: %zu\n", result.bitstream.payload_bytes());
  std::printf("estimated bits: %.1f\n", result.estimated_bits);
  std::printf("bpp: %.6f\n", result.bpp);
  return 0;
}

int cmd_decode(const CommonFlags& flags, const std::string& checkpoint_path,
               const std::string& bitstream_path) {
  if (flags.out_path.empty()) throw ConfigError("decode requires --out");
  LoadedModel lm = load_model(checkpoint_path);
  Bitstream bs = read_bitstream(bitstream_path);
  if (bs.header.model_checksum != lm.checksum) {
    throw DataError("bitstream model checksum does not match the checkpoint");
  }
  Tensor recon = decode_image(lm.model, bs);
  write_ppm(flags.out_path, recon);
  std::printf("decoded %ux%u image to %s\n", bs.header.orig_width,
              bs.header.orig_height, flags.out_path.c_str());
  return 0;
}

// Quantize a reconstruction to 8-bit levels, the same grid write_ppm uses.
Tensor to_8bit_levels(const Tensor& x) {
  Tensor out = x.clone();
  for (double& v : out.values()) {
    double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    v = std::round(c * 255.0) / 255.0;
  }
  return out;
}

int cmd_eval(const CommonFlags& flags,
             const std::vector<std::string>& checkpoints,
             const std::string& image_dir) {
  if (flags.out_path.empty()) throw ConfigError("eval requires --out");
  std::vector<std::string> images;
  for (const auto& entry : fs::directory_iterator(image_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      images.push_back(entry.path().string());
    }
  }
  std::sort(images.begin(), images.end());
  if (images.empty()) throw DataError(image_dir + ": no .ppm images");

  RdCurve curve;
  bool warned_scales = false;
  for (const std::string& ckpt : checkpoints) {
    LoadedModel lm = load_model(ckpt);
    double bpp = 0.0, quality = 0.0, similarity = 0.0;
    for (const std::string& path : images) {
      Tensor image = read_ppm(path);
      EncodeResult enc = encode_image(lm.model, lm.checksum, image);
      Tensor recon =
          to_8bit_levels(reconstruct_from_latent(lm.model, enc.latent,
                                                 image.shape().height,
                                                 image.shape().width));
      bpp += enc.bpp;
      quality += psnr(image, recon, 1.0);
      MsssimResult ms = msssim_ex(image, recon);
      similarity += ms.value;
      if (ms.scales_used < 5 && !warned_scales) {
        std::fprintf(stderr,
                     "note: extents below 176, MS-SSIM reduced to %d scales\n",
                     ms.scales_used);
        warned_scales = true;
      }
    }
    const double n = static_cast<double>(images.size());
    curve.points.push_back({bpp / n, quality / n, similarity / n});
    std::printf("%s: bpp %.4f psnr %.3f msssim %.5f\n", ckpt.c_str(), bpp / n,
                quality / n, similarity / n);
  }
  std::sort(curve.points.begin(), curve.points.end(),
            [](const RdPoint& a, const RdPoint& b) { return a.bpp < b.bpp; });
  write_rd_csv(flags.out_path, curve);
  return 0;
}

int cmd_bdrate(const std::string& anchor_path, const std::string& test_path,
               const std::string& metric) {
  QualityMetric q = QualityMetric::psnr;
  if (metric == "msssim") {
    q = QualityMetric::msssim;
  } else if (metric != "psnr") {
    throw ConfigError("--metric must be psnr or msssim");
  }
  const double result =
      bd_rate(read_rd_csv(anchor_path), read_rd_csv(test_path), q);
  std::printf("BD-rate (%s): %.2f%%\n", metric.c_str(), result);
  return 0;
}

int cmd_energy(const CommonFlags& flags, const std::string& checkpoint_path,
               const std::string& image_path, int stage) {
  if (flags.out_path.empty()) throw ConfigError("energy requires --out");
  LoadedModel lm = load_model(checkpoint_path);
  Tensor image = read_ppm(image_path);
  PadResult padded =
      pad_to_factor(image, lm.model.config.downsample_factor());
  if (stage < 0) stage = static_cast<int>(lm.model.config.stages);
  Graph g = Graph::inference();
  Tensor features = analysis_stage_features(g, lm.model, padded.padded,
                                            static_cast<size_t>(stage));
  const std::vector<double> ratios = channel_energy_ratio(features);

  std::ofstream out(flags.out_path);
  if (!out) throw DataError("cannot write energy CSV: " + flags.out_path);
  out << "channel,energy_ratio\n";
  char row[64];
  size_t peak_channel = 0;
  for (size_t c = 0; c < ratios.size(); ++c) {
    std::snprintf(row, sizeof(row), "%zu,%.10g\n", c, ratios[c]);
    out << row;
    if (ratios[c] > ratios[peak_channel]) peak_channel = c;
  }
  std::printf("stage %d: %zu channels, max energy ratio %.4f (channel %zu)\n",
              stage, ratios.size(), ratios[peak_channel], peak_channel);
  return 0;
}

int cmd_plot(const CommonFlags& flags, const std::vector<std::string>& csvs,
             const std::string& metric) {
  if (flags.out_path.empty()) throw ConfigError("plot requires --out");
  QualityMetric q = QualityMetric::psnr;
  if (metric == "msssim") {
    q = QualityMetric::msssim;
  } else if (metric != "psnr") {
    throw ConfigError("--metric must be psnr or msssim");
  }
  std::vector<PlotCurve> curves;
  for (const std::string& path : csvs) {
    curves.push_back({fs::path(path).stem().string(), read_rd_csv(path)});
  }
  write_rd_plot_svg(flags.out_path, curves, q);
  std::printf("wrote %s\n", flags.out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned image codec with modulation-based transforms"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::vector<std::string> inputs;
  int stage = -1;
  std::string metric = "psnr";

  CLI::App* train = app.add_subcommand("train", "train a model on a PPM corpus");
  add_common(train, flags);
  train->add_option("dataset", inputs, "dataset directory")->required();

  CLI::App* encode = app.add_subcommand("encode", "compress an image");
  add_common(encode, flags);
  encode->add_option("inputs", inputs, "CHECKPOINT IMAGE.ppm")->required();

  CLI::App* decode = app.add_subcommand("decode", "decompress a bitstream");
  add_common(decode, flags);
  decode->add_option("inputs", inputs, "CHECKPOINT BITSTREAM")->required();

  CLI::App* eval = app.add_subcommand("eval", "rate-distortion over a corpus");
  add_common(eval, flags);
  eval->add_option("inputs", inputs, "CHECKPOINT... IMAGE_DIR")->required();

  CLI::App* bdrate = app.add_subcommand("bdrate", "compare two RD curves");
  add_common(bdrate, flags);
  bdrate->add_option("--metric", metric, "psnr|msssim");
  bdrate->add_option("inputs", inputs, "ANCHOR.csv TEST.csv")->required();

  CLI::App* energy = app.add_subcommand("energy", "channel energy ratios");
  add_common(energy, flags);
  energy->add_option("--stage", stage, "analysis stage (default: latent)");
  energy->add_option("inputs", inputs, "CHECKPOINT IMAGE.ppm")->required();

  CLI::App* plot = app.add_subcommand("plot", "render RD curves as SVG");
  add_common(plot, flags);
  plot->add_option("--metric", metric, "psnr|msssim");
  plot->add_option("inputs", inputs, "CURVE.csv...")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train->parsed()) {
      if (inputs.size() != 1) {
        throw ConfigError("train expects one dataset directory");
      }
      return cmd_train(flags, inputs[0]);
    }
    if (encode->parsed()) {
      if (inputs.size() != 2) {
        throw ConfigError("encode expects CHECKPOINT IMAGE");
      }
      return cmd_encode(flags, inputs[0], inputs[1]);
    }
    if (decode->parsed()) {
      if (inputs.size() != 2) {
        throw ConfigError("decode expects CHECKPOINT BITSTREAM");
      }
      return cmd_decode(flags, inputs[0], inputs[1]);
    }
    if (eval->parsed()) {
      if (inputs.size() < 2) {
        throw ConfigError("eval expects CHECKPOINT... IMAGE_DIR");
      }
      std::vector<std::string> ckpts(inputs.begin(), inputs.end() - 1);
      return cmd_eval(flags, ckpts, inputs.back());
    }
    if (bdrate->parsed()) {
      if (inputs.size() != 2) {
        throw ConfigError("bdrate expects ANCHOR.csv TEST.csv");
      }
      return cmd_bdrate(inputs[0], inputs[1], metric);
    }
    if (energy->parsed()) {
      if (inputs.size() != 2) {
        throw ConfigError("energy expects CHECKPOINT IMAGE");
      }
      return cmd_energy(flags, inputs[0], inputs[1], stage);
    }
    if (plot->parsed()) {
      return cmd_plot(flags, inputs, metric);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
