#pragma once

#include <string>
#include <utility>
#include <vector>

#include "modcodec/codec.hpp"
#include "modcodec/optim.hpp"

namespace modcodec {

// Checkpoint file, little-endian throughout:
//   magic "TSMCKPT1"
//   config: nonlinearity kind (u32 length + bytes), then stages, hidden
//           channels, latent channels, kernel, stride, restsm_depth as u32
//   tensor table: count u32, then per tensor name (u32 length + bytes),
//           dtype tag u8 (0 = f64, 1 = f32), 4 extents u32, raw values
//   trailer: FNV-1a 64 of all preceding bytes
struct Checkpoint {
  NetworkConfig config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt,
                     bool f32_storage = false);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a 64 of a whole file. Binds bitstreams to the checkpoint that
// produced them.
uint64_t file_checksum(const std::string& path);

// Model <-> checkpoint. Optimizer moments and loop counters ride along as
// extra tensors so a resumed run replays the original trajectory.
struct TrainState {
  AdamState adam;
  int64_t global_step = 0;
  int64_t epoch = 0;
};

Checkpoint checkpoint_from_model(const CodecModel& model,
                                 const TrainState* state = nullptr);
CodecModel model_from_checkpoint(const Checkpoint& ckpt);
// Returns false when the checkpoint carries no optimizer state.
bool train_state_from_checkpoint(const Checkpoint& ckpt,
                                 const CodecModel& model, TrainState& out);

}  // namespace modcodec
