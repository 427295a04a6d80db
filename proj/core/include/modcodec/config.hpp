#pragma once

#include <map>
#include <string>

#include "modcodec/training.hpp"

namespace modcodec {

// Flat key=value configuration. Every NetworkConfig, TrainConfig and
// RdLossConfig field is addressable; unknown keys are rejected. Flags set
// through set() override file values.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig from_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  // Applies recognized keys onto the three config structs and validates that
  // no unrecognized key remains.
  void apply(NetworkConfig& net, TrainConfig& train, RdLossConfig& rd) const;

  // The fully resolved configuration, one key=value per line, sorted.
  static std::string resolved_dump(const NetworkConfig& net,
                                   const TrainConfig& train,
                                   const RdLossConfig& rd);

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace modcodec
