#pragma once

#include <cstdint>
#include <vector>

#include "modcodec/tensor.hpp"

namespace modcodec {

// Bias-corrected Adam over a fixed parameter list. Moment buffers are keyed
// by position, so the parameter order must be stable across steps and across
// checkpoint save/load.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(const std::vector<Tensor>& params, double beta1 = 0.9,
                     double beta2 = 0.999, double eps = 1e-8);

  // Applies one update from the gradients currently on `params`.
  void step(const std::vector<Tensor>& params, double lr);

  int64_t step_count() const { return step_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double epsilon() const { return eps_; }

  // Serialization access (checkpoint resume).
  std::vector<std::vector<double>>& first_moments() { return m_; }
  std::vector<std::vector<double>>& second_moments() { return v_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void set_step_count(int64_t t) { step_ = t; }

 private:
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  int64_t step_ = 0;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
};

// If the global L2 norm of all gradients exceeds `threshold`, scales every
// gradient by threshold/norm. Returns the pre-clip norm.
double clip_global_norm(const std::vector<Tensor>& params, double threshold);

}  // namespace modcodec
