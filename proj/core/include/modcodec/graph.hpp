#pragma once

#include <functional>
#include <vector>

#include "modcodec/tensor.hpp"

namespace modcodec {

// Reverse-mode tape. Operations append themselves in execution order, so the
// tape is already topologically sorted; backward() walks it once in reverse,
// accumulating exactly one gradient contribution per input edge.
//
// Single-owner: one Graph per forward pass, never shared across concurrent
// training steps. A non-recording graph turns every op into plain evaluation.
class Graph {
 public:
  Graph() = default;
  static Graph inference() {
    Graph g;
    g.recording_ = false;
    return g;
  }

  bool recording() const { return recording_; }
  size_t size() const { return tape_.size(); }

  void record(std::function<void()> backward_step) {
    tape_.push_back(std::move(backward_step));
  }

  // Seeds dLoss/dLoss = 1 and propagates through the tape. `loss` must be a
  // scalar recorded on this graph. A second call without reset() is rejected.
  void backward(const Tensor& loss);

  void reset() {
    tape_.clear();
    consumed_ = false;
  }

 private:
  std::vector<std::function<void()>> tape_;
  bool recording_ = true;
  bool consumed_ = false;
};

}  // namespace modcodec
