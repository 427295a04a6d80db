#include "modcodec/graph.hpp"

namespace modcodec {

void Graph::backward(const Tensor& loss) {
  if (!recording_) {
    throw ConfigError("backward() on a non-recording graph");
  }
  if (consumed_) {
    throw ConfigError("backward() called twice without reset()");
  }
  if (!loss.defined() || loss.numel() != 1) {
    throw ConfigError("backward() requires a scalar loss");
  }
  if (!loss.requires_grad()) {
    throw ConfigError("loss does not require gradient; nothing to propagate");
  }
  consumed_ = true;
  Tensor seed = loss;  // aliasing handle; grad lives on shared state
  seed.ensure_grad();
  seed.grad_mut()[0] = 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

}  // namespace modcodec
