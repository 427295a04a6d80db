#include "modcodec/optim.hpp"

#include <cmath>

#include "modcodec/common.hpp"

namespace modcodec {

AdamState::AdamState(const std::vector<Tensor>& params, double beta1,
                     double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor& p : params) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamState::step(const std::vector<Tensor>& params, double lr) {
  if (params.size() != m_.size()) {
    throw ConfigError("adam: parameter list does not match optimizer state");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor p = params[pi];
    if (p.numel() != m_[pi].size()) {
      throw ConfigError("adam: parameter shape does not match moment buffer");
    }
    std::span<const double> grad = p.has_grad()
                                       ? p.grad()
                                       : std::span<const double>{};
    double* values = p.values().data();
    double* m = m_[pi].data();
    double* v = v_[pi].data();
    for (size_t i = 0; i < p.numel(); ++i) {
      const double gi = grad.empty() ? 0.0 : grad[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
    check_finite(p.values(), "adam update");
  }
}

double clip_global_norm(const std::vector<Tensor>& params, double threshold) {
  if (threshold <= 0.0) throw ConfigError("clip threshold must be > 0");
  double sq = 0.0;
  for (const Tensor& p : params) {
    if (!p.has_grad()) continue;
    for (double gi : p.grad()) sq += gi * gi;
  }
  const double norm = std::sqrt(sq);
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (const Tensor& p : params) {
      if (!p.has_grad()) continue;
      Tensor q = p;
      for (double& gi : q.grad_mut()) gi *= scale;
    }
  }
  return norm;
}

}  // namespace modcodec
