#include "modcodec/tensor.hpp"

#include <cmath>
#include <sstream>

namespace modcodec {

std::string Shape::str() const {
  std::ostringstream os;
  os << "(" << batch << "," << channels << "," << height << "," << width << ")";
  return os.str();
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string("non-finite value in ") + what);
    }
  }
}

static std::shared_ptr<detail::TensorState> make_state(const Shape& s,
                                                       bool requires_grad) {
  auto st = std::make_shared<detail::TensorState>();
  st->shape = s;
  st->values.assign(s.numel(), 0.0);
  st->requires_grad = requires_grad;
  return st;
}

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  Tensor t;
  t.state_ = make_state(s, requires_grad);
  return t;
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
  Tensor t = zeros(s, requires_grad);
  for (double& x : t.state_->values) x = v;
  return t;
}

Tensor Tensor::from_vector(const Shape& s, std::vector<double> v,
                           bool requires_grad) {
  if (v.size() != s.numel()) {
    throw ConfigError("tensor data length " + std::to_string(v.size()) +
                      " does not match shape " + s.str());
  }
  Tensor t;
  t.state_ = make_state(s, requires_grad);
  t.state_->values = std::move(v);
  return t;
}

Tensor Tensor::scalar(double v) {
  return from_vector(Shape{1, 1, 1, 1}, {v});
}

double& Tensor::at(size_t b, size_t c, size_t y, size_t x) {
  const Shape& s = state_->shape;
  return state_->values[((b * s.channels + c) * s.height + y) * s.width + x];
}

double Tensor::at(size_t b, size_t c, size_t y, size_t x) const {
  const Shape& s = state_->shape;
  return state_->values[((b * s.channels + c) * s.height + y) * s.width + x];
}

double Tensor::item() const {
  if (numel() != 1) {
    throw ConfigError("item() requires a scalar tensor, got " + shape().str());
  }
  return state_->values[0];
}

std::span<const double> Tensor::grad() const {
  if (state_->grad.empty()) {
    throw ConfigError("gradient not materialized for this tensor");
  }
  return state_->grad;
}

std::span<double> Tensor::grad_mut() {
  ensure_grad();
  return state_->grad;
}

void Tensor::ensure_grad() {
  if (state_->grad.empty()) state_->grad.assign(numel(), 0.0);
}

void Tensor::zero_grad() {
  if (!state_->grad.empty()) std::fill(state_->grad.begin(), state_->grad.end(), 0.0);
}

void Tensor::accumulate_grad(std::span<const double> delta) {
  if (delta.size() != numel()) {
    throw ConfigError("gradient shape mismatch in accumulation");
  }
  modcodec::check_finite(delta, "gradient");
  ensure_grad();
  double* g = state_->grad.data();
  for (size_t i = 0; i < delta.size(); ++i) g[i] += delta[i];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.state_ = make_state(state_->shape, state_->requires_grad);
  t.state_->values = state_->values;
  return t;
}

void Tensor::check_finite(const char* what) const {
  modcodec::check_finite(values(), what);
}

}  // namespace modcodec
