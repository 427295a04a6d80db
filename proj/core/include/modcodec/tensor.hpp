#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "modcodec/common.hpp"

namespace modcodec {

// Dense 4-D extents, (batch, channel, height, width), row-major.
struct Shape {
  size_t batch = 0;
  size_t channels = 0;
  size_t height = 0;
  size_t width = 0;

  size_t numel() const { return batch * channels * height * width; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

namespace detail {
struct TensorState {
  Shape shape;
  std::vector<double> values;
  bool requires_grad = false;
  std::vector<double> grad;  // empty until first needed
};
}  // namespace detail

// Shared handle over dense 4-D data. Copies alias the same storage, which is
// what gradient accumulation needs; use clone() for a deep copy. Values are
// written once by the producing operation and treated as immutable afterwards
// (parameters are the exception: the optimizer rewrites them between steps).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v, bool requires_grad = false);
  static Tensor from_vector(const Shape& s, std::vector<double> v,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return state_ != nullptr; }
  const Shape& shape() const { return state_->shape; }
  size_t numel() const { return state_->shape.numel(); }

  std::span<double> values() { return state_->values; }
  std::span<const double> values() const { return state_->values; }

  double& at(size_t b, size_t c, size_t y, size_t x);
  double at(size_t b, size_t c, size_t y, size_t x) const;

  // Scalar (1,1,1,1) read.
  double item() const;

  bool requires_grad() const { return state_->requires_grad; }
  void set_requires_grad(bool rg) { state_->requires_grad = rg; }

  bool has_grad() const { return !state_->grad.empty(); }
  std::span<const double> grad() const;
  std::span<double> grad_mut();
  void ensure_grad();
  void zero_grad();

  // Adds `delta` into the gradient buffer; rejects non-finite contributions.
  void accumulate_grad(std::span<const double> delta);

  bool same_storage(const Tensor& other) const { return state_ == other.state_; }
  Tensor clone() const;

  // Throws NumericError naming `what` if any value is NaN/Inf.
  void check_finite(const char* what) const;

 private:
  std::shared_ptr<detail::TensorState> state_;
};

void check_finite(std::span<const double> v, const char* what);

}  // namespace modcodec
