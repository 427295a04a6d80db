#pragma once

#include "modcodec/graph.hpp"
#include "modcodec/tensor.hpp"

// Differentiable tensor operations. Every op validates shapes (ConfigError),
// rejects non-finite outputs (NumericError), and registers its backward rule
// on the graph when recording and some input requires gradient.
namespace modcodec::ops {

enum class PadMode { zero, reflect };

// x:(B,IC,H,W), w:(OC,IC,KH,KW), b:(1,OC,1,1) or undefined for no bias.
// Output spatial extent: floor((H + 2*padding - KH)/stride) + 1.
Tensor conv2d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b,
              int stride, int padding, PadMode mode = PadMode::zero);

// Adjoint of conv2d under the same weight, stride and padding:
// x:(B,IN,H,W), w:(IN,OUT,KH,KW), b:(1,OUT,1,1) or undefined.
// Output spatial extent: (H-1)*stride - 2*padding + KH + output_padding.
Tensor conv_transpose2d(Graph& g, const Tensor& x, const Tensor& w,
                        const Tensor& b, int stride, int padding,
                        int output_padding, PadMode mode = PadMode::zero);

// Per-pixel channel mixing (a 1x1 convolution): w:(OC,IC,1,1), b:(1,OC,1,1).
Tensor dense_channelwise(Graph& g, const Tensor& x, const Tensor& w,
                         const Tensor& b);

// Unary elementwise.
Tensor relu(Graph& g, const Tensor& x);
Tensor cos(Graph& g, const Tensor& x);
Tensor sin(Graph& g, const Tensor& x);
Tensor tanh(Graph& g, const Tensor& x);
Tensor exp(Graph& g, const Tensor& x);
Tensor log(Graph& g, const Tensor& x);         // x > 0 required
Tensor sqrt(Graph& g, const Tensor& x);        // x >= 0 required
Tensor square(Graph& g, const Tensor& x);
Tensor abs(Graph& g, const Tensor& x);
Tensor reciprocal(Graph& g, const Tensor& x);  // x != 0 required
Tensor softplus(Graph& g, const Tensor& x);
Tensor sigmoid(Graph& g, const Tensor& x);
Tensor neg(Graph& g, const Tensor& x);
Tensor clamp_min(Graph& g, const Tensor& x, double lo);
Tensor pow_scalar(Graph& g, const Tensor& x, double p);  // x > 0 required
Tensor add_scalar(Graph& g, const Tensor& x, double c);
Tensor mul_scalar(Graph& g, const Tensor& x, double c);

// Binary elementwise with per-dimension broadcasting (extent match or 1),
// e.g. a channel vector (1,C,1,1) against a (B,C,H,W) tensor.
Tensor add(Graph& g, const Tensor& a, const Tensor& b);
Tensor sub(Graph& g, const Tensor& a, const Tensor& b);
Tensor mul(Graph& g, const Tensor& a, const Tensor& b);

// Reductions to a (1,1,1,1) scalar.
Tensor sum_all(Graph& g, const Tensor& x);
Tensor mean_all(Graph& g, const Tensor& x);

// y = x + c where c is treated as a constant (no gradient to c); the
// gradient to x is the identity. Used for the additive-noise channel proxy.
Tensor add_constant(Graph& g, const Tensor& x, const Tensor& c);

Shape broadcast_shape(const Shape& a, const Shape& b);

}  // namespace modcodec::ops
