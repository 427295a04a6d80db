#include "modcodec/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstring>
#include <vector>

#include "modcodec/common.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace modcodec::ops {
namespace {

using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

constexpr size_t kParallelCutoff = size_t{1} << 15;

template <typename F>
void par_for(size_t n, F body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) \
    if (n >= kParallelCutoff)
#endif
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    body(static_cast<size_t>(i));
  }
}

// Mirror-bounce index fold; extent 1 degenerates to replicate.
long fold_reflect(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  long m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - m;
}

// col(r, o) = image[ic, oy*stride + kh - pad, ox*stride + kw - pad]
// with r = (ic*KH + kh)*KW + kw and o = oy*OW + ox. Zero mode reads 0 out of
// bounds; reflect mode folds the index.
void im2col(const double* image, size_t C, size_t H, size_t W, size_t KH,
            size_t KW, int stride, int pad, PadMode mode, size_t OH, size_t OW,
            double* col) {
  const long lh = static_cast<long>(H), lw = static_cast<long>(W);
  for (size_t ic = 0; ic < C; ++ic) {
    const double* plane = image + ic * H * W;
    for (size_t kh = 0; kh < KH; ++kh) {
      for (size_t kw = 0; kw < KW; ++kw) {
        double* row = col + ((ic * KH + kh) * KW + kw) * OH * OW;
        for (size_t oy = 0; oy < OH; ++oy) {
          long iy = static_cast<long>(oy) * stride + static_cast<long>(kh) - pad;
          double* out = row + oy * OW;
          if (mode == PadMode::zero && (iy < 0 || iy >= lh)) {
            std::memset(out, 0, OW * sizeof(double));
            continue;
          }
          if (mode == PadMode::reflect) iy = fold_reflect(iy, lh);
          const double* src = plane + static_cast<size_t>(iy) * W;
          for (size_t ox = 0; ox < OW; ++ox) {
            long ix =
                static_cast<long>(ox) * stride + static_cast<long>(kw) - pad;
            if (mode == PadMode::zero) {
              out[ox] = (ix < 0 || ix >= lw) ? 0.0 : src[ix];
            } else {
              out[ox] = src[fold_reflect(ix, lw)];
            }
          }
        }
      }
    }
  }
}

// Exact adjoint of im2col: scatter-adds col entries back onto the image grid.
void col2im_add(const double* col, size_t C, size_t H, size_t W, size_t KH,
                size_t KW, int stride, int pad, PadMode mode, size_t OH,
                size_t OW, double* image) {
  const long lh = static_cast<long>(H), lw = static_cast<long>(W);
  for (size_t ic = 0; ic < C; ++ic) {
    double* plane = image + ic * H * W;
    for (size_t kh = 0; kh < KH; ++kh) {
      for (size_t kw = 0; kw < KW; ++kw) {
        const double* row = col + ((ic * KH + kh) * KW + kw) * OH * OW;
        for (size_t oy = 0; oy < OH; ++oy) {
          long iy = static_cast<long>(oy) * stride + static_cast<long>(kh) - pad;
          if (mode == PadMode::zero && (iy < 0 || iy >= lh)) continue;
          if (mode == PadMode::reflect) iy = fold_reflect(iy, lh);
          double* dst = plane + static_cast<size_t>(iy) * W;
          const double* src = row + oy * OW;
          for (size_t ox = 0; ox < OW; ++ox) {
            long ix =
                static_cast<long>(ox) * stride + static_cast<long>(kw) - pad;
            if (mode == PadMode::zero) {
              if (ix >= 0 && ix < lw) dst[ix] += src[ox];
            } else {
              dst[fold_reflect(ix, lw)] += src[ox];
            }
          }
        }
      }
    }
  }
}

std::vector<double>& col_scratch() {
  thread_local std::vector<double> buf;
  return buf;
}

void check_bias(const Tensor& b, size_t out_ch, const char* op) {
  if (!b.defined()) return;
  if (b.shape() != Shape{1, out_ch, 1, 1}) {
    throw ConfigError(std::string(op) + ": bias must be (1," +
                      std::to_string(out_ch) + ",1,1), got " + b.shape().str());
  }
}

bool wants_grad(const Graph& g, std::initializer_list<Tensor> ts) {
  if (!g.recording()) return false;
  for (const Tensor& t : ts) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

template <typename FwdFn, typename DervFn>
Tensor unary_op(Graph& g, const Tensor& x, const char* name, FwdFn f,
                DervFn dfdx) {
  const size_t n = x.numel();
  Tensor y = Tensor::zeros(x.shape());
  const double* xs = x.values().data();
  double* ys = y.values().data();
  par_for(n, [&](size_t i) { ys[i] = f(xs[i]); });
  y.check_finite(name);
  if (wants_grad(g, {x})) {
    y.set_requires_grad(true);
    g.record([x = x, y = y, dfdx]() mutable {
      y.ensure_grad();
      const double* gy = y.grad().data();
      const double* xs2 = x.values().data();
      const double* ys2 = y.values().data();
      std::vector<double> gx(x.numel());
      par_for(gx.size(),
              [&](size_t i) { gx[i] = gy[i] * dfdx(xs2[i], ys2[i]); });
      x.accumulate_grad(gx);
    });
  }
  return y;
}

struct BroadcastStrides {
  size_t b, c, h, w;
};

BroadcastStrides strides_for(const Shape& in, const Shape& out) {
  BroadcastStrides s{};
  size_t sw = 1;
  size_t sh = in.width * sw;
  size_t sc = in.height * sh;
  size_t sb = in.channels * sc;
  s.w = in.width == out.width ? sw : 0;
  s.h = in.height == out.height ? sh : 0;
  s.c = in.channels == out.channels ? sc : 0;
  s.b = in.batch == out.batch ? sb : 0;
  return s;
}

template <typename FwdFn, typename DaFn, typename DbFn>
Tensor binary_op(Graph& g, const Tensor& a, const Tensor& b, const char* name,
                 FwdFn f, DaFn dfda, DbFn dfdb) {
  const Shape out_shape = broadcast_shape(a.shape(), b.shape());
  Tensor y = Tensor::zeros(out_shape);
  const bool same = a.shape() == b.shape();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* yv = y.values().data();
  if (same) {
    par_for(y.numel(), [&](size_t i) { yv[i] = f(av[i], bv[i]); });
  } else {
    const BroadcastStrides sa = strides_for(a.shape(), out_shape);
    const BroadcastStrides sb = strides_for(b.shape(), out_shape);
    size_t o = 0;
    for (size_t ib = 0; ib < out_shape.batch; ++ib) {
      for (size_t ic = 0; ic < out_shape.channels; ++ic) {
        for (size_t ih = 0; ih < out_shape.height; ++ih) {
          size_t ia = ib * sa.b + ic * sa.c + ih * sa.h;
          size_t ibx = ib * sb.b + ic * sb.c + ih * sb.h;
          for (size_t iw = 0; iw < out_shape.width; ++iw, ++o) {
            yv[o] = f(av[ia + iw * sa.w], bv[ibx + iw * sb.w]);
          }
        }
      }
    }
  }
  y.check_finite(name);
  if (wants_grad(g, {a, b})) {
    y.set_requires_grad(true);
    g.record([a = a, b = b, y = y, out_shape, same, dfda, dfdb]() mutable {
      y.ensure_grad();
      const double* gy = y.grad().data();
      const double* av2 = a.values().data();
      const double* bv2 = b.values().data();
      std::vector<double> ga, gb;
      if (a.requires_grad()) ga.assign(a.numel(), 0.0);
      if (b.requires_grad()) gb.assign(b.numel(), 0.0);
      if (same) {
        for (size_t i = 0; i < out_shape.numel(); ++i) {
          if (!ga.empty()) ga[i] += gy[i] * dfda(av2[i], bv2[i]);
          if (!gb.empty()) gb[i] += gy[i] * dfdb(av2[i], bv2[i]);
        }
      } else {
        const BroadcastStrides sa = strides_for(a.shape(), out_shape);
        const BroadcastStrides sb = strides_for(b.shape(), out_shape);
        size_t o = 0;
        for (size_t ib = 0; ib < out_shape.batch; ++ib) {
          for (size_t ic = 0; ic < out_shape.channels; ++ic) {
            for (size_t ih = 0; ih < out_shape.height; ++ih) {
              size_t ia = ib * sa.b + ic * sa.c + ih * sa.h;
              size_t ibx = ib * sb.b + ic * sb.c + ih * sb.h;
              for (size_t iw = 0; iw < out_shape.width; ++iw, ++o) {
                const double va = av2[ia + iw * sa.w];
                const double vb = bv2[ibx + iw * sb.w];
                if (!ga.empty()) ga[ia + iw * sa.w] += gy[o] * dfda(va, vb);
                if (!gb.empty()) gb[ibx + iw * sb.w] += gy[o] * dfdb(va, vb);
              }
            }
          }
        }
      }
      if (!ga.empty()) a.accumulate_grad(ga);
      if (!gb.empty()) b.accumulate_grad(gb);
    });
  }
  return y;
}

void require_positive_domain(const Tensor& x, const char* op, bool strict,
                             bool nonzero_only = false) {
  for (double v : x.values()) {
    if (nonzero_only) {
      if (v == 0.0) throw NumericError(std::string(op) + " of zero");
    } else if (strict ? v <= 0.0 : v < 0.0) {
      throw NumericError(std::string(op) + " of non-positive value");
    }
  }
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) {
  auto merge = [](size_t x, size_t y, const char* dim) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw ConfigError(std::string("broadcast mismatch on ") + dim);
  };
  return Shape{merge(a.batch, b.batch, "batch"),
               merge(a.channels, b.channels, "channels"),
               merge(a.height, b.height, "height"),
               merge(a.width, b.width, "width")};
}

Tensor conv2d(Graph& g, const Tensor& x, const Tensor& w, const Tensor& b,
              int stride, int padding, PadMode mode) {
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  if (padding < 0) throw ConfigError("conv2d: padding must be >= 0");
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.channels != ws.channels) {
    throw ConfigError("conv2d: input channels " + std::to_string(xs.channels) +
                      " do not match weight in_ch " +
                      std::to_string(ws.channels));
  }
  const size_t OC = ws.batch, IC = ws.channels, KH = ws.height, KW = ws.width;
  check_bias(b, OC, "conv2d");
  const long oh = (static_cast<long>(xs.height) + 2 * padding -
                   static_cast<long>(KH)) /
                      stride +
                  1;
  const long ow = (static_cast<long>(xs.width) + 2 * padding -
                   static_cast<long>(KW)) /
                      stride +
                  1;
  if (oh < 1 || ow < 1) {
    throw ConfigError("conv2d: kernel larger than padded input");
  }
  const size_t OH = static_cast<size_t>(oh), OW = static_cast<size_t>(ow);
  const size_t K = IC * KH * KW, S = OH * OW;

  Tensor y = Tensor::zeros(Shape{xs.batch, OC, OH, OW});
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) \
    if (xs.batch > 1)
#endif
  for (long long bi = 0; bi < static_cast<long long>(xs.batch); ++bi) {
    std::vector<double>& col = col_scratch();
    col.resize(K * S);
    im2col(x.values().data() + bi * IC * xs.height * xs.width, IC, xs.height,
           xs.width, KH, KW, stride, padding, mode, OH, OW, col.data());
    ConstMapRM wm(w.values().data(), OC, K);
    ConstMapRM cm(col.data(), K, S);
    MapRM ym(y.values().data() + bi * OC * S, OC, S);
    ym.noalias() = wm * cm;
    if (b.defined()) {
      for (size_t oc = 0; oc < OC; ++oc) {
        ym.row(oc).array() += b.values()[oc];
      }
    }
  }
  y.check_finite("conv2d");

  if (wants_grad(g, {x, w, b})) {
    y.set_requires_grad(true);
    g.record([x = x, w = w, b = b, y = y, stride, padding, mode]() mutable {
      y.ensure_grad();
      const Shape& xs2 = x.shape();
      const Shape& ws2 = w.shape();
      const size_t OC = ws2.batch, IC = ws2.channels, KH = ws2.height,
                   KW = ws2.width;
      const size_t OH = y.shape().height, OW = y.shape().width;
      const size_t K = IC * KH * KW, S = OH * OW;
      const size_t B = xs2.batch;
      const bool need_x = x.requires_grad();
      const bool need_w = w.requires_grad();
      const bool need_b = b.defined() && b.requires_grad();

      std::vector<double> gx(need_x ? x.numel() : 0, 0.0);
      std::vector<std::vector<double>> gw_per(need_w ? B : 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) \
    if (B > 1)
#endif
      for (long long bi = 0; bi < static_cast<long long>(B); ++bi) {
        ConstMapRM dym(y.grad().data() + bi * OC * S, OC, S);
        ConstMapRM wm(w.values().data(), OC, K);
        if (need_x) {
          std::vector<double>& dcol = col_scratch();
          dcol.resize(K * S);
          MapRM dcm(dcol.data(), K, S);
          dcm.noalias() = wm.transpose() * dym;
          col2im_add(dcol.data(), IC, xs2.height, xs2.width, KH, KW, stride,
                     padding, mode, OH, OW,
                     gx.data() + bi * IC * xs2.height * xs2.width);
        }
        if (need_w) {
          std::vector<double> col(K * S);
          im2col(x.values().data() + bi * IC * xs2.height * xs2.width, IC,
                 xs2.height, xs2.width, KH, KW, stride, padding, mode, OH, OW,
                 col.data());
          gw_per[bi].assign(OC * K, 0.0);
          ConstMapRM cm(col.data(), K, S);
          MapRM gwm(gw_per[bi].data(), OC, K);
          gwm.noalias() = dym * cm.transpose();
        }
      }
      if (need_x) x.accumulate_grad(gx);
      if (need_w) {
        std::vector<double> gw(OC * K, 0.0);
        for (size_t bi = 0; bi < B; ++bi) {
          for (size_t i = 0; i < gw.size(); ++i) gw[i] += gw_per[bi][i];
        }
        w.accumulate_grad(gw);
      }
      if (need_b) {
        std::vector<double> gb(OC, 0.0);
        const double* gy = y.grad().data();
        for (size_t bi = 0; bi < B; ++bi) {
          for (size_t oc = 0; oc < OC; ++oc) {
            const double* row = gy + (bi * OC + oc) * S;
            double acc = 0.0;
            for (size_t i = 0; i < S; ++i) acc += row[i];
            gb[oc] += acc;
          }
        }
        b.accumulate_grad(gb);
      }
    });
  }
  return y;
}

Tensor conv_transpose2d(Graph& g, const Tensor& x, const Tensor& w,
                        const Tensor& b, int stride, int padding,
                        int output_padding, PadMode mode) {
  if (stride < 1) throw ConfigError("conv_transpose2d: stride must be >= 1");
  if (padding < 0) throw ConfigError("conv_transpose2d: padding must be >= 0");
  if (output_padding < 0 || output_padding >= stride) {
    throw ConfigError("conv_transpose2d: output_padding must be in [0,stride)");
  }
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (xs.channels != ws.batch) {
    throw ConfigError("conv_transpose2d: input channels " +
                      std::to_string(xs.channels) +
                      " do not match weight in_ch " + std::to_string(ws.batch));
  }
  const size_t IN = ws.batch, OUT = ws.channels, KH = ws.height, KW = ws.width;
  check_bias(b, OUT, "conv_transpose2d");
  const long oh = (static_cast<long>(xs.height) - 1) * stride - 2 * padding +
                  static_cast<long>(KH) + output_padding;
  const long ow = (static_cast<long>(xs.width) - 1) * stride - 2 * padding +
                  static_cast<long>(KW) + output_padding;
  if (oh < 1 || ow < 1) {
    throw ConfigError("conv_transpose2d: degenerate output extent");
  }
  const size_t OH = static_cast<size_t>(oh), OW = static_cast<size_t>(ow);
  const size_t K = OUT * KH * KW;
  const size_t S = xs.height * xs.width;

  Tensor y = Tensor::zeros(Shape{xs.batch, OUT, OH, OW});
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) \
    if (xs.batch > 1)
#endif
  for (long long bi = 0; bi < static_cast<long long>(xs.batch); ++bi) {
    std::vector<double>& col = col_scratch();
    col.resize(K * S);
    ConstMapRM wm(w.values().data(), IN, K);
    ConstMapRM xm(x.values().data() + bi * IN * S, IN, S);
    MapRM cm(col.data(), K, S);
    cm.noalias() = wm.transpose() * xm;
    double* yb = y.values().data() + bi * OUT * OH * OW;
    col2im_add(col.data(), OUT, OH, OW, KH, KW, stride, padding, mode,
               xs.height, xs.width, yb);
    if (b.defined()) {
      for (size_t oc = 0; oc < OUT; ++oc) {
        double* plane = yb + oc * OH * OW;
        for (size_t i = 0; i < OH * OW; ++i) plane[i] += b.values()[oc];
      }
    }
  }
  y.check_finite("conv_transpose2d");

  if (wants_grad(g, {x, w, b})) {
    y.set_requires_grad(true);
    g.record([x = x, w = w, b = b, y = y, stride, padding, mode]() mutable {
      y.ensure_grad();
      const Shape& xs2 = x.shape();
      const Shape& ws2 = w.shape();
      const size_t IN = ws2.batch, OUT = ws2.channels, KH = ws2.height,
                   KW = ws2.width;
      const size_t OH = y.shape().height, OW = y.shape().width;
      const size_t K = OUT * KH * KW;
      const size_t S = xs2.height * xs2.width;
      const size_t B = xs2.batch;
      const bool need_x = x.requires_grad();
      const bool need_w = w.requires_grad();
      const bool need_b = b.defined() && b.requires_grad();

      std::vector<double> gx(need_x ? x.numel() : 0, 0.0);
      std::vector<std::vector<double>> gw_per(need_w ? B : 0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) \
    if (B > 1)
#endif
      for (long long bi = 0; bi < static_cast<long long>(B); ++bi) {
        std::vector<double>& dcol = col_scratch();
        dcol.resize(K * S);
        im2col(y.grad().data() + bi * OUT * OH * OW, OUT, OH, OW, KH, KW,
               stride, padding, mode, xs2.height, xs2.width, dcol.data());
        ConstMapRM dcm(dcol.data(), K, S);
        if (need_x) {
          ConstMapRM wm(w.values().data(), IN, K);
          MapRM gxm(gx.data() + bi * IN * S, IN, S);
          gxm.noalias() = wm * dcm;
        }
        if (need_w) {
          gw_per[bi].assign(IN * K, 0.0);
          ConstMapRM xm(x.values().data() + bi * IN * S, IN, S);
          MapRM gwm(gw_per[bi].data(), IN, K);
          gwm.noalias() = xm * dcm.transpose();
        }
      }
      if (need_x) x.accumulate_grad(gx);
      if (need_w) {
        std::vector<double> gw(IN * K, 0.0);
        for (size_t bi = 0; bi < B; ++bi) {
          for (size_t i = 0; i < gw.size(); ++i) gw[i] += gw_per[bi][i];
        }
        w.accumulate_grad(gw);
      }
      if (need_b) {
        std::vector<double> gb(OUT, 0.0);
        const double* gy = y.grad().data();
        for (size_t bi = 0; bi < B; ++bi) {
          for (size_t oc = 0; oc < OUT; ++oc) {
            const double* plane = gy + (bi * OUT + oc) * OH * OW;
            double acc = 0.0;
            for (size_t i = 0; i < OH * OW; ++i) acc += plane[i];
            gb[oc] += acc;
          }
        }
        b.accumulate_grad(gb);
      }
    });
  }
  return y;
}

Tensor dense_channelwise(Graph& g, const Tensor& x, const Tensor& w,
                         const Tensor& b) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (ws.height != 1 || ws.width != 1) {
    throw ConfigError("dense_channelwise: weight must be (OC,IC,1,1)");
  }
  if (ws.channels != xs.channels) {
    throw ConfigError("dense_channelwise: weight in_ch " +
                      std::to_string(ws.channels) + " does not match input " +
                      std::to_string(xs.channels));
  }
  const size_t OC = ws.batch, IC = ws.channels;
  check_bias(b, OC, "dense_channelwise");
  const size_t S = xs.height * xs.width;

  Tensor y = Tensor::zeros(Shape{xs.batch, OC, xs.height, xs.width});
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads()) \
    if (xs.batch > 1)
#endif
  for (long long bi = 0; bi < static_cast<long long>(xs.batch); ++bi) {
    ConstMapRM wm(w.values().data(), OC, IC);
    ConstMapRM xm(x.values().data() + bi * IC * S, IC, S);
    MapRM ym(y.values().data() + bi * OC * S, OC, S);
    ym.noalias() = wm * xm;
    if (b.defined()) {
      for (size_t oc = 0; oc < OC; ++oc) ym.row(oc).array() += b.values()[oc];
    }
  }
  y.check_finite("dense_channelwise");

  if (wants_grad(g, {x, w, b})) {
    y.set_requires_grad(true);
    g.record([x = x, w = w, b = b, y = y]() mutable {
      y.ensure_grad();
      const Shape& xs2 = x.shape();
      const size_t OC = w.shape().batch, IC = w.shape().channels;
      const size_t S = xs2.height * xs2.width;
      const size_t B = xs2.batch;
      const bool need_x = x.requires_grad();
      const bool need_w = w.requires_grad();
      const bool need_b = b.defined() && b.requires_grad();

      std::vector<double> gx(need_x ? x.numel() : 0, 0.0);
      std::vector<double> gw(need_w ? OC * IC : 0, 0.0);
      for (size_t bi = 0; bi < B; ++bi) {
        ConstMapRM dym(y.grad().data() + bi * OC * S, OC, S);
        if (need_x) {
          ConstMapRM wm(w.values().data(), OC, IC);
          MapRM gxm(gx.data() + bi * IC * S, IC, S);
          gxm.noalias() = wm.transpose() * dym;
        }
        if (need_w) {
          ConstMapRM xm(x.values().data() + bi * IC * S, IC, S);
          MapRM gwm(gw.data(), OC, IC);
          gwm.noalias() += dym * xm.transpose();
        }
      }
      if (need_x) x.accumulate_grad(gx);
      if (need_w) w.accumulate_grad(gw);
      if (need_b) {
        std::vector<double> gb(OC, 0.0);
        const double* gy = y.grad().data();
        for (size_t bi = 0; bi < B; ++bi) {
          for (size_t oc = 0; oc < OC; ++oc) {
            const double* row = gy + (bi * OC + oc) * S;
            double acc = 0.0;
            for (size_t i = 0; i < S; ++i) acc += row[i];
            gb[oc] += acc;
          }
        }
        b.accumulate_grad(gb);
      }
    });
  }
  return y;
}

Tensor relu(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor cos(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "cos", [](double v) { return std::cos(v); },
      [](double v, double) { return -std::sin(v); });
}

Tensor sin(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "sin", [](double v) { return std::sin(v); },
      [](double v, double) { return std::cos(v); });
}

Tensor tanh(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "tanh", [](double v) { return std::tanh(v); },
      [](double, double yv) { return 1.0 - yv * yv; });
}

Tensor exp(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "exp", [](double v) { return std::exp(v); },
      [](double, double yv) { return yv; });
}

Tensor log(Graph& g, const Tensor& x) {
  require_positive_domain(x, "log", /*strict=*/true);
  return unary_op(
      g, x, "log", [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor sqrt(Graph& g, const Tensor& x) {
  require_positive_domain(x, "sqrt", /*strict=*/false);
  return unary_op(
      g, x, "sqrt", [](double v) { return std::sqrt(v); },
      [](double, double yv) { return 0.5 / yv; });
}

Tensor square(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "square", [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

Tensor abs(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "abs", [](double v) { return std::fabs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor reciprocal(Graph& g, const Tensor& x) {
  require_positive_domain(x, "reciprocal", false, /*nonzero_only=*/true);
  return unary_op(
      g, x, "reciprocal", [](double v) { return 1.0 / v; },
      [](double, double yv) { return -yv * yv; });
}

Tensor softplus(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "softplus",
      [](double v) {
        return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
      },
      [](double v, double) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                        : std::exp(v) / (1.0 + std::exp(v));
      });
}

Tensor sigmoid(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "sigmoid",
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double yv) { return yv * (1.0 - yv); });
}

Tensor neg(Graph& g, const Tensor& x) {
  return unary_op(
      g, x, "neg", [](double v) { return -v; },
      [](double, double) { return -1.0; });
}

Tensor clamp_min(Graph& g, const Tensor& x, double lo) {
  return unary_op(
      g, x, "clamp_min", [lo](double v) { return v > lo ? v : lo; },
      [lo](double v, double) { return v > lo ? 1.0 : 0.0; });
}

Tensor pow_scalar(Graph& g, const Tensor& x, double p) {
  require_positive_domain(x, "pow", /*strict=*/true);
  return unary_op(
      g, x, "pow", [p](double v) { return std::pow(v, p); },
      [p](double v, double yv) { return p * yv / v; });
}

Tensor add_scalar(Graph& g, const Tensor& x, double c) {
  return unary_op(
      g, x, "add_scalar", [c](double v) { return v + c; },
      [](double, double) { return 1.0; });
}

Tensor mul_scalar(Graph& g, const Tensor& x, double c) {
  return unary_op(
      g, x, "mul_scalar", [c](double v) { return v * c; },
      [c](double, double) { return c; });
}

Tensor add(Graph& g, const Tensor& a, const Tensor& b) {
  return binary_op(
      g, a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(Graph& g, const Tensor& a, const Tensor& b) {
  return binary_op(
      g, a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(Graph& g, const Tensor& a, const Tensor& b) {
  return binary_op(
      g, a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor sum_all(Graph& g, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor y = Tensor::scalar(acc);
  y.check_finite("sum");
  if (wants_grad(g, {x})) {
    y.set_requires_grad(true);
    g.record([x = x, y = y]() mutable {
      y.ensure_grad();
      std::vector<double> gx(x.numel(), y.grad()[0]);
      x.accumulate_grad(gx);
    });
  }
  return y;
}

Tensor mean_all(Graph& g, const Tensor& x) {
  const size_t n = x.numel();
  if (n == 0) throw ConfigError("mean of empty tensor");
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  Tensor y = Tensor::scalar(acc / static_cast<double>(n));
  y.check_finite("mean");
  if (wants_grad(g, {x})) {
    y.set_requires_grad(true);
    g.record([x = x, y = y, n]() mutable {
      y.ensure_grad();
      std::vector<double> gx(n, y.grad()[0] / static_cast<double>(n));
      x.accumulate_grad(gx);
    });
  }
  return y;
}

Tensor add_constant(Graph& g, const Tensor& x, const Tensor& c) {
  if (c.shape() != x.shape()) {
    throw ConfigError("add_constant: shape mismatch");
  }
  Tensor y = Tensor::zeros(x.shape());
  const double* xs = x.values().data();
  const double* cs = c.values().data();
  double* ys = y.values().data();
  par_for(x.numel(), [&](size_t i) { ys[i] = xs[i] + cs[i]; });
  y.check_finite("add_constant");
  if (wants_grad(g, {x})) {
    y.set_requires_grad(true);
    g.record([x = x, y = y]() mutable {
      y.ensure_grad();
      x.accumulate_grad(y.grad());
    });
  }
  return y;
}

}  // namespace modcodec::ops
