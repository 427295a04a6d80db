#pragma once

#include <string>
#include <vector>

#include "modcodec/graph.hpp"
#include "modcodec/tensor.hpp"

namespace modcodec {

// 10*log10(peak^2 / MSE); identical inputs give the +infinity sentinel.
double psnr(const Tensor& a, const Tensor& b, double peak = 255.0);

struct MsssimResult {
  double value = 0.0;
  int scales_used = 0;  // < 5 when extents were too small for 5 scales
};

// Multi-scale structural similarity on [0,1] images, Gaussian window 11
// (sigma 1.5), scale weights {0.0448, 0.2856, 0.3001, 0.2363, 0.1333}.
// Extents below 176 reduce the scale count (weights renormalized) and the
// reduction is reported through scales_used.
MsssimResult msssim_ex(const Tensor& a, const Tensor& b);
double msssim(const Tensor& a, const Tensor& b);

// Differentiable path used by the msssim training loss; the plain metric is
// this computation under a non-recording graph.
Tensor msssim_autograd(Graph& g, const Tensor& a, const Tensor& b);

// -10*log10(1-d); d = 1 gives the +infinity sentinel.
double msssim_db(double d);

struct RdPoint {
  double bpp = 0.0;
  double psnr = 0.0;
  double msssim = 0.0;
};

struct RdCurve {
  std::vector<RdPoint> points;  // strictly increasing bpp
};

enum class QualityMetric { psnr, msssim };

// Bjontegaard delta rate: piecewise-cubic-Hermite interpolation of log-rate
// against quality, averaged over the common quality interval. Negative means
// `test` saves bitrate against `anchor`. MS-SSIM quality is interpolated on
// the decibel axis.
double bd_rate(const RdCurve& anchor, const RdCurve& test,
               QualityMetric quality = QualityMetric::psnr);

// e_i = E_i / sum_j E_j with E_i the sum of squares over channel i.
std::vector<double> channel_energy_ratio(const Tensor& features);

// RD curve files: CSV with header bpp,psnr,msssim, one curve per file.
RdCurve read_rd_csv(const std::string& path);
void write_rd_csv(const std::string& path, const RdCurve& curve);

}  // namespace modcodec
