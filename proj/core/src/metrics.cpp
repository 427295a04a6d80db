#include "modcodec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "modcodec/ops.hpp"

namespace modcodec {

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (a.shape() != b.shape()) {
    throw ConfigError("psnr: shape mismatch " + a.shape().str() + " vs " +
                      b.shape().str());
  }
  double mse = 0.0;
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (size_t i = 0; i < a.numel(); ++i) {
    const double d = av[i] - bv[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr double kMsssimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // L = 1
constexpr double kC2 = 0.03 * 0.03;

// Per-channel (diagonal) kernel so one conv2d call filters each channel
// independently.
Tensor diagonal_kernel(size_t channels, const std::vector<double>& taps,
                       size_t k) {
  Tensor w = Tensor::zeros(Shape{channels, channels, k, k});
  for (size_t c = 0; c < channels; ++c) {
    for (size_t i = 0; i < k * k; ++i) {
      w.values()[(c * channels + c) * k * k + i] = taps[i];
    }
  }
  return w;
}

Tensor gaussian_kernel(size_t channels) {
  std::vector<double> taps(kWindow * kWindow);
  double sum = 0.0;
  const double half = (kWindow - 1) / 2.0;
  for (size_t y = 0; y < kWindow; ++y) {
    for (size_t x = 0; x < kWindow; ++x) {
      const double dy = y - half, dx = x - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      taps[y * kWindow + x] = v;
      sum += v;
    }
  }
  for (double& v : taps) v /= sum;
  return diagonal_kernel(channels, taps, kWindow);
}

Tensor halve(Graph& g, const Tensor& x) {
  const Tensor pool = diagonal_kernel(x.shape().channels,
                                      {0.25, 0.25, 0.25, 0.25}, 2);
  return ops::conv2d(g, x, pool, Tensor{}, /*stride=*/2, /*padding=*/0);
}

int scale_count(const Shape& s) {
  size_t extent = std::min(s.height, s.width);
  int scales = 0;
  while (scales < 5 && extent >= kWindow) {
    ++scales;
    extent /= 2;
  }
  return scales;
}

// (ssim_mean, cs_mean) at one scale.
std::pair<Tensor, Tensor> ssim_scale(Graph& g, const Tensor& x,
                                     const Tensor& y, const Tensor& window) {
  Tensor mu_x = ops::conv2d(g, x, window, Tensor{}, 1, 0);
  Tensor mu_y = ops::conv2d(g, y, window, Tensor{}, 1, 0);
  Tensor mu_xx = ops::mul(g, mu_x, mu_x);
  Tensor mu_yy = ops::mul(g, mu_y, mu_y);
  Tensor mu_xy = ops::mul(g, mu_x, mu_y);
  Tensor sigma_x = ops::sub(g, ops::conv2d(g, ops::mul(g, x, x), window,
                                           Tensor{}, 1, 0),
                            mu_xx);
  Tensor sigma_y = ops::sub(g, ops::conv2d(g, ops::mul(g, y, y), window,
                                           Tensor{}, 1, 0),
                            mu_yy);
  Tensor sigma_xy = ops::sub(g, ops::conv2d(g, ops::mul(g, x, y), window,
                                            Tensor{}, 1, 0),
                             mu_xy);
  Tensor cs = ops::mul(
      g, ops::add_scalar(g, ops::mul_scalar(g, sigma_xy, 2.0), kC2),
      ops::reciprocal(g, ops::add_scalar(g, ops::add(g, sigma_x, sigma_y),
                                         kC2)));
  Tensor lum = ops::mul(
      g, ops::add_scalar(g, ops::mul_scalar(g, mu_xy, 2.0), kC1),
      ops::reciprocal(g, ops::add_scalar(g, ops::add(g, mu_xx, mu_yy), kC1)));
  return {ops::mean_all(g, ops::mul(g, lum, cs)), ops::mean_all(g, cs)};
}

Tensor msssim_graph(Graph& g, const Tensor& a, const Tensor& b, int scales) {
  const Tensor window = gaussian_kernel(a.shape().channels);
  double weight_sum = 0.0;
  for (int j = 0; j < scales; ++j) weight_sum += kMsssimWeights[j];

  Tensor x = a, y = b;
  Tensor result;
  for (int j = 0; j < scales; ++j) {
    auto [ssim_mean, cs_mean] = ssim_scale(g, x, y, window);
    Tensor term = (j == scales - 1) ? ssim_mean : cs_mean;
    // clamp keeps the fractional power defined if a mean dips nonpositive
    term = ops::pow_scalar(g, ops::clamp_min(g, term, 1e-8),
                           kMsssimWeights[j] / weight_sum);
    result = result.defined() ? ops::mul(g, result, term) : term;
    if (j + 1 < scales) {
      x = halve(g, x);
      y = halve(g, y);
    }
  }
  return result;
}

}  // namespace

Tensor msssim_autograd(Graph& g, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ConfigError("msssim: shape mismatch");
  }
  const int scales = scale_count(a.shape());
  if (scales < 1) {
    throw ConfigError("msssim: extents below the 11-tap window");
  }
  return msssim_graph(g, a, b, scales);
}

MsssimResult msssim_ex(const Tensor& a, const Tensor& b) {
  Graph g = Graph::inference();
  MsssimResult r;
  r.scales_used = scale_count(a.shape());
  r.value = msssim_autograd(g, a, b).item();
  if (r.value > 1.0) r.value = 1.0;  // fp round-off on identical inputs
  return r;
}

double msssim(const Tensor& a, const Tensor& b) { return msssim_ex(a, b).value; }

double msssim_db(double d) {
  if (d >= 1.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(1.0 - d);
}

namespace {

// Fritsch-Carlson monotone cubic Hermite slopes.
std::vector<double> pchip_slopes(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  const size_t n = x.size();
  std::vector<double> m(n, 0.0);
  if (n == 2) {
    m[0] = m[1] = (y[1] - y[0]) / (x[1] - x[0]);
    return m;
  }
  std::vector<double> h(n - 1), d(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    d[i] = (y[i + 1] - y[i]) / h[i];
  }
  for (size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      m[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  auto endpoint = [](double h0, double h1, double d0, double d1) {
    double m0 = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m0 * d0 <= 0.0) {
      m0 = 0.0;
    } else if (d0 * d1 < 0.0 && std::fabs(m0) > 3.0 * std::fabs(d0)) {
      m0 = 3.0 * d0;
    }
    return m0;
  };
  m[0] = endpoint(h[0], h[1], d[0], d[1]);
  m[n - 1] = endpoint(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
  return m;
}

// Integral of the Hermite interpolant over [lo, hi] (inside the data range).
double pchip_integral(const std::vector<double>& x, const std::vector<double>& y,
                      double lo, double hi) {
  const std::vector<double> m = pchip_slopes(x, y);
  double total = 0.0;
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = std::max(lo, x[i]);
    const double b = std::min(hi, x[i + 1]);
    if (b <= a) continue;
    const double h = x[i + 1] - x[i];
    const double t0 = (a - x[i]) / h;
    const double t1 = (b - x[i]) / h;
    // cubic in t: c0 + c1 t + c2 t^2 + c3 t^3
    const double c0 = y[i];
    const double c1 = h * m[i];
    const double c2 = -3.0 * y[i] + 3.0 * y[i + 1] - 2.0 * h * m[i] - h * m[i + 1];
    const double c3 = 2.0 * y[i] - 2.0 * y[i + 1] + h * m[i] + h * m[i + 1];
    auto anti = [&](double t) {
      return c0 * t + c1 * t * t / 2.0 + c2 * t * t * t / 3.0 +
             c3 * t * t * t * t / 4.0;
    };
    total += h * (anti(t1) - anti(t0));
  }
  return total;
}

// (quality, log rate) sorted by quality, both strictly increasing required.
void curve_axes(const RdCurve& curve, QualityMetric metric,
                std::vector<double>& q, std::vector<double>& lr) {
  if (curve.points.size() < 2) {
    throw DataError("bd_rate: need at least 2 points per curve");
  }
  std::vector<RdPoint> pts = curve.points;
  std::sort(pts.begin(), pts.end(),
            [&](const RdPoint& a, const RdPoint& b) {
              return (metric == QualityMetric::psnr ? a.psnr : a.msssim) <
                     (metric == QualityMetric::psnr ? b.psnr : b.msssim);
            });
  for (const RdPoint& p : pts) {
    const double quality =
        metric == QualityMetric::psnr ? p.psnr : msssim_db(p.msssim);
    if (!std::isfinite(quality)) {
      throw DataError("bd_rate: non-finite quality value");
    }
    if (p.bpp <= 0.0) throw DataError("bd_rate: nonpositive bitrate");
    if (!q.empty() && quality <= q.back()) {
      throw DataError("bd_rate: quality values must be strictly increasing");
    }
    q.push_back(quality);
    lr.push_back(std::log(p.bpp));
  }
}

}  // namespace

double bd_rate(const RdCurve& anchor, const RdCurve& test,
               QualityMetric quality) {
  std::vector<double> qa, ra, qt, rt;
  curve_axes(anchor, quality, qa, ra);
  curve_axes(test, quality, qt, rt);
  const double lo = std::max(qa.front(), qt.front());
  const double hi = std::min(qa.back(), qt.back());
  if (hi <= lo) {
    throw DataError("bd_rate: curves have no overlapping quality range");
  }
  const double avg_diff = (pchip_integral(qt, rt, lo, hi) -
                           pchip_integral(qa, ra, lo, hi)) /
                          (hi - lo);
  return (std::exp(avg_diff) - 1.0) * 100.0;
}

std::vector<double> channel_energy_ratio(const Tensor& features) {
  const Shape& s = features.shape();
  std::vector<double> energy(s.channels, 0.0);
  const size_t plane = s.height * s.width;
  for (size_t b = 0; b < s.batch; ++b) {
    for (size_t c = 0; c < s.channels; ++c) {
      const double* v = features.values().data() + (b * s.channels + c) * plane;
      double acc = 0.0;
      for (size_t i = 0; i < plane; ++i) acc += v[i] * v[i];
      energy[c] += acc;
    }
  }
  double total = 0.0;
  for (double e : energy) total += e;
  if (total <= 0.0) {
    throw DataError("channel_energy_ratio: all-zero features");
  }
  for (double& e : energy) e /= total;
  return energy;
}

RdCurve read_rd_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open RD file: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("bpp,psnr,msssim", 0) != 0) {
    throw DataError(path + ": expected header bpp,psnr,msssim");
  }
  RdCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    RdPoint p;
    try {
      std::getline(row, cell, ',');
      p.bpp = std::stod(cell);
      std::getline(row, cell, ',');
      p.psnr = std::stod(cell);
      std::getline(row, cell, ',');
      p.msssim = std::stod(cell);
    } catch (const std::exception&) {
      throw DataError(path + ": malformed RD row \"" + line + "\"");
    }
    curve.points.push_back(p);
  }
  return curve;
}

void write_rd_csv(const std::string& path, const RdCurve& curve) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write RD file: " + path);
  out << "bpp,psnr,msssim\n";
  char buf[128];
  for (const RdPoint& p : curve.points) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", p.bpp, p.psnr,
                  p.msssim);
    out << buf;
  }
}

}  // namespace modcodec
