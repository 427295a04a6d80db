#include "modcodec/det_math.hpp"

#include <cmath>

namespace modcodec::detmath {

namespace {
// ln(2) split for exact range reduction.
constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kInvLn2 = 1.44269504088896338700e+00;
}  // namespace

double det_exp(double x) {
  if (x != x) return x;
  if (x > 709.0) return HUGE_VAL;
  if (x < -745.0) return 0.0;

  // x = k*ln2 + r, |r| <= ln2/2
  const double kd = static_cast<double>(static_cast<long long>(
      x * kInvLn2 + (x >= 0.0 ? 0.5 : -0.5)));
  const double r = (x - kd * kLn2Hi) - kd * kLn2Lo;

  // exp(r) by a degree-13 Taylor series in Horner form; |r| <= 0.3466 keeps
  // the truncation under 1 ulp.
  double p = 1.0 / 6227020800.0;  // 1/13!
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  return std::ldexp(p, static_cast<int>(kd));
}

double logistic_cdf(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + det_exp(-t));
  }
  const double e = det_exp(t);
  return e / (1.0 + e);
}

}  // namespace modcodec::detmath
