#pragma once

namespace modcodec::detmath {

// exp(x) from a fixed polynomial over IEEE-754 double ops only, no libm, so
// the quantized CDF tables derived from a checkpoint are identical on every
// platform. Relative error is a few ulps, far below the 16-bit table grain.
double det_exp(double x);

// Logistic CDF 1/(1 + e^-t) on the deterministic path.
double logistic_cdf(double t);

}  // namespace modcodec::detmath
