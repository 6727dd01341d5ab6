#pragma once

// Error function family and standard normal distribution helpers.
//
// erf/erfc/erfcx follow W. J. Cody's rational Chebyshev approximations
// (Math. Comp. 1969), accurate to roughly machine precision in double.
// log_norm_cdf is evaluated through the scaled complementary error function
// so it stays finite far into the lower tail.

namespace deepfht::special {

double erf(double x);
double erfc(double x);

/// exp(x*x) * erfc(x); finite for every x > -26.6.
double erfcx(double x);

double norm_pdf(double z);
double norm_cdf(double z);
double log_norm_cdf(double z);

}  // namespace deepfht::special
