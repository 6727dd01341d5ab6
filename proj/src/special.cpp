#include "deepfht/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace deepfht::special {
namespace {

enum class Variant { Erf, Erfc, Erfcx };

constexpr double kA[5] = {3.16112374387056560e00, 1.13864154151050156e02, 3.77485237685302021e02,
                          3.20937758913846947e03, 1.85777706184603153e-1};
constexpr double kB[4] = {2.36012909523441209e01, 2.44024637934444173e02, 1.28261652607737228e03,
                          2.84423683343917062e03};
constexpr double kC[9] = {5.64188496988670089e-1, 8.88314979438837594e00, 6.61191906371416295e01,
                          2.98635138197400131e02, 8.81952221241769090e02, 1.71204761263407058e03,
                          2.05107837782607147e03, 1.23033935479799725e03, 2.15311535474403846e-8};
constexpr double kD[8] = {1.57449261107098347e01, 1.17693950891312499e02, 5.37181101862009858e02,
                          1.62138957456669019e03, 3.29079923573345963e03, 4.36261909014324716e03,
                          3.43936767414372164e03, 1.23033935480374942e03};
constexpr double kP[6] = {3.05326634961232344e-1, 3.60344899949804439e-1, 1.25781726111229246e-1,
                          1.60837851487422766e-2, 6.58749161529837803e-4, 1.63153871373020978e-2};
constexpr double kQ[5] = {2.56852019228982242e00, 1.87295284992346047e00, 5.27905102951428412e-1,
                          6.05183413124413191e-2, 2.33520497626869185e-3};

constexpr double kInvSqrtPi = 0.56418958354775628695;
constexpr double kThresh = 0.46875;
constexpr double kXSmall = 1.11e-16;
constexpr double kXBig = 26.543;
constexpr double kXHuge = 6.71e7;
constexpr double kXMax = 2.53e307;
constexpr double kXNeg = -26.628;

// exp(-y*y) split as exp(-ysq*ysq)*exp(-del) to limit cancellation error.
double exp_neg_square(double y) {
  const double ysq = std::trunc(y * 16.0) / 16.0;
  const double del = (y - ysq) * (y + ysq);
  return std::exp(-ysq * ysq) * std::exp(-del);
}

double cody(double x, Variant variant) {
  const double y = std::fabs(x);
  double result = 0.0;

  if (y <= kThresh) {
    const double ysq = y > kXSmall ? y * y : 0.0;
    double num = kA[4] * ysq;
    double den = ysq;
    for (int i = 0; i < 3; ++i) {
      num = (num + kA[i]) * ysq;
      den = (den + kB[i]) * ysq;
    }
    result = x * (num + kA[3]) / (den + kB[3]);
    if (variant != Variant::Erf) result = 1.0 - result;
    if (variant == Variant::Erfcx) result *= std::exp(ysq);
    return result;
  }

  if (y <= 4.0) {
    double num = kC[8] * y;
    double den = y;
    for (int i = 0; i < 7; ++i) {
      num = (num + kC[i]) * y;
      den = (den + kD[i]) * y;
    }
    result = (num + kC[7]) / (den + kD[7]);
    if (variant != Variant::Erfcx) result *= exp_neg_square(y);
  } else {
    bool done = false;
    if (y >= kXBig) {
      if (variant != Variant::Erfcx || y >= kXMax) {
        result = 0.0;
        done = true;
      } else if (y >= kXHuge) {
        result = kInvSqrtPi / y;
        done = true;
      }
    }
    if (!done) {
      const double ysq = 1.0 / (y * y);
      double num = kP[5] * ysq;
      double den = ysq;
      for (int i = 0; i < 4; ++i) {
        num = (num + kP[i]) * ysq;
        den = (den + kQ[i]) * ysq;
      }
      result = ysq * (num + kP[4]) / (den + kQ[4]);
      result = (kInvSqrtPi - result) / y;
      if (variant != Variant::Erfcx) result *= exp_neg_square(y);
    }
  }

  // result holds erfc(|x|) (or its scaled form); fold in the sign of x.
  switch (variant) {
    case Variant::Erf:
      result = (0.5 - result) + 0.5;
      return x < 0.0 ? -result : result;
    case Variant::Erfc:
      return x < 0.0 ? 2.0 - result : result;
    case Variant::Erfcx:
      if (x < 0.0) {
        if (x < kXNeg) return std::numeric_limits<double>::infinity();
        const double ysq = std::trunc(x * 16.0) / 16.0;
        const double del = (x - ysq) * (x + ysq);
        const double e = std::exp(ysq * ysq) * std::exp(del);
        result = (e + e) - result;
      }
      return result;
  }
  return result;
}

}  // namespace

double erf(double x) { return cody(x, Variant::Erf); }
double erfc(double x) { return cody(x, Variant::Erfc); }
double erfcx(double x) { return cody(x, Variant::Erfcx); }

double norm_pdf(double z) {
  constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;
  return kInvSqrt2Pi * std::exp(-0.5 * z * z);
}

double norm_cdf(double z) { return 0.5 * erfc(-z / std::numbers::sqrt2); }

double log_norm_cdf(double z) {
  if (z > 0.0) return std::log1p(-0.5 * erfc(z / std::numbers::sqrt2));
  if (z > -5.0) return std::log(norm_cdf(z));
  // Phi(z) = 0.5 * erfcx(-z/sqrt2) * exp(-z^2/2)
  const double w = -z / std::numbers::sqrt2;
  return std::log(0.5 * erfcx(w)) - 0.5 * z * z;
}

}  // namespace deepfht::special
