#include "deepfht/fht.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "deepfht/special.hpp"

namespace deepfht::fht {
namespace {

constexpr double kInvSqrtPi = 0.56418958354775628695;

void check_time(double t) {
  if (!std::isfinite(t) || t <= 0.0) {
    throw DomainError("time must be finite and > 0, got " + std::to_string(t));
  }
}

void check_position(double x) {
  if (!std::isfinite(x) || x < 0.0) {
    throw DomainError("position must be finite and >= 0, got " + std::to_string(x));
  }
}

// Phi(z) / phi(z); finite for all z <= 0.
double mills(double z) {
  return std::sqrt(std::numbers::pi / 2.0) * special::erfcx(-z / std::numbers::sqrt2);
}

struct IgTerms {
  double sigma;
  double a;       // (x0 + mu t) / sigma
  double pdf_a;   // phi(a)
  double image;   // exp(-mu x0) * Phi(b) == phi(a) * Phi(b)/phi(b)
};

IgTerms ig_terms(const InvGaussParams& p, double t) {
  IgTerms out{};
  out.sigma = std::sqrt(2.0 * t);
  out.a = (p.x0 + p.mu * t) / out.sigma;
  const double b = (p.mu * t - p.x0) / out.sigma;
  out.pdf_a = special::norm_pdf(out.a);
  out.image = out.pdf_a * mills(b);
  return out;
}

}  // namespace

std::string_view to_string(DistKind kind) {
  switch (kind) {
    case DistKind::Levy:
      return "levy";
    case DistKind::InverseGaussian:
      return "invgauss";
  }
  return "unknown";
}

DistKind parse_dist_kind(std::string_view name) {
  if (name == "levy") return DistKind::Levy;
  if (name == "invgauss" || name == "inverse_gaussian") return DistKind::InverseGaussian;
  throw std::invalid_argument("unknown distribution '" + std::string(name) +
                              "' (expected levy or invgauss)");
}

std::array<std::string_view, 2> parameter_names(DistKind kind) {
  if (kind == DistKind::Levy) return {"x0", "D"};
  return {"x0", "mu"};
}

void validate(const LevyParams& p) {
  if (!(std::isfinite(p.x0) && p.x0 > 0.0)) throw DomainError("Levy x0 must be > 0");
  if (!(std::isfinite(p.D) && p.D > 0.0)) throw DomainError("Levy D must be > 0");
}

void validate(const InvGaussParams& p) {
  if (!(std::isfinite(p.x0) && p.x0 > 0.0)) throw DomainError("inverse Gaussian x0 must be > 0");
  if (!(std::isfinite(p.mu) && p.mu < 0.0)) throw DomainError("inverse Gaussian mu must be < 0");
}

double levy_survival(const LevyParams& p, double t) {
  validate(p);
  check_time(t);
  return special::erf(p.x0 / std::sqrt(4.0 * p.D * t));
}

double levy_density(const LevyParams& p, double t) {
  validate(p);
  check_time(t);
  const double dt = p.D * t;
  return p.x0 / std::sqrt(4.0 * std::numbers::pi * dt * t * t) * std::exp(-p.x0 * p.x0 / (4.0 * dt));
}

double levy_log_density(const LevyParams& p, double t) {
  validate(p);
  check_time(t);
  const double dt = p.D * t;
  return std::log(p.x0) - 0.5 * std::log(4.0 * std::numbers::pi * dt * t * t) -
         p.x0 * p.x0 / (4.0 * dt);
}

LevyGradient levy_survival_grad(const LevyParams& p, double t) {
  validate(p);
  check_time(t);
  const double root = std::sqrt(p.D * t);
  const double u = p.x0 / (2.0 * root);
  const double dS_du = 2.0 * kInvSqrtPi * std::exp(-u * u);
  return {dS_du / (2.0 * root), -dS_du * u / (2.0 * p.D)};
}

double ig_survival(const InvGaussParams& p, double t) {
  validate(p);
  check_time(t);
  const IgTerms k = ig_terms(p, t);
  const double s = special::norm_cdf(k.a) - k.image;
  return std::clamp(s, 0.0, 1.0);
}

double ig_density(const InvGaussParams& p, double t) {
  return std::exp(ig_log_density(p, t));
}

double ig_log_density(const InvGaussParams& p, double t) {
  validate(p);
  check_time(t);
  const double shift = p.x0 + p.mu * t;
  return std::log(p.x0) - 0.5 * std::log(4.0 * std::numbers::pi * t * t * t) -
         shift * shift / (4.0 * t);
}

InvGaussGradient ig_survival_grad(const InvGaussParams& p, double t) {
  validate(p);
  check_time(t);
  const IgTerms k = ig_terms(p, t);
  return {2.0 * k.pdf_a / k.sigma + p.mu * k.image, p.x0 * k.image};
}

// Direct and image Gaussians differ by the factor exp(-x x0 / (D t)), so
// p = direct * (1 - exp(-x x0 / (D t))) / sqrt(4 pi D t).
double transition_density(const LevyParams& p, double x, double t) {
  validate(p);
  check_time(t);
  check_position(x);
  const double four_dt = 4.0 * p.D * t;
  const double direct = std::exp(-(x - p.x0) * (x - p.x0) / four_dt);
  return -direct * std::expm1(-x * p.x0 / (p.D * t)) / std::sqrt(std::numbers::pi * four_dt);
}

double transition_density(const InvGaussParams& p, double x, double t) {
  validate(p);
  check_time(t);
  check_position(x);
  const double d = x - p.x0 - p.mu * t;
  const double direct = std::exp(-d * d / (4.0 * t));
  return -direct * std::expm1(-x * p.x0 / t) / std::sqrt(4.0 * std::numbers::pi * t);
}

double survival(const FhtParams& p, double t) {
  return p.kind == DistKind::Levy ? levy_survival(p.levy(), t) : ig_survival(p.inv_gauss(), t);
}

double density(const FhtParams& p, double t) {
  return p.kind == DistKind::Levy ? levy_density(p.levy(), t) : ig_density(p.inv_gauss(), t);
}

std::array<double, 2> survival_grad(const FhtParams& p, double t) {
  if (p.kind == DistKind::Levy) {
    const auto g = levy_survival_grad(p.levy(), t);
    return {g.d_x0, g.d_D};
  }
  const auto g = ig_survival_grad(p.inv_gauss(), t);
  return {g.d_x0, g.d_mu};
}

double transition_density(const FhtParams& p, double x, double t) {
  return p.kind == DistKind::Levy ? transition_density(p.levy(), x, t)
                                  : transition_density(p.inv_gauss(), x, t);
}

SurvivalWithGrad survival_with_grad(const FhtParams& p, double t) {
  check_time(t);
  if (p.kind == DistKind::Levy) {
    const LevyParams lp = p.levy();
    validate(lp);
    const double root = std::sqrt(lp.D * t);
    const double u = lp.x0 / (2.0 * root);
    const double dS_du = 2.0 * kInvSqrtPi * std::exp(-u * u);
    return {special::erf(u), {dS_du / (2.0 * root), -dS_du * u / (2.0 * lp.D)}};
  }
  const InvGaussParams ip = p.inv_gauss();
  validate(ip);
  const IgTerms k = ig_terms(ip, t);
  const double s = std::clamp(special::norm_cdf(k.a) - k.image, 0.0, 1.0);
  return {s, {2.0 * k.pdf_a / k.sigma + ip.mu * k.image, ip.x0 * k.image}};
}

}  // namespace deepfht::fht
