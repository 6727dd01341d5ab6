#pragma once

// Closed-form first-hitting-time laws of Brownian motion started at x0 > 0
// with an absorbing barrier at 0.
//
//   Levy:             driftless, diffusion coefficient D.
//   Inverse Gaussian: drift mu < 0, diffusion coefficient fixed to 1.
//
// All functions are pure. Times must be finite and strictly positive; the
// t = 0 boundary is rejected instead of being mapped to S = 1.

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace deepfht::fht {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class DistKind { Levy, InverseGaussian };

std::string_view to_string(DistKind kind);
/// Accepts "levy" and "invgauss" (also "inverse_gaussian").
DistKind parse_dist_kind(std::string_view name);
/// Names of the two process parameters, e.g. {"x0", "D"}.
std::array<std::string_view, 2> parameter_names(DistKind kind);

struct LevyParams {
  double x0 = 1.0;
  double D = 1.0;
};

struct InvGaussParams {
  double x0 = 1.0;
  double mu = -1.0;
};

void validate(const LevyParams& p);
void validate(const InvGaussParams& p);

// --- Levy (driftless Brownian motion) ---

double levy_survival(const LevyParams& p, double t);
double levy_density(const LevyParams& p, double t);
double levy_log_density(const LevyParams& p, double t);

struct LevyGradient {
  double d_x0 = 0.0;
  double d_D = 0.0;
};
LevyGradient levy_survival_grad(const LevyParams& p, double t);

// --- Inverse Gaussian (Brownian motion with negative drift, D = 1) ---

double ig_survival(const InvGaussParams& p, double t);
double ig_density(const InvGaussParams& p, double t);
double ig_log_density(const InvGaussParams& p, double t);

struct InvGaussGradient {
  double d_x0 = 0.0;
  double d_mu = 0.0;
};
InvGaussGradient ig_survival_grad(const InvGaussParams& p, double t);

// Transition density p(x, t | x0) of the absorbed process, x >= 0.
double transition_density(const LevyParams& p, double x, double t);
double transition_density(const InvGaussParams& p, double x, double t);

// --- Kind-erased view used by the network and the evaluation code ---

/// Per-subject process parameters. `theta` is D for Levy and mu for the
/// inverse Gaussian law.
struct FhtParams {
  DistKind kind = DistKind::Levy;
  double x0 = 1.0;
  double theta = 1.0;

  LevyParams levy() const { return {x0, theta}; }
  InvGaussParams inv_gauss() const { return {x0, theta}; }
};

double survival(const FhtParams& p, double t);
double density(const FhtParams& p, double t);
/// {dS/dx0, dS/dtheta} in raw parameter space.
std::array<double, 2> survival_grad(const FhtParams& p, double t);
double transition_density(const FhtParams& p, double x, double t);

struct SurvivalWithGrad {
  double value = 1.0;
  std::array<double, 2> grad{};
};
/// survival() and survival_grad() sharing one evaluation of the common terms.
SurvivalWithGrad survival_with_grad(const FhtParams& p, double t);

}  // namespace deepfht::fht
