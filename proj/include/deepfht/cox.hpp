#pragma once

// Cox proportional hazards baseline: Newton-Raphson on the Breslow partial
// likelihood and the Breslow baseline survival.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "deepfht/data.hpp"
#include "deepfht/train.hpp"

namespace deepfht::cox {

class CoxFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CoxOptions {
  double ridge_eps = 1e-9;
  std::size_t max_iter = 100;
  double tol = 1e-9;
};

struct CoxDiagnostics {
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_trace;
  std::size_t step_halvings = 0;
  double ridge_used = 0.0;
};

struct CoxModel {
  std::vector<double> beta;
  std::vector<double> baseline_times;     // distinct event times
  std::vector<double> baseline_survival;  // S0 after each time
  CoxDiagnostics diagnostics;

  double linear_predictor(std::span<const double> x) const;
  double baseline_at(double t) const;
};

/// Breslow log partial likelihood, its gradient and Hessian at `beta`.
struct PartialLikelihood {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<double> hessian;  // p x p, row-major
};
PartialLikelihood partial_likelihood(std::span<const data::SurvivalRecord> records, std::span<const double> beta);

CoxModel fit_cox(std::span<const data::SurvivalRecord> records, const CoxOptions& options = {});

/// S(t | x) = S0(t) ^ exp(beta . x); S0(0) = 1.
double cox_survival(const CoxModel& model, std::span<const double> x, double t);

train::SurvivalFn survival_fn(const CoxModel& model, std::span<const data::SurvivalRecord> subjects);

}  // namespace deepfht::cox
