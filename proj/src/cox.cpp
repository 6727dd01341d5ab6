#include "deepfht/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>

namespace deepfht::cox {
namespace {

std::vector<std::size_t> descending_time_order(std::span<const data::SurvivalRecord> records) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });
  return order;
}

// Solves (A) x = b for symmetric positive definite A in place; false if A is
// not numerically positive definite.
bool cholesky_solve(std::vector<double> a, std::size_t p, std::span<const double> b, std::vector<double>& x) {
  for (std::size_t j = 0; j < p; ++j) {
    double d = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * p + k] * a[j * p + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double l = std::sqrt(d);
    a[j * p + j] = l;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / l;
    }
  }
  x.assign(b.begin(), b.end());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= a[i * p + k] * x[k];
    x[i] /= a[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    for (std::size_t k = i + 1; k < p; ++k) x[i] -= a[k * p + i] * x[k];
    x[i] /= a[i * p + i];
  }
  return true;
}

double norm2(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

}  // namespace

double CoxModel::linear_predictor(std::span<const double> x) const {
  if (x.size() != beta.size()) throw std::invalid_argument("covariate count does not match the Cox model");
  return std::inner_product(beta.begin(), beta.end(), x.begin(), 0.0);
}

double CoxModel::baseline_at(double t) const {
  const auto it = std::upper_bound(baseline_times.begin(), baseline_times.end(), t);
  if (it == baseline_times.begin()) return 1.0;
  return baseline_survival[static_cast<std::size_t>(it - baseline_times.begin()) - 1];
}

PartialLikelihood partial_likelihood(std::span<const data::SurvivalRecord> records, std::span<const double> beta) {
  const std::size_t p = beta.size();
  PartialLikelihood out;
  out.gradient.assign(p, 0.0);
  out.hessian.assign(p * p, 0.0);

  // Sweep from the latest time down, growing the risk set. Tied times enter
  // the risk set together (Breslow).
  const auto order = descending_time_order(records);
  double s0 = 0.0;
  std::vector<double> s1(p, 0.0);
  std::vector<double> s2(p * p, 0.0);
  for (std::size_t k = 0; k < order.size();) {
    const double t = records[order[k]].time;
    std::size_t end = k;
    while (end < order.size() && records[order[end]].time == t) {
      const auto& r = records[order[end]];
      const double w = std::exp(std::inner_product(beta.begin(), beta.end(), r.x.begin(), 0.0));
      s0 += w;
      for (std::size_t a = 0; a < p; ++a) {
        s1[a] += w * r.x[a];
        for (std::size_t b = 0; b < p; ++b) s2[a * p + b] += w * r.x[a] * r.x[b];
      }
      ++end;
    }
    std::size_t deaths = 0;
    for (std::size_t m = k; m < end; ++m) {
      const auto& r = records[order[m]];
      if (!r.event) continue;
      ++deaths;
      out.value += std::inner_product(beta.begin(), beta.end(), r.x.begin(), 0.0);
      for (std::size_t a = 0; a < p; ++a) out.gradient[a] += r.x[a];
    }
    if (deaths > 0) {
      const double d = static_cast<double>(deaths);
      out.value -= d * std::log(s0);
      for (std::size_t a = 0; a < p; ++a) {
        out.gradient[a] -= d * s1[a] / s0;
        for (std::size_t b = 0; b < p; ++b) {
          out.hessian[a * p + b] -= d * (s2[a * p + b] / s0 - s1[a] * s1[b] / (s0 * s0));
        }
      }
    }
    k = end;
  }
  return out;
}

CoxModel fit_cox(std::span<const data::SurvivalRecord> records, const CoxOptions& options) {
  if (records.empty()) throw CoxFitError("Cox fit needs data");
  if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.event; })) {
    throw CoxFitError("Cox fit needs at least one event");
  }
  const std::size_t p = records.front().x.size();
  for (const auto& r : records) {
    data::validate(r);
    if (r.x.size() != p) throw CoxFitError("records have inconsistent feature counts");
  }

  CoxModel model;
  model.beta.assign(p, 0.0);
  auto& diag = model.diagnostics;
  PartialLikelihood current = partial_likelihood(records, model.beta);
  diag.log_likelihood_trace.push_back(current.value);

  bool converged = false;
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    diag.gradient_norm = norm2(current.gradient);
    if (diag.gradient_norm < options.tol) {
      converged = true;
      break;
    }
    ++diag.iterations;

    // Newton direction from the negated Hessian, with escalating ridge when
    // it is not numerically positive definite.
    std::vector<double> step;
    std::optional<double> ridge_ok;
    for (double ridge = options.ridge_eps; ridge <= 1e3; ridge *= 1e3) {
      std::vector<double> info(p * p);
      for (std::size_t k = 0; k < p * p; ++k) info[k] = -current.hessian[k];
      for (std::size_t a = 0; a < p; ++a) info[a * p + a] += ridge;
      if (cholesky_solve(std::move(info), p, current.gradient, step)) {
        ridge_ok = ridge;
        break;
      }
    }
    if (!ridge_ok) {
      throw CoxFitError("Cox Hessian is singular even after ridge stabilization (iteration " +
                        std::to_string(iter + 1) + ")");
    }
    diag.ridge_used = std::max(diag.ridge_used, *ridge_ok);

    std::vector<double> candidate(p);
    PartialLikelihood next;
    double scale = 1.0;
    for (int halvings = 0;; ++halvings) {
      for (std::size_t a = 0; a < p; ++a) candidate[a] = model.beta[a] + scale * step[a];
      next = partial_likelihood(records, candidate);
      if (std::isfinite(next.value) && next.value >= current.value) break;
      if (halvings >= 30) {
        // No ascent along the Newton direction: the gradient is at noise level.
        candidate = model.beta;
        next = current;
        break;
      }
      scale *= 0.5;
      ++diag.step_halvings;
    }
    const bool stalled = candidate == model.beta;
    model.beta = candidate;
    current = std::move(next);
    diag.log_likelihood_trace.push_back(current.value);
    if (stalled) {
      diag.gradient_norm = norm2(current.gradient);
      converged = diag.gradient_norm < std::sqrt(options.tol);
      break;
    }
  }
  diag.log_likelihood = current.value;
  diag.gradient_norm = norm2(current.gradient);
  if (!converged && diag.gradient_norm >= options.tol) {
    throw CoxFitError("Cox fit did not converge after " + std::to_string(diag.iterations) +
                      " iterations (gradient norm " + std::to_string(diag.gradient_norm) + ")");
  }

  // Breslow baseline hazard increments d_j / sum_{R_j} exp(beta . x).
  const auto order = descending_time_order(records);
  std::vector<std::pair<double, double>> increments;
  double s0 = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    const double t = records[order[k]].time;
    std::size_t deaths = 0;
    while (k < order.size() && records[order[k]].time == t) {
      const auto& r = records[order[k]];
      s0 += std::exp(model.linear_predictor(r.x));
      if (r.event) ++deaths;
      ++k;
    }
    if (deaths > 0) increments.emplace_back(t, static_cast<double>(deaths) / s0);
  }
  std::reverse(increments.begin(), increments.end());
  double cumulative = 0.0;
  for (const auto& [t, dh] : increments) {
    cumulative += dh;
    model.baseline_times.push_back(t);
    model.baseline_survival.push_back(std::exp(-cumulative));
  }
  return model;
}

double cox_survival(const CoxModel& model, std::span<const double> x, double t) {
  if (!(t >= 0.0)) throw std::domain_error("Cox survival needs t >= 0");
  return std::pow(model.baseline_at(t), std::exp(model.linear_predictor(x)));
}

train::SurvivalFn survival_fn(const CoxModel& model, std::span<const data::SurvivalRecord> subjects) {
  std::vector<double> risk;
  risk.reserve(subjects.size());
  for (const auto& r : subjects) risk.push_back(std::exp(model.linear_predictor(r.x)));
  return [model, risk = std::move(risk)](double t, std::size_t i) {
    return std::pow(model.baseline_at(t), risk.at(i));
  };
}

}  // namespace deepfht::cox
