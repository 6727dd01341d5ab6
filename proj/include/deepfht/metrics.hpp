#pragma once

// Censoring-aware evaluation: Kaplan-Meier curves, IPCW, time-dependent
// concordance, Brier curves, integrated Brier score and bootstrap summaries.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "deepfht/data.hpp"
#include "deepfht/train.hpp"

namespace deepfht::metrics {

class UndefinedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Right-continuous, non-increasing step function starting at 1.
struct KmCurve {
  std::vector<double> times;     // jump times, increasing
  std::vector<double> survival;  // value from times[k] (inclusive) on
  std::vector<std::size_t> at_risk;

  /// S(t): value after all jumps at times <= t.
  double at(double t) const;
  /// S(t-): value after all jumps at times < t.
  double before(double t) const;
};

/// Product-limit estimate of the event distribution. Subjects tied with an
/// event at the same time are counted at risk.
KmCurve kaplan_meier(std::span<const data::SurvivalRecord> records);
/// Product-limit estimate of the censoring distribution G (indicator flipped).
KmCurve km_censoring(std::span<const data::SurvivalRecord> records);

enum class Weighting { Ipcw, Unweighted };

struct ConcordanceResult {
  double value = 0.0;
  std::size_t comparable_pairs = 0;
  std::size_t excluded = 0;  // anchors dropped because G(T_i-) = 0
};

/// Time-dependent concordance: over pairs with T_i < T_j and event_i, the
/// weighted fraction with S(T_i | i) < S(T_i | j); ties in S count 1/2.
/// IPCW pair weight is 1 / G(T_i-)^2.
ConcordanceResult antolini_cindex(const train::SurvivalFn& survival, std::span<const data::SurvivalRecord> records,
                                  Weighting weighting = Weighting::Ipcw);

struct BrierPoint {
  double t = 0.0;
  double score = 0.0;
};

struct BrierCurve {
  std::vector<BrierPoint> points;
  std::size_t excluded = 0;  // terms dropped because their censoring weight was 0
};

/// B(t) = 1/n sum_i [T_i <= t, event_i] S(t|i)^2 / G(T_i-) + [T_i > t] (1 - S(t|i))^2 / G(t).
BrierCurve brier_curve(const train::SurvivalFn& survival, std::span<const data::SurvivalRecord> records,
                       std::span<const double> t_grid, Weighting weighting = Weighting::Ipcw);

/// Trapezoidal integral of the piecewise-linear curve over [t0, tmax],
/// divided by tmax - t0. The curve is held constant outside its range.
double ibs(std::span<const BrierPoint> curve, double t0, double tmax);

struct BootstrapSummary {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> values;
};

using IndexedMetric = std::function<double(std::span<const std::size_t> indices)>;

/// Indices of one resample that keeps the event/censored counts of `records`.
std::vector<std::size_t> stratified_resample(std::span<const data::SurvivalRecord> records, std::uint64_t seed,
                                             std::size_t replicate);

/// Evaluates `metric` on n_resamples stratified resamples (with replacement)
/// and returns the sample mean and standard deviation. Resamples are drawn
/// from independent seeded streams and may be evaluated concurrently.
BootstrapSummary bootstrap(const IndexedMetric& metric, std::span<const data::SurvivalRecord> records,
                           std::size_t n_resamples, std::uint64_t seed, std::size_t threads = 1);

// --- Reports ---

struct MetricSummary {
  double point = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct EvalReport {
  std::string model;
  std::size_t n_subjects = 0;
  double censoring_ratio = 0.0;
  MetricSummary c_index;
  MetricSummary ibs;
  double t0 = 0.0;
  double tmax = 0.0;
  std::vector<BrierPoint> brier_curve;
  std::size_t n_bootstrap = 0;
  std::size_t excluded_terms = 0;
};

/// Default evaluation of a survival function over `records`: C-index, a
/// Brier curve on `grid_points` equally spaced times in (0, tmax] with tmax
/// the last event time, IBS over [0, tmax], and bootstrap summaries.
EvalReport evaluate(const std::string& model_name, const train::SurvivalFn& survival,
                    std::span<const data::SurvivalRecord> records, std::size_t n_bootstrap, std::uint64_t seed,
                    std::size_t grid_points = 100);

std::string to_json(const EvalReport& report);
std::string to_json(const std::vector<EvalReport>& reports);
EvalReport report_from_json(const std::string& text);

}  // namespace deepfht::metrics
