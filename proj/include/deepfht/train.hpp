#pragma once

// Brier-type training loss and the minibatch training loop.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "deepfht/data.hpp"
#include "deepfht/fht.hpp"
#include "deepfht/matrix.hpp"
#include "deepfht/network.hpp"
#include "deepfht/optimizer.hpp"

namespace deepfht::train {

/// Predicted survival S(t | subject).
using SurvivalFn = std::function<double(double t, std::size_t subject)>;

struct BrierLoss {
  double value = 0.0;
  /// dL/dS for every (subject, time) pair; rows follow the subject order,
  /// columns the time order.
  Matrix dloss_dsurvival;
};

/// L = sum over t in times, subjects i of
///       [T_i <= t and event_i] S(t|i)^2 + [T_i > t] (1 - S(t|i))^2.
/// Subjects censored at or before t contribute nothing at t. Unnormalized.
BrierLoss brier_loss(const SurvivalFn& survival, std::span<const data::SurvivalRecord> subjects,
                     std::span<const double> times);

/// Sorted distinct times of uncensored records.
std::vector<double> unique_event_times(std::span<const data::SurvivalRecord> records);

/// Picks `cap` times from sorted `times`, one uniformly from each of `cap`
/// consecutive equal-count strata. Returns `times` unchanged when it has at
/// most `cap` entries.
template <class Rng>
std::vector<double> stratified_time_subsample(std::span<const double> times, std::size_t cap, Rng& rng);

struct TrainConfig {
  std::size_t epochs = 450;
  std::size_t batch_size = 256;
  double learning_rate = 0.0039;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  /// Maximum number of event times per minibatch loss; nullopt uses all.
  std::optional<std::size_t> eval_time_cap = 256;
};

void validate(const TrainConfig& cfg);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FittedModel {
  nn::Network network;
  std::optional<data::PreprocessRecipe> recipe;
  /// Mean normalized minibatch loss per epoch.
  std::vector<double> loss_trace;

  fht::DistKind kind() const { return network.kind(); }
  std::vector<fht::FhtParams> params(const Matrix& x) const { return network.predict(x); }
  fht::FhtParams params(std::span<const double> x) const { return network.predict_one(x); }
};

/// Minimizes the Brier loss divided by (|U| * batch size) with minibatch
/// updates. U is the set of training event times, subsampled per batch to
/// at most cfg.eval_time_cap entries.
FittedModel fit(std::span<const data::SurvivalRecord> dataset, fht::DistKind kind,
                const std::vector<nn::LayerSpec>& hidden, const TrainConfig& cfg);

double predict_survival(const FittedModel& model, std::span<const double> x, double t);

/// Survival function over a fixed subject list, evaluating the network once.
SurvivalFn survival_fn(const FittedModel& model, std::span<const data::SurvivalRecord> subjects);

// --- implementation ---

template <class Rng>
std::vector<double> stratified_time_subsample(std::span<const double> times, std::size_t cap, Rng& rng) {
  if (cap == 0 || times.size() <= cap) return {times.begin(), times.end()};
  std::vector<double> out;
  out.reserve(cap);
  const std::size_t n = times.size();
  for (std::size_t s = 0; s < cap; ++s) {
    const std::size_t lo = s * n / cap;
    const std::size_t hi = (s + 1) * n / cap;
    std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
    out.push_back(times[pick(rng)]);
  }
  return out;
}

}  // namespace deepfht::train
