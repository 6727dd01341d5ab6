#pragma once

// Synthetic non-proportional-hazards benchmark. Each subject draws its event
// time from a piecewise-constant density on [0, horizon) whose interval
// masses are a sharpened softmax of its first n_intervals features.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "deepfht/data.hpp"

namespace deepfht::nonph {

struct NonPhConfig {
  std::size_t n_raw = 10000;
  std::size_t n_features = 20;
  std::size_t n_intervals = 16;
  double beta = 16.0;
  double horizon = 10.0;
  std::size_t n_subintervals = 1000;
  double target_censoring = 0.25;
  std::size_t n_keep = 2400;
  std::uint64_t seed = 0;
};

void validate(const NonPhConfig& cfg);

/// softmax(beta * features[0 .. n_intervals)).
std::vector<double> interval_masses(std::span<const double> features, const NonPhConfig& cfg);

/// Mass of each sub-interval [j w, (j+1) w), w = horizon / n_subintervals,
/// followed by the mass of the unbounded interval [horizon, inf). A
/// sub-interval straddling two density intervals receives mass in
/// proportion to its overlap with each.
std::vector<double> subinterval_masses(std::span<const double> interval_masses, const NonPhConfig& cfg);

/// Inverse-CDF sampler over the sub-interval masses of one subject.
class SubintervalSampler {
 public:
  SubintervalSampler(std::span<const double> features, const NonPhConfig& cfg);

  /// Index in [0, n_subintervals]; n_subintervals denotes the unbounded interval.
  std::size_t draw(std::mt19937_64& rng) const;
  /// Lower bound of a bounded sub-interval, with the first one mapped to its
  /// midpoint so times stay strictly positive.
  double event_time(std::size_t index) const;

 private:
  std::vector<double> cdf_;
  double width_;
};

std::vector<data::SurvivalRecord> generate_nonph(const NonPhConfig& cfg);

/// Column names x1..xN used when writing generated data.
std::vector<std::string> feature_names(const NonPhConfig& cfg);

}  // namespace deepfht::nonph
