#include "deepfht/nonph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace deepfht::nonph {

void validate(const NonPhConfig& cfg) {
  if (cfg.n_raw == 0 || cfg.n_keep == 0 || cfg.n_intervals == 0 || cfg.n_subintervals == 0) {
    throw std::invalid_argument("NonPH sizes must be positive");
  }
  if (cfg.n_features < cfg.n_intervals) throw std::invalid_argument("NonPH needs n_features >= n_intervals");
  if (cfg.n_keep > cfg.n_raw) throw std::invalid_argument("NonPH n_keep must not exceed n_raw");
  if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) throw std::invalid_argument("NonPH horizon must be > 0");
  if (!(cfg.beta >= 0.0) || !std::isfinite(cfg.beta)) throw std::invalid_argument("NonPH beta must be >= 0");
  if (!(cfg.target_censoring >= 0.0 && cfg.target_censoring < 1.0)) {
    throw std::invalid_argument("NonPH target censoring must lie in [0, 1)");
  }
}

std::vector<double> interval_masses(std::span<const double> features, const NonPhConfig& cfg) {
  if (features.size() < cfg.n_intervals) throw std::invalid_argument("feature row shorter than n_intervals");
  std::vector<double> p(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(cfg.n_intervals));
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(cfg.beta * (v - top));
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> subinterval_masses(std::span<const double> masses, const NonPhConfig& cfg) {
  // Work in sub-interval units: sub-interval j is [j, j+1), density interval
  // k is [k * r, (k+1) * r) with r = n_subintervals / n_intervals.
  const double ratio = static_cast<double>(cfg.n_subintervals) / static_cast<double>(masses.size());
  std::vector<double> out(cfg.n_subintervals + 1, 0.0);
  double bounded = 0.0;
  for (std::size_t k = 0; k < masses.size(); ++k) {
    const double lo = static_cast<double>(k) * ratio;
    const double hi = static_cast<double>(k + 1) * ratio;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    const auto last = std::min(cfg.n_subintervals, static_cast<std::size_t>(std::ceil(hi)));
    for (std::size_t j = first; j < last; ++j) {
      const double overlap = std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
      if (overlap > 0.0) out[j] += masses[k] * overlap / ratio;
    }
    bounded += masses[k];
  }
  const double rest = 1.0 - bounded;
  out.back() = rest > 1e-12 ? rest : 0.0;
  return out;
}

SubintervalSampler::SubintervalSampler(std::span<const double> features, const NonPhConfig& cfg)
    : width_(cfg.horizon / static_cast<double>(cfg.n_subintervals)) {
  const auto masses = subinterval_masses(interval_masses(features, cfg), cfg);
  cdf_.resize(masses.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < masses.size(); ++j) {
    acc += masses[j];
    cdf_[j] = acc;
  }
}

std::size_t SubintervalSampler::draw(std::mt19937_64& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

double SubintervalSampler::event_time(std::size_t index) const {
  if (index == 0) return 0.5 * width_;
  return static_cast<double>(index) * width_;
}

std::vector<data::SurvivalRecord> generate_nonph(const NonPhConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<data::SurvivalRecord> records(cfg.n_raw);
  for (auto& r : records) {
    r.x.resize(cfg.n_features);
    for (double& v : r.x) v = normal(rng);
    const SubintervalSampler sampler(r.x, cfg);
    const std::size_t j = sampler.draw(rng);
    if (j == cfg.n_subintervals) {
      r.event = false;
      r.time = cfg.horizon;
    } else {
      r.event = true;
      r.time = sampler.event_time(j);
    }
  }

  // Top censoring up to the target: flip randomly chosen events and draw
  // their censoring time uniformly before the original event time.
  const auto target = static_cast<std::size_t>(std::llround(cfg.target_censoring * static_cast<double>(cfg.n_raw)));
  std::vector<std::size_t> events;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].event) events.push_back(i);
  }
  const std::size_t censored = records.size() - events.size();
  if (target > censored) {
    std::shuffle(events.begin(), events.end(), rng);
    for (std::size_t k = 0; k < target - censored && k < events.size(); ++k) {
      auto& r = records[events[k]];
      std::uniform_real_distribution<double> when(0.0, r.time);
      double t = 0.0;
      while (t <= 0.0) t = when(rng);
      r.event = false;
      r.time = t;
    }
  }

  // Keep n_keep subjects with the target censoring ratio.
  std::vector<std::size_t> ev;
  std::vector<std::size_t> ce;
  for (std::size_t i = 0; i < records.size(); ++i) (records[i].event ? ev : ce).push_back(i);
  std::shuffle(ev.begin(), ev.end(), rng);
  std::shuffle(ce.begin(), ce.end(), rng);
  auto keep_censored = static_cast<std::size_t>(std::llround(cfg.target_censoring * static_cast<double>(cfg.n_keep)));
  keep_censored = std::min(keep_censored, ce.size());
  const std::size_t keep_events = std::min(cfg.n_keep - keep_censored, ev.size());

  std::vector<std::size_t> kept(ev.begin(), ev.begin() + static_cast<std::ptrdiff_t>(keep_events));
  kept.insert(kept.end(), ce.begin(), ce.begin() + static_cast<std::ptrdiff_t>(keep_censored));
  std::sort(kept.begin(), kept.end());
  return data::subset(records, kept);
}

std::vector<std::string> feature_names(const NonPhConfig& cfg) {
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= cfg.n_features; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

}  // namespace deepfht::nonph
