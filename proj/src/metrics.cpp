#include "deepfht/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include <json.hpp>

namespace deepfht::metrics {
namespace {

KmCurve product_limit(std::span<const data::SurvivalRecord> records, bool count_events) {
  if (records.empty()) throw std::invalid_argument("Kaplan-Meier needs at least one record");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return records[a].time < records[b].time; });

  KmCurve curve;
  double s = 1.0;
  std::size_t at_risk = records.size();
  for (std::size_t k = 0; k < order.size();) {
    const double t = records[order[k]].time;
    std::size_t hits = 0;
    std::size_t leaving = 0;
    while (k < order.size() && records[order[k]].time == t) {
      if (records[order[k]].event == count_events) ++hits;
      ++leaving;
      ++k;
    }
    if (hits > 0) {
      s *= 1.0 - static_cast<double>(hits) / static_cast<double>(at_risk);
      curve.times.push_back(t);
      curve.survival.push_back(s);
      curve.at_risk.push_back(at_risk);
    }
    at_risk -= leaving;
  }
  return curve;
}

double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

double KmCurve::at(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

double KmCurve::before(double t) const {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

KmCurve kaplan_meier(std::span<const data::SurvivalRecord> records) { return product_limit(records, true); }

KmCurve km_censoring(std::span<const data::SurvivalRecord> records) { return product_limit(records, false); }

ConcordanceResult antolini_cindex(const train::SurvivalFn& survival, std::span<const data::SurvivalRecord> records,
                                  Weighting weighting) {
  const KmCurve g = km_censoring(records);
  ConcordanceResult out;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& ri = records[i];
    if (!ri.event) continue;
    double w = 1.0;
    if (weighting == Weighting::Ipcw) {
      const double gi = g.before(ri.time);
      if (gi <= 0.0) {
        ++out.excluded;
        continue;
      }
      w = 1.0 / (gi * gi);
    }
    const double own = survival(ri.time, i);
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (!(ri.time < records[j].time)) continue;
      const double other = survival(ri.time, j);
      ++out.comparable_pairs;
      den += w;
      if (own < other) {
        num += w;
      } else if (own == other) {
        num += 0.5 * w;
      }
    }
  }
  if (out.comparable_pairs == 0) throw UndefinedMetric("C-index undefined: no comparable pairs");
  out.value = num / den;
  return out;
}

BrierCurve brier_curve(const train::SurvivalFn& survival, std::span<const data::SurvivalRecord> records,
                       std::span<const double> t_grid, Weighting weighting) {
  if (records.empty()) throw std::invalid_argument("Brier curve needs at least one record");
  const KmCurve g = km_censoring(records);
  const bool ipcw = weighting == Weighting::Ipcw;
  const double n = static_cast<double>(records.size());
  BrierCurve out;
  for (double t : t_grid) {
    const double g_t = ipcw ? g.at(t) : 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      if (r.time <= t && r.event) {
        const double w = ipcw ? g.before(r.time) : 1.0;
        if (w <= 0.0) {
          ++out.excluded;
          continue;
        }
        const double s = survival(t, i);
        acc += s * s / w;
      } else if (r.time > t) {
        if (g_t <= 0.0) {
          ++out.excluded;
          continue;
        }
        const double s = survival(t, i);
        acc += (1.0 - s) * (1.0 - s) / g_t;
      }
    }
    out.points.push_back({t, acc / n});
  }
  return out;
}

double ibs(std::span<const BrierPoint> curve, double t0, double tmax) {
  if (!(tmax > t0)) throw std::invalid_argument("IBS window needs tmax > t0");
  if (curve.empty()) throw std::invalid_argument("IBS needs a non-empty Brier curve");
  auto value_at = [&](double t) {
    if (t <= curve.front().t) return curve.front().score;
    if (t >= curve.back().t) return curve.back().score;
    const auto it = std::upper_bound(curve.begin(), curve.end(), t,
                                     [](double x, const BrierPoint& p) { return x < p.t; });
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    if (hi.t == lo.t) return hi.score;
    return lo.score + (hi.score - lo.score) * (t - lo.t) / (hi.t - lo.t);
  };
  std::vector<double> knots{t0};
  for (const auto& p : curve) {
    if (p.t > t0 && p.t < tmax) knots.push_back(p.t);
  }
  knots.push_back(tmax);
  double area = 0.0;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    area += 0.5 * (value_at(knots[k - 1]) + value_at(knots[k])) * (knots[k] - knots[k - 1]);
  }
  return area / (tmax - t0);
}

std::vector<std::size_t> stratified_resample(std::span<const data::SurvivalRecord> records, std::uint64_t seed,
                                             std::size_t replicate) {
  std::vector<std::size_t> events;
  std::vector<std::size_t> censored;
  for (std::size_t i = 0; i < records.size(); ++i) (records[i].event ? events : censored).push_back(i);
  std::seed_seq seq{seed, static_cast<std::uint64_t>(replicate), std::uint64_t{0x626f6f74}};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> out;
  out.reserve(records.size());
  for (const auto* group : {&events, &censored}) {
    if (group->empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, group->size() - 1);
    for (std::size_t k = 0; k < group->size(); ++k) out.push_back((*group)[pick(rng)]);
  }
  return out;
}

BootstrapSummary bootstrap(const IndexedMetric& metric, std::span<const data::SurvivalRecord> records,
                           std::size_t n_resamples, std::uint64_t seed, std::size_t threads) {
  if (n_resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
  BootstrapSummary out;
  out.values.assign(n_resamples, 0.0);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t r = begin; r < n_resamples; r += stride) {
      const auto idx = stratified_resample(records, seed, r);
      out.values[r] = metric(idx);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n_resamples));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
  }
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / static_cast<double>(n_resamples);
  out.std = sample_std(out.values, out.mean);
  return out;
}

EvalReport evaluate(const std::string& model_name, const train::SurvivalFn& survival,
                    std::span<const data::SurvivalRecord> records, std::size_t n_bootstrap, std::uint64_t seed,
                    std::size_t grid_points) {
  if (grid_points < 1) throw std::invalid_argument("need at least one Brier grid point");
  EvalReport report;
  report.model = model_name;
  report.n_subjects = records.size();
  report.censoring_ratio = data::censoring_ratio(records);

  double tmax = 0.0;
  for (const auto& r : records) {
    if (r.event) tmax = std::max(tmax, r.time);
  }
  if (tmax <= 0.0) throw UndefinedMetric("evaluation set has no events");
  report.t0 = 0.0;
  report.tmax = tmax;
  std::vector<double> grid(grid_points);
  for (std::size_t k = 0; k < grid_points; ++k) {
    grid[k] = tmax * static_cast<double>(k + 1) / static_cast<double>(grid_points);
  }

  // Every model predicts S(0) = 1 and every T_i > 0, so B(0) = 0.
  auto integrated = [&](const BrierCurve& bc) {
    std::vector<BrierPoint> pts{{0.0, 0.0}};
    pts.insert(pts.end(), bc.points.begin(), bc.points.end());
    return ibs(pts, 0.0, tmax);
  };

  const auto ci = antolini_cindex(survival, records);
  const auto bc = brier_curve(survival, records, grid);
  report.c_index.point = ci.value;
  report.ibs.point = integrated(bc);
  report.brier_curve = bc.points;
  report.excluded_terms = ci.excluded + bc.excluded;
  report.n_bootstrap = n_bootstrap;

  if (n_bootstrap >= 2) {
    std::vector<double> ci_values(n_bootstrap);
    std::vector<double> ibs_values(n_bootstrap);
    for (std::size_t r = 0; r < n_bootstrap; ++r) {
      const auto idx = stratified_resample(records, seed, r);
      const auto sample = data::subset(records, idx);
      const train::SurvivalFn mapped = [&](double t, std::size_t k) { return survival(t, idx[k]); };
      try {
        ci_values[r] = antolini_cindex(mapped, sample).value;
      } catch (const UndefinedMetric&) {
        ci_values[r] = std::nan("");
      }
      ibs_values[r] = integrated(brier_curve(mapped, sample, grid));
    }
    auto summarize = [](std::vector<double> v, MetricSummary& m) {
      std::erase_if(v, [](double x) { return std::isnan(x); });
      if (v.empty()) return;
      m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      m.std = sample_std(v, m.mean);
    };
    summarize(ci_values, report.c_index);
    summarize(ibs_values, report.ibs);
  } else {
    report.c_index.mean = report.c_index.point;
    report.ibs.mean = report.ibs.point;
  }
  return report;
}

namespace {

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["n_subjects"] = r.n_subjects;
  j["censoring_ratio"] = r.censoring_ratio;
  j["c_index"] = {{"point", r.c_index.point}, {"bootstrap_mean", r.c_index.mean}, {"bootstrap_std", r.c_index.std}};
  j["ibs"] = {{"point", r.ibs.point}, {"bootstrap_mean", r.ibs.mean}, {"bootstrap_std", r.ibs.std}};
  j["ibs_window"] = {r.t0, r.tmax};
  j["n_bootstrap"] = r.n_bootstrap;
  j["excluded_terms"] = r.excluded_terms;
  auto curve = nlohmann::ordered_json::array();
  for (const auto& p : r.brier_curve) curve.push_back({p.t, p.score});
  j["brier_curve"] = std::move(curve);
  return j;
}

}  // namespace

std::string to_json(const EvalReport& report) { return report_json(report).dump(2) + "\n"; }

std::string to_json(const std::vector<EvalReport>& reports) {
  nlohmann::ordered_json j;
  j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["reports"].push_back(report_json(r));
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  EvalReport r;
  r.model = j.at("model").get<std::string>();
  r.n_subjects = j.at("n_subjects").get<std::size_t>();
  r.censoring_ratio = j.at("censoring_ratio").get<double>();
  auto summary = [](const nlohmann::json& m) {
    return MetricSummary{m.at("point").get<double>(), m.at("bootstrap_mean").get<double>(),
                         m.at("bootstrap_std").get<double>()};
  };
  r.c_index = summary(j.at("c_index"));
  r.ibs = summary(j.at("ibs"));
  r.t0 = j.at("ibs_window").at(0).get<double>();
  r.tmax = j.at("ibs_window").at(1).get<double>();
  r.n_bootstrap = j.at("n_bootstrap").get<std::size_t>();
  r.excluded_terms = j.at("excluded_terms").get<std::size_t>();
  for (const auto& p : j.at("brier_curve")) r.brier_curve.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return r;
}

}  // namespace deepfht::metrics
