#include <doctest.h>

#include <cmath>
#include <random>

#include "deepfht/metrics.hpp"
#include "deepfht/train.hpp"
#include "oracles.hpp"

using namespace deepfht;
using data::SurvivalRecord;

namespace {

std::vector<SurvivalRecord> recs(std::initializer_list<std::pair<double, bool>> rows) {
  std::vector<SurvivalRecord> out;
  for (auto [t, e] : rows) out.push_back({{}, e, t});
  return out;
}

train::SurvivalFn constant(std::vector<double> s) {
  return [s = std::move(s)](double, std::size_t i) { return s[i]; };
}

std::vector<oracle::Subject> subjects(const std::vector<SurvivalRecord>& r) {
  std::vector<oracle::Subject> out;
  for (const auto& x : r) out.push_back({x.time, x.event});
  return out;
}

}  // namespace

TEST_CASE("censoring Kaplan-Meier") {
  const auto none = metrics::km_censoring(recs({{1, true}, {2, true}, {3, true}}));
  for (double t : {0.5, 1.0, 2.5, 3.0}) CHECK(none.at(t) == 1.0);

  const auto all = metrics::km_censoring(recs({{1, false}, {2, false}, {3, false}}));
  CHECK(all.at(0.5) == 1.0);
  CHECK(all.at(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(all.at(2.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(all.at(3.0) == 0.0);
  CHECK(all.before(2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const auto g = metrics::km_censoring(recs({{1, false}, {2, true}}));
  CHECK(g.before(1.0) == 1.0);
  CHECK(g.at(1.0) == 0.5);
  CHECK(g.at(5.0) == 0.5);
}

TEST_CASE("event Kaplan-Meier handles ties by grouping") {
  const auto km = metrics::kaplan_meier(recs({{1, true}, {1, true}, {1, false}, {2, true}, {3, false}}));
  CHECK(km.at(1.0) == doctest::Approx(3.0 / 5.0).epsilon(1e-15));
  CHECK(km.at(2.0) == doctest::Approx(3.0 / 5.0 * 1.0 / 2.0).epsilon(1e-15));
  CHECK(km.at(10.0) == km.at(2.0));
}

TEST_CASE("concordance on ordered curves") {
  const auto d = recs({{1, true}, {2, true}, {3, true}});
  CHECK(metrics::antolini_cindex(constant({0.1, 0.5, 0.9}), d).value == 1.0);
  CHECK(metrics::antolini_cindex(constant({0.9, 0.5, 0.1}), d).value == 0.0);
  CHECK(metrics::antolini_cindex(constant({0.5, 0.5, 0.5}), d).value == 0.5);
}

TEST_CASE("concordance with one censored subject, by hand") {
  // G drops to 2/3 at t = 2; anchor 1 has weight 1 and three partners, anchor
  // 3 has weight 9/4 and one partner.
  const auto d = recs({{1, true}, {2, false}, {3, true}, {4, true}});
  const auto r = metrics::antolini_cindex(constant({0.6, 0.5, 0.4, 0.9}), d);
  CHECK(r.value == doctest::Approx(13.0 / 21.0).epsilon(1e-15));
  CHECK(r.comparable_pairs == 4);
  const auto u = metrics::antolini_cindex(constant({0.6, 0.5, 0.4, 0.9}), d, metrics::Weighting::Unweighted);
  CHECK(u.value == doctest::Approx(2.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("tied times are not comparable") {
  const auto d = recs({{1, true}, {1, true}, {2, true}});
  const auto r = metrics::antolini_cindex(constant({0.2, 0.9, 0.5}), d);
  CHECK(r.comparable_pairs == 2);
  CHECK(r.value == 0.5);
  CHECK_THROWS_AS(metrics::antolini_cindex(constant({0.2, 0.3}), recs({{1, false}, {2, true}})),
                  metrics::UndefinedMetric);
}

TEST_CASE("concordance matches exact pair enumeration on small random data") {
  std::mt19937_64 rng(123);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<SurvivalRecord> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back({{}, rng() % 3 != 0, 1.0 + static_cast<double>(rng() % 4)});
    std::vector<double> rate(n);
    for (auto& r : rate) r = 0.1 + static_cast<double>(rng() % 5) * 0.2;
    auto s = [&](double t, std::size_t i) { return std::exp(-rate[i] * t); };
    const auto o = subjects(d);
    bool defined = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) defined = defined || (d[i].event && d[i].time < d[j].time);
    }
    if (!defined) {
      CHECK_THROWS_AS(metrics::antolini_cindex(s, d), metrics::UndefinedMetric);
      continue;
    }
    const auto exact = oracle::cindex_exact(o, s);
    const double expect = boost::rational_cast<double>(exact);
    CHECK(metrics::antolini_cindex(s, d).value == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("random predictor has concordance one half") {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SurvivalRecord> d;
  std::vector<double> s;
  for (int i = 0; i < 1000; ++i) {
    d.push_back({{}, true, e(rng)});
    s.push_back(u(rng));
  }
  CHECK(std::abs(metrics::antolini_cindex(constant(s), d).value - 0.5) < 0.03);
}

TEST_CASE("concordance is a rank statistic") {
  std::mt19937_64 rng(6);
  std::exponential_distribution<double> e(1.0);
  std::vector<SurvivalRecord> d;
  std::vector<double> rate;
  for (int i = 0; i < 200; ++i) {
    d.push_back({{}, i % 4 != 0, e(rng)});
    rate.push_back(0.5 + e(rng));
  }
  auto s = [&](double t, std::size_t i) { return std::exp(-rate[i] * t); };
  auto s3 = [&](double t, std::size_t i) { return std::pow(s(t, i), 3.0) * 0.5; };
  CHECK(metrics::antolini_cindex(s, d).value == metrics::antolini_cindex(s3, d).value);
  CHECK(metrics::antolini_cindex(s, d).value == doctest::Approx(oracle::cindex(subjects(d), s)).epsilon(1e-12));
}

TEST_CASE("brier curve") {
  std::vector<SurvivalRecord> d;
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < 50; ++i) d.push_back({{}, true, e(rng)});
  const std::vector<double> grid{0.1, 0.5, 1.0, 2.0};
  for (const auto& p : metrics::brier_curve(constant(std::vector<double>(50, 0.5)), d, grid).points) {
    CHECK(std::abs(p.score - 0.25) < 1e-12);
  }
  auto step = [&](double t, std::size_t i) { return t < d[i].time ? 1.0 : 0.0; };
  for (const auto& p : metrics::brier_curve(step, d, grid).points) CHECK(p.score == 0.0);
}

TEST_CASE("brier curve with one censored subject, by hand") {
  const auto d = recs({{1, true}, {2, false}, {3, true}});
  const std::vector<double> grid{1.5, 2.5};
  const auto c = metrics::brier_curve(constant({0.3, 0.6, 0.8}), d, grid);
  CHECK(c.points[0].score == doctest::Approx(0.29 / 3).epsilon(1e-14));
  CHECK(c.points[1].score == doctest::Approx(0.17 / 3).epsilon(1e-14));
}

TEST_CASE("unweighted brier curve is the training loss per subject") {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  std::vector<SurvivalRecord> d;
  for (int i = 0; i < 40; ++i) d.push_back({{}, i % 3 != 0, e(rng)});
  auto s = [&](double t, std::size_t i) { return std::exp(-(0.5 + 0.01 * i) * t); };
  const auto u = train::unique_event_times(d);
  const auto c = metrics::brier_curve(s, d, u, metrics::Weighting::Unweighted);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const std::vector<double> one{u[k]};
    CHECK(c.points[k].score == doctest::Approx(train::brier_loss(s, d, one).value / 40).epsilon(1e-13));
  }
}

TEST_CASE("integrated brier score") {
  const std::vector<metrics::BrierPoint> flat{{0.0, 0.25}, {0.5, 0.25}, {1.0, 0.25}};
  CHECK(metrics::ibs(flat, 0.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<metrics::BrierPoint> ramp{{0.0, 0.0}, {1.0, 0.5}};
  CHECK(metrics::ibs(ramp, 0.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
  const std::vector<metrics::BrierPoint> bumpy{{0.0, 0.0}, {0.3, 0.2}, {0.4, 0.05}, {1.0, 0.1}};
  const double v = metrics::ibs(bumpy, 0.0, 1.0);
  CHECK(v >= 0.0);
  CHECK(v <= 0.2);
  CHECK(v == doctest::Approx((0.03 + 0.0125 + 0.045)).epsilon(1e-14));
  CHECK_THROWS(metrics::ibs(flat, 1.0, 1.0));
}

TEST_CASE("bootstrap") {
  std::vector<SurvivalRecord> d;
  for (int i = 0; i < 30; ++i) d.push_back({{}, i % 3 != 0, 1.0 + i});
  const auto flat = metrics::bootstrap([](std::span<const std::size_t>) { return 0.7; }, d, 20, 1);
  CHECK(flat.mean == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(flat.std < 1e-15);
  for (std::size_t r = 0; r < 10; ++r) {
    const auto idx = metrics::stratified_resample(d, 3, r);
    CHECK(idx.size() == d.size());
    std::size_t censored = 0;
    for (auto i : idx) censored += !d[i].event;
    CHECK(censored == 10);
  }
  auto mean_time = [&](std::span<const std::size_t> idx) {
    double s = 0;
    for (auto i : idx) s += d[i].time;
    return s / static_cast<double>(idx.size());
  };
  const auto a = metrics::bootstrap(mean_time, d, 50, 11, 1);
  const auto b = metrics::bootstrap(mean_time, d, 50, 11, 4);
  CHECK(a.values == b.values);
  CHECK(a.std > 0.0);
  CHECK_THROWS(metrics::bootstrap(mean_time, d, 1, 11));
}

TEST_CASE("evaluation report round-trips through JSON") {
  std::vector<SurvivalRecord> d;
  std::mt19937_64 rng(10);
  std::exponential_distribution<double> e(1.0);
  for (int i = 0; i < 60; ++i) d.push_back({{}, i % 4 != 0, e(rng)});
  auto s = [&](double t, std::size_t i) { return std::exp(-(0.5 + 0.02 * i) * t); };
  const auto r = metrics::evaluate("toy", s, d, 10, 3);
  CHECK(r.n_subjects == 60);
  CHECK(r.censoring_ratio == 0.25);
  CHECK(r.brier_curve.size() == 100);
  CHECK(r.ibs.point >= 0.0);
  CHECK(r.c_index.std >= 0.0);
  const auto back = metrics::report_from_json(metrics::to_json(r));
  CHECK(metrics::to_json(back) == metrics::to_json(r));
  CHECK(back.c_index.point == r.c_index.point);
}
