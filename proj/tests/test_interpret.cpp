#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "deepfht/interpret.hpp"
#include "deepfht/nonph.hpp"

using namespace deepfht;
using interpret::Source;
using fht::DistKind;

namespace {

fht::FhtParams levy(double x0, double d) { return {DistKind::Levy, x0, d}; }

std::vector<Source> random_sources(std::size_t n, std::uint64_t seed, DistKind kind = DistKind::Levy) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<Source> s;
  for (std::size_t i = 0; i < n; ++i) s.push_back({{kind, u(rng), kind == DistKind::Levy ? u(rng) : u(rng) - 2.5}, u(rng)});
  return s;
}

// Direct evaluation of the weighted mean, written independently.
double idw_direct(const fht::FhtParams& q, const std::vector<Source>& s) {
  auto emb = [](const fht::FhtParams& p) {
    return std::array<double, 2>{p.x0, p.kind == DistKind::Levy ? std::log(p.theta) : p.theta};
  };
  const auto a = emb(q);
  double num = 0, den = 0;
  for (const auto& src : s) {
    const auto b = emb(src.params);
    const double d = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]));
    const double w = 1.0 / std::sqrt(d);
    num += w * src.time;
    den += w;
  }
  return num / den;
}

}  // namespace

TEST_CASE("single source returns its time everywhere") {
  const std::vector<Source> s{{levy(1, 1), 2.5}};
  CHECK(interpret::idw_time(levy(3, 0.2), s) == 2.5);
  CHECK(interpret::idw_time(levy(1, 1), s) == 2.5);
}

TEST_CASE("equidistant sources give the plain mean") {
  const std::vector<Source> s{{levy(0, 1), 1.0}, {levy(2, 1), 5.0}};
  CHECK(interpret::idw_time(levy(1, 1), s) == doctest::Approx(3.0).epsilon(1e-15));
  const std::vector<Source> s3{{levy(1, std::exp(1.0)), 1.0}, {levy(1, std::exp(-1.0)), 2.0}, {levy(0, 1), 6.0},
                               {levy(2, 1), 3.0}};
  CHECK(interpret::idw_time(levy(1, 1), s3) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("exact hits return the source time") {
  const std::vector<Source> s{{levy(1, 2), 4.0}, {levy(1, 2), 6.0}, {levy(3, 3), 1.0}};
  CHECK(interpret::idw_time(levy(1, 2), s) == 5.0);
}

TEST_CASE("interpolation matches direct evaluation and stays in the hull") {
  const auto s = random_sources(40, 1);
  const double lo = std::min_element(s.begin(), s.end(), [](auto& a, auto& b) { return a.time < b.time; })->time;
  const double hi = std::max_element(s.begin(), s.end(), [](auto& a, auto& b) { return a.time < b.time; })->time;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 8.0);
  for (int i = 0; i < 200; ++i) {
    const auto q = levy(u(rng), u(rng));
    const double t = interpret::idw_time(q, s);
    CHECK(std::abs(t - idw_direct(q, s)) < 1e-12);
    CHECK(t >= lo);
    CHECK(t <= hi);
  }
}

TEST_CASE("interpolation ignores source order and time units") {
  auto s = random_sources(25, 3, DistKind::InverseGaussian);
  const fht::FhtParams q{DistKind::InverseGaussian, 1.3, -0.4};
  const double t = interpret::idw_time(q, s);
  std::mt19937_64 rng(4);
  std::shuffle(s.begin(), s.end(), rng);
  CHECK(interpret::idw_time(q, s) == doctest::Approx(t).epsilon(1e-14));
  for (auto& src : s) src.time *= 7.0;
  CHECK(interpret::idw_time(q, s) == doctest::Approx(7.0 * t).epsilon(1e-14));
}

TEST_CASE("raw metric measures theta directly") {
  CHECK(interpret::distance(levy(1, 1), levy(1, std::exp(2.0)), interpret::DistanceMetric::Default) ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(interpret::distance(levy(1, 1), levy(4, 5), interpret::DistanceMetric::Raw) == doctest::Approx(5.0));
}

TEST_CASE("interpolation errors") {
  CHECK_THROWS(interpret::idw_time(levy(1, 1), std::vector<Source>{}));
  CHECK_THROWS(interpret::parse_metric("cosine"));
  CHECK_THROWS(interpret::parse_scale("sqrt"));
}

TEST_CASE("risk grid encloses the sources and reproduces them") {
  auto s = random_sources(30, 5);
  std::vector<interpret::OverlayPoint> overlay{{levy(2, 2), 1.0, true}};
  interpret::RiskMapOptions opt;
  opt.resolution = 21;
  const auto map = interpret::risk_grid(s, DistKind::Levy, overlay, opt);
  REQUIRE(map.times.size() == 21 * 21);
  CHECK(map.n_sources == 30);
  for (const auto& src : s) {
    CHECK(src.params.x0 > map.x_axis.min);
    CHECK(src.params.x0 < map.x_axis.max);
    CHECK(src.params.theta > map.y_axis.min);
    CHECK(src.params.theta < map.y_axis.max);
  }
  for (std::size_t ix = 0; ix < 21; ix += 5) {
    for (std::size_t iy = 0; iy < 21; iy += 4) {
      const auto q = levy(map.x_axis.value(ix), map.y_axis.value(iy));
      if (q.theta <= 0) continue;
      CHECK(map.at(ix, iy) == doctest::Approx(interpret::idw_time(q, s)).epsilon(1e-14));
    }
  }
  CHECK(map.x_axis.value(20) == map.x_axis.max);

  // a source placed exactly on a grid node is reproduced there
  interpret::RiskMapOptions fixed;
  fixed.resolution = 5;
  fixed.x_axis = interpret::Axis{"x0", 1.0, 3.0, interpret::AxisScale::Linear, 5};
  fixed.y_axis = interpret::Axis{"D", 0.1, 10.0, interpret::AxisScale::Log, 5};
  std::vector<Source> on{{levy(1.5, 1.0), 9.0}, {levy(3.0, 10.0), 0.5}};
  const auto m2 = interpret::risk_grid(on, DistKind::Levy, {}, fixed);
  CHECK(m2.y_axis.value(2) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m2.at(1, 2) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(m2.at(4, 4) == 0.5);
}

TEST_CASE("risk map csv layout") {
  const auto s = random_sources(5, 6);
  std::vector<interpret::OverlayPoint> overlay{{levy(2, 2), 1.5, false}};
  interpret::RiskMapOptions opt;
  opt.resolution = 3;
  const auto map = interpret::risk_grid(s, DistKind::Levy, overlay, opt);
  std::ostringstream grid, over;
  interpret::write_grid_csv(grid, map);
  interpret::write_overlay_csv(over, map);
  std::istringstream in(grid.str());
  std::string line;
  std::size_t comments = 0, rows = 0;
  std::string header;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) ++comments;
    else if (header.empty()) header = line;
    else ++rows;
  }
  CHECK(comments > 0);
  CHECK(header == "x0,D,T");
  CHECK(rows == 9);
  CHECK(over.str().find("\nx0,D,time,event\n") != std::string::npos);
  CHECK(over.str().find("\n2,2,1.5,0") != std::string::npos);
}

TEST_CASE("leading component share") {
  std::vector<std::array<double, 2>> line{{0, 0}, {1, 2}, {2, 4}, {3, 6}};
  CHECK(interpret::leading_component_share(line) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<std::array<double, 2>> round{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  CHECK(interpret::leading_component_share(round) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("trained NonPH parameter cloud is not collinear") {
  nonph::NonPhConfig gen;
  gen.n_raw = 5000;
  gen.n_keep = 1200;
  gen.seed = 11;
  const auto d = nonph::generate_nonph(gen);
  train::TrainConfig cfg;
  cfg.epochs = 60;
  cfg.seed = 1;
  const std::vector<nn::LayerSpec> hidden{{16}, {16}};
  const auto model = train::fit(std::span(d).first(1000), DistKind::Levy, hidden, cfg);
  std::vector<std::array<double, 2>> pts;
  for (std::size_t i = 1000; i < d.size(); ++i) {
    pts.push_back(interpret::embed(model.params(d[i].x), interpret::DistanceMetric::Default));
  }
  CHECK(interpret::leading_component_share(pts) < 0.99);
}
