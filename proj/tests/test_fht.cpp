#include <doctest.h>

#include <cmath>
#include <limits>

#include "deepfht/fht.hpp"
#include "oracles.hpp"

using namespace deepfht::fht;

namespace {

constexpr double kTinyDrift = -1e-300;

double ig_oracle(double x0, double mu, double t) {
  // Phi(a) - exp(-mu x0 + log Phi(b)) in long double.
  const long double a = (x0 + mu * t) / std::sqrt(2.0L * t);
  const long double b = (mu * t - x0) / std::sqrt(2.0L * t);
  return static_cast<double>(oracle::norm_cdf_ld(a) -
                             std::exp(-static_cast<long double>(mu) * x0 + std::log(oracle::norm_cdf_ld(b))));
}

}  // namespace

TEST_CASE("levy survival and density") {
  const LevyParams p{1.0, 1.0};
  CHECK(levy_survival(p, 1.0) == doctest::Approx(0.5204998778130465).epsilon(1e-14));
  const double fd = -oracle::central_diff([&](double t) { return levy_survival(p, t); }, 1.0, 1e-6);
  CHECK(fd == doctest::Approx(0.219696).epsilon(1e-5));
  CHECK(levy_density(p, 1.0) == doctest::Approx(fd).epsilon(1e-8));
  CHECK(levy_density(p, 1.0) == doctest::Approx(std::exp(-0.25) / (2 * std::sqrt(M_PI))).epsilon(1e-14));
  CHECK(std::log(levy_density(p, 1.0)) == doctest::Approx(levy_log_density(p, 1.0)).epsilon(1e-14));
}

TEST_CASE("levy density uses D once in the normalizer") {
  const LevyParams p{2.0, 0.5};
  for (double t : {0.3, 1.0, 4.0}) {
    const double fd = -oracle::central_diff([&](double s) { return levy_survival(p, s); }, t, 1e-6);
    CHECK(levy_density(p, t) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("densities integrate to one") {
  const double levy = oracle::integrate_positive([](double t) { return levy_density({1.0, 1.0}, t); });
  CHECK(std::abs(levy - 1.0) < 1e-6);
  const double ig = oracle::integrate_positive([](double t) { return ig_density({1.0, -0.5}, t); });
  CHECK(std::abs(ig - 1.0) < 1e-6);
}

TEST_CASE("inverse gaussian survival") {
  CHECK(ig_survival({1.0, kTinyDrift}, 0.25) == doctest::Approx(0.8427007929497149).epsilon(1e-14));
  CHECK(ig_survival({1.0, -1.0}, 1e6) == 0.0);
  CHECK(ig_survival({1.0, -1.0}, 200.0) == doctest::Approx(ig_oracle(1.0, -1.0, 200.0)).epsilon(1e-10));
  const double mass = oracle::integrate([](double t) { return ig_density({1.0, -1.0}, t); }, 0.0, 1.0);
  CHECK(ig_survival({1.0, -1.0}, 1.0) == doctest::Approx(1.0 - mass).epsilon(1e-12));
  for (double t : {0.01, 0.3, 2.0, 9.0}) {
    CHECK(ig_survival({1.3, -0.7}, t) == doctest::Approx(ig_oracle(1.3, -0.7, t)).epsilon(1e-13));
  }
}

TEST_CASE("inverse gaussian density") {
  CHECK(ig_density({1.0, kTinyDrift}, 1.0) == doctest::Approx(levy_density({1.0, 1.0}, 1.0)).epsilon(1e-14));
  CHECK(ig_density({1.0, -1.0}, 1e-6) < 1e-100);
  CHECK(std::log(ig_density({2.0, -3.0}, 0.4)) == doctest::Approx(ig_log_density({2.0, -3.0}, 0.4)).epsilon(1e-13));
}

TEST_CASE("inverse gaussian survival does not overflow for large drift") {
  for (auto [x0, mu] : {std::pair{5.0, -800.0}, std::pair{30.0, -200.0}, std::pair{1.0, -1e4}}) {
    for (double t : {1e-4, 1e-3, x0 / -mu, 0.05, 1.0}) {
      const double s = ig_survival({x0, mu}, t);
      CHECK(std::isfinite(s));
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      CHECK(std::abs(s - ig_oracle(x0, mu, t)) < 1e-12);
    }
  }
}

TEST_CASE("survival is monotone in t") {
  for (double x0 : {0.1, 1.0, 5.0}) {
    double prev_l = 1.0;
    double prev_i = 1.0;
    for (double t = 1e-3; t < 100; t *= 1.3) {
      const double sl = levy_survival({x0, 0.7}, t);
      const double si = ig_survival({x0, -0.4}, t);
      CHECK(sl <= prev_l);
      CHECK(si <= prev_i);
      prev_l = sl;
      prev_i = si;
    }
  }
}

TEST_CASE("finite differences of S match f") {
  for (const auto& fp : {FhtParams{DistKind::Levy, 1.0, 1.0}, FhtParams{DistKind::Levy, 2.0, 0.5},
                         FhtParams{DistKind::InverseGaussian, 1.0, -0.5}, FhtParams{DistKind::InverseGaussian, 2.0, -1.0}}) {
    for (int k = 0; k < 50; ++k) {
      const double t = 0.01 * std::pow(1e4, k / 49.0);
      const double f = density(fp, t);
      if (f < 1e-8) continue;
      const double fd = -oracle::ridders_diff([&](double s) { return survival(fp, s); }, t, 0.1 * t);
      CHECK(std::abs(fd - f) / f < 1e-5);
    }
  }
}

TEST_CASE("inverse gaussian reduces to levy as the drift vanishes") {
  for (double t = 0.01; t <= 10.0; t *= 1.1) {
    CHECK(std::abs(ig_survival({1.0, -1e-8}, t) - levy_survival({1.0, 1.0}, t)) < 1e-6);
  }
}

TEST_CASE("levy gradient") {
  const auto g = levy_survival_grad({1.0, 1.0}, 1.0);
  CHECK(g.d_x0 == doctest::Approx(0.439392).epsilon(1e-5));
  CHECK(g.d_x0 > 0.0);
  CHECK(g.d_D < 0.0);
  // S depends on x0 / sqrt(D) only: D dS/dD = -x0/2 dS/dx0.
  CHECK(g.d_D == doctest::Approx(-0.5 * g.d_x0).epsilon(1e-14));
}

TEST_CASE("analytic gradients match central differences") {
  const double h = 1e-6;
  for (double t : {0.05, 0.5, 1.0, 3.0, 10.0}) {
    for (auto [x0, D] : {std::pair{1.0, 1.0}, std::pair{2.0, 0.5}, std::pair{0.3, 3.0}}) {
      const auto g = levy_survival_grad({x0, D}, t);
      const double fx = oracle::central_diff([&](double v) { return levy_survival({v, D}, t); }, x0, h);
      const double fD = oracle::central_diff([&](double v) { return levy_survival({x0, v}, t); }, D, h);
      if (std::abs(fx) > 1e-8) CHECK(std::abs(g.d_x0 - fx) / std::abs(fx) < 1e-5);
      if (std::abs(fD) > 1e-8) CHECK(std::abs(g.d_D - fD) / std::abs(fD) < 1e-5);
    }
    for (auto [x0, mu] : {std::pair{1.0, -1.0}, std::pair{2.0, -0.3}, std::pair{0.5, -4.0}}) {
      const auto g = ig_survival_grad({x0, mu}, t);
      const double fx = oracle::central_diff([&](double v) { return ig_survival({v, mu}, t); }, x0, h);
      const double fm = oracle::central_diff([&](double v) { return ig_survival({x0, v}, t); }, mu, h);
      if (std::abs(fx) > 1e-8) CHECK(std::abs(g.d_x0 - fx) / std::abs(fx) < 1e-5);
      if (std::abs(fm) > 1e-8) CHECK(std::abs(g.d_mu - fm) / std::abs(fm) < 1e-5);
    }
  }
}

TEST_CASE("survival_with_grad matches the separate calls") {
  for (const auto& fp : {FhtParams{DistKind::Levy, 1.2, 0.8}, FhtParams{DistKind::InverseGaussian, 0.7, -2.0}}) {
    for (double t : {0.1, 1.0, 7.0}) {
      const auto sg = survival_with_grad(fp, t);
      CHECK(sg.value == doctest::Approx(survival(fp, t)).epsilon(1e-15));
      const auto g = survival_grad(fp, t);
      CHECK(sg.grad[0] == doctest::Approx(g[0]).epsilon(1e-14));
      CHECK(sg.grad[1] == doctest::Approx(g[1]).epsilon(1e-14));
    }
  }
}

TEST_CASE("transition density") {
  CHECK(transition_density(LevyParams{1.0, 1.0}, 0.0, 1.0) == 0.0);
  CHECK(transition_density(InvGaussParams{1.0, -1.0}, 0.0, 1.0) == 0.0);
  const double mass = oracle::integrate([](double x) { return transition_density(LevyParams{1.0, 1.0}, x, 1.0); },
                                        0.0, 40.0);
  CHECK(mass == doctest::Approx(0.5204998778130465).epsilon(1e-9));
  for (double t : {0.2, 1.0, 3.0}) {
    const double m = oracle::integrate([&](double x) { return transition_density(InvGaussParams{1.0, -1.0}, x, t); },
                                       0.0, 60.0);
    CHECK(std::abs(m - ig_survival({1.0, -1.0}, t)) < 1e-8);
  }
  CHECK(transition_density(LevyParams{1.0, 1.0}, 1e-12, 1.0) >= 0.0);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(levy_survival({1.0, 1.0}, 0.0), DomainError);
  CHECK_THROWS_AS(levy_survival({1.0, 1.0}, -1.0), DomainError);
  CHECK_THROWS_AS(ig_density({1.0, -1.0}, std::numeric_limits<double>::quiet_NaN()), DomainError);
  CHECK_THROWS_AS(levy_survival({0.0, 1.0}, 1.0), DomainError);
  CHECK_THROWS_AS(levy_survival({1.0, 0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(ig_survival({1.0, 0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(ig_survival({1.0, 0.5}, 1.0), DomainError);
  CHECK_THROWS_AS(transition_density(LevyParams{1.0, 1.0}, -0.1, 1.0), DomainError);
  CHECK(parse_dist_kind("levy") == DistKind::Levy);
  CHECK(parse_dist_kind("invgauss") == DistKind::InverseGaussian);
  CHECK_THROWS(parse_dist_kind("weibull"));
}
