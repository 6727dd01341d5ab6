#include <doctest.h>

#include <cmath>
#include <random>

#include "deepfht/network.hpp"
#include "deepfht/train.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace deepfht;
using nn::Mode;

using namespace gradcheck;

TEST_CASE("link keeps parameters valid") {
  for (double r = -50.0; r <= 50.0; r += 0.5) {
    const auto l = nn::link(fht::DistKind::Levy, r, r);
    CHECK(l.x0 > 0.0);
    CHECK(l.theta > 0.0);
    const auto g = nn::link(fht::DistKind::InverseGaussian, r, r);
    CHECK(g.theta < 0.0);
    CHECK(std::isfinite(g.theta));
  }
  CHECK(nn::softplus(nn::softplus_inverse(0.3)) == doctest::Approx(0.3).epsilon(1e-14));
  const auto d = nn::link_derivative(fht::DistKind::InverseGaussian, 0.2, 0.7);
  CHECK(d[1] == doctest::Approx(-1.0 / (1.0 + std::exp(-0.7))).epsilon(1e-14));
}

TEST_CASE("zero weights give identical parameters") {
  auto net = nn::Network::init(two_layer(fht::DistKind::Levy), 1);
  for (auto block : net.parameters()) std::fill(block.begin(), block.end(), 0.0);
  const auto params = net.predict(random_matrix(6, 3, 2));
  for (const auto& p : params) {
    CHECK(p.x0 == doctest::Approx(std::log(2.0) + nn::kLinkEpsilon).epsilon(1e-15));
    CHECK(p.x0 == params[0].x0);
    CHECK(p.theta == params[0].theta);
  }
}

TEST_CASE("initial parameters are (1, 1) or (1, -0.1) for a zero hidden state") {
  nn::NetworkSpec spec{3, {}, fht::DistKind::Levy};
  auto levy = nn::Network::init(spec, 4);
  std::fill(levy.output().weight.begin(), levy.output().weight.end(), 0.0);
  const auto p = levy.predict_one(std::vector<double>{0.1, 0.2, 0.3});
  CHECK(p.x0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.theta == doctest::Approx(1.0).epsilon(1e-12));
  spec.kind = fht::DistKind::InverseGaussian;
  auto ig = nn::Network::init(spec, 4);
  std::fill(ig.output().weight.begin(), ig.output().weight.end(), 0.0);
  CHECK(ig.predict_one(std::vector<double>{0.0, 0.0, 0.0}).theta == doctest::Approx(-0.1).epsilon(1e-12));
}

TEST_CASE("eval mode is deterministic and does not touch the RNG") {
  auto net = nn::Network::init(two_layer(fht::DistKind::Levy, nn::Activation::Relu, 0.3), 7);
  const Matrix x = random_matrix(5, 3, 3);
  const auto state = net.rng_state();
  const auto a = net.predict(x);
  const auto b = net.forward(x, Mode::Eval).params;
  CHECK(net.rng_state() == state);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x0 == b[i].x0);
    CHECK(a[i].theta == b[i].theta);
    const auto one = net.predict_one(x.row(i));
    CHECK(one.x0 == a[i].x0);
  }
}

TEST_CASE("train-mode batch norm standardizes each feature") {
  auto net = nn::Network::init(two_layer(fht::DistKind::Levy), 5);
  const auto fwd = net.forward(random_matrix(8, 3, 9), Mode::Train);
  for (const auto& h : fwd.cache.hidden) {
    for (std::size_t c = 0; c < h.normalized.cols(); ++c) {
      double mean = 0.0;
      double sq = 0.0;
      for (std::size_t i = 0; i < 8; ++i) mean += h.normalized(i, c);
      mean /= 8;
      for (std::size_t i = 0; i < 8; ++i) sq += (h.normalized(i, c) - mean) * (h.normalized(i, c) - mean);
      CHECK(std::abs(mean) < 1e-12);
      // Biased batch variance, shrunk slightly by the variance epsilon.
      const double var = sq / 8;
      CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
      CHECK(var < 1.0);
    }
  }
}

TEST_CASE("running statistics follow the batch statistics") {
  auto net = nn::Network::init({2, {{3, nn::Activation::Relu, 0.0, true}}, fht::DistKind::Levy}, 3);
  const Matrix x = random_matrix(6, 2, 1);
  net.forward(x, Mode::Train);
  const auto& h = net.hidden()[0];
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0.0;
    std::vector<double> z(6);
    for (std::size_t i = 0; i < 6; ++i) {
      z[i] = h.bias[c];
      for (std::size_t j = 0; j < 2; ++j) z[i] += h.weight[c * 2 + j] * x(i, j);
      mean += z[i];
    }
    mean /= 6;
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    CHECK(h.running_mean[c] == doctest::Approx(0.1 * mean).epsilon(1e-12));
    CHECK(h.running_var[c] == doctest::Approx(0.9 + 0.1 * ss / 5).epsilon(1e-12));
  }
}

TEST_CASE("running statistics converge") {
  auto net = nn::Network::init(two_layer(fht::DistKind::Levy, nn::Activation::Relu), 8);
  const Matrix probe = random_matrix(10, 3, 100);
  std::vector<fht::FhtParams> prev;
  double drift = 1.0;
  for (int epoch = 0; epoch < 200; ++epoch) {
    for (int b = 0; b < 4; ++b) net.forward(random_matrix(64, 3, 1000 + b), Mode::Train);
    const auto cur = net.predict(probe);
    if (!prev.empty()) {
      drift = 0.0;
      for (std::size_t i = 0; i < cur.size(); ++i) {
        drift = std::max({drift, std::abs(cur[i].x0 - prev[i].x0), std::abs(cur[i].theta - prev[i].theta)});
      }
    }
    prev = cur;
  }
  CHECK(drift < 1e-3);
}

TEST_CASE("batch of one in train mode is rejected") {
  auto net = nn::Network::init(two_layer(fht::DistKind::Levy), 1);
  CHECK_THROWS(net.forward(random_matrix(1, 3, 1), Mode::Train));
  CHECK_NOTHROW(net.forward(random_matrix(1, 3, 1), Mode::Eval));
  CHECK_THROWS(net.predict(random_matrix(2, 4, 1)));
}

TEST_CASE("init is reproducible and seed dependent") {
  const auto spec = two_layer(fht::DistKind::InverseGaussian, nn::Activation::Elu, 0.2);
  const auto a = nn::Network::init(spec, 42);
  const auto b = nn::Network::init(spec, 42);
  const auto c = nn::Network::init(spec, 43);
  CHECK(a == b);
  CHECK(a.hidden()[0].weight != c.hidden()[0].weight);
}

TEST_CASE("fan-in scaled initialization") {
  for (auto [act, target] : {std::pair{nn::Activation::Relu, 2.0}, std::pair{nn::Activation::Tanh, 2.0 / (50 + 40)}}) {
    const nn::NetworkSpec spec{50, {{40, act, 0.0, true}}, fht::DistKind::Levy};
    const auto net = nn::Network::init(spec, 9);
    const Matrix x = random_matrix(10000, 50, 10);
    const auto& h = net.hidden()[0];
    double ss = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      for (std::size_t c = 0; c < 40; ++c) {
        double z = 0.0;
        for (std::size_t j = 0; j < 50; ++j) z += h.weight[c * 50 + j] * x(i, j);
        ss += z * z;
        ++count;
      }
    }
    // Target Var(w) * fan_in for unit-variance inputs.
    const double expected = act == nn::Activation::Relu ? target : target * 50;
    const double var = ss / count;
    CHECK(var > expected / 2);
    CHECK(var < expected * 2);
  }
}

TEST_CASE("zero upstream gradient gives zero gradients") {
  auto net = nn::Network::init(two_layer(fht::DistKind::Levy), 3);
  const auto fwd = net.forward(random_matrix(4, 3, 5), Mode::Train);
  const auto g = net.backward(fwd.cache, Matrix(4, 2));
  CHECK(g.all_zero());
  CHECK_THROWS(net.backward(fwd.cache, Matrix(3, 2)));
}

TEST_CASE("single affine layer matches the hand-computed gradient") {
  nn::NetworkSpec spec{2, {}, fht::DistKind::Levy};
  auto net = nn::Network::init(spec, 1);
  net.output().weight = {0.5, -0.25, 0.75, 0.1};
  net.output().bias = {0.2, -0.3};
  Matrix x(2, 2);
  x(0, 0) = 1.0;
  x(0, 1) = 2.0;
  x(1, 0) = -1.0;
  x(1, 1) = 0.5;
  const double y[2][2] = {{1.0, 0.5}, {2.0, 1.5}};
  auto fwd = net.forward(x, Mode::Eval);
  // L = 1/2 sum (p - y)^2 over both outputs.
  Matrix gp(2, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    gp(i, 0) = fwd.params[i].x0 - y[i][0];
    gp(i, 1) = fwd.params[i].theta - y[i][1];
  }
  const auto g = net.backward(fwd.cache, gp);
  const auto& dw = g.blocks[0];
  const auto& db = g.blocks[1];
  auto sigmoid = [](double r) { return 1.0 / (1.0 + std::exp(-r)); };
  for (std::size_t o = 0; o < 2; ++o) {
    double expect_b = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      const double r = net.output().bias[o] + net.output().weight[o * 2] * x(i, 0) + net.output().weight[o * 2 + 1] * x(i, 1);
      expect_b += gp(i, o) * sigmoid(r);
    }
    CHECK(db[o] == doctest::Approx(expect_b).epsilon(1e-14));
    for (std::size_t j = 0; j < 2; ++j) {
      double expect_w = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        const double r = net.output().bias[o] + net.output().weight[o * 2] * x(i, 0) + net.output().weight[o * 2 + 1] * x(i, 1);
        expect_w += gp(i, o) * sigmoid(r) * x(i, j);
      }
      CHECK(dw[o * 2 + j] == doctest::Approx(expect_w).epsilon(1e-14));
    }
  }
}

TEST_CASE("end-to-end gradients match finite differences") {
  const Toy toy = toy_problem();
  for (auto kind : {fht::DistKind::Levy, fht::DistKind::InverseGaussian}) {
    for (auto act : {nn::Activation::Tanh, nn::Activation::Elu, nn::Activation::Relu}) {
      auto net = nn::Network::init(two_layer(kind, act), 21);
      jitter(net, 22);
      CAPTURE(fht::to_string(kind));
      CAPTURE(nn::to_string(act));
      CHECK(max_relative_error(net, toy, Mode::Eval, 1e-7) < 1e-4);
      CHECK(max_relative_error(net, toy, Mode::Train, 1e-6) < 1e-4);
    }
  }
}

TEST_CASE("dropout masks scale surviving units") {
  auto net = nn::Network::init({3, {{200, nn::Activation::Relu, 0.25, true}}, fht::DistKind::Levy}, 2);
  const auto fwd = net.forward(random_matrix(16, 3, 4), Mode::Train);
  const auto& mask = fwd.cache.hidden[0].mask;
  REQUIRE(mask.size() == 16 * 200);
  double kept = 0.0;
  for (double m : mask) {
    CHECK((m == 0.0 || m == doctest::Approx(1.0 / 0.75)));
    if (m != 0.0) ++kept;
  }
  CHECK(kept / mask.size() == doctest::Approx(0.75).epsilon(0.05));
}
