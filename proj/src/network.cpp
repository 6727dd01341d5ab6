#include "deepfht/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace deepfht::nn {
namespace {

double activate(Activation a, double u) {
  switch (a) {
    case Activation::Relu:
      return u > 0.0 ? u : 0.0;
    case Activation::Elu:
      return u > 0.0 ? u : std::expm1(u);
    case Activation::Tanh:
      return std::tanh(u);
  }
  return u;
}

double activate_derivative(Activation a, double u) {
  switch (a) {
    case Activation::Relu:
      return u > 0.0 ? 1.0 : 0.0;
    case Activation::Elu:
      return u > 0.0 ? 1.0 : std::exp(u);
    case Activation::Tanh: {
      const double t = std::tanh(u);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

double sigmoid(double r) {
  if (r >= 0.0) return 1.0 / (1.0 + std::exp(-r));
  const double e = std::exp(r);
  return e / (1.0 + e);
}

// out = in * W^T + b, W is rows x in.cols()
Matrix affine(const Matrix& in, const std::vector<double>& w, const std::vector<double>& b, std::size_t rows) {
  const std::size_t n = in.rows();
  const std::size_t k = in.cols();
  Matrix out(n, rows);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = in.row(i);
    for (std::size_t o = 0; o < rows; ++o) {
      const double* wr = w.data() + o * k;
      double acc = b[o];
      for (std::size_t c = 0; c < k; ++c) acc += wr[c] * x[c];
      out(i, o) = acc;
    }
  }
  return out;
}

// Accumulates dW = dout^T in, db = sum dout; returns din = dout W.
Matrix affine_backward(const Matrix& in, const Matrix& dout, const std::vector<double>& w,
                       std::vector<double>& dw, std::vector<double>& db) {
  const std::size_t n = in.rows();
  const std::size_t k = in.cols();
  const std::size_t rows = dout.cols();
  Matrix din(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = in.row(i);
    auto dx = din.row(i);
    for (std::size_t o = 0; o < rows; ++o) {
      const double g = dout(i, o);
      if (g == 0.0) continue;
      db[o] += g;
      double* dwr = dw.data() + o * k;
      const double* wr = w.data() + o * k;
      for (std::size_t c = 0; c < k; ++c) {
        dwr[c] += g * x[c];
        dx[c] += g * wr[c];
      }
    }
  }
  return din;
}

}  // namespace

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Relu:
      return "relu";
    case Activation::Elu:
      return "elu";
    case Activation::Tanh:
      return "tanh";
  }
  return "unknown";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "elu") return Activation::Elu;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "' (expected relu, elu or tanh)");
}

void validate(const NetworkSpec& spec) {
  for (const auto& layer : spec.hidden) {
    if (layer.width == 0) throw std::invalid_argument("hidden layer width must be >= 1");
    if (!(layer.dropout_p >= 0.0 && layer.dropout_p < 1.0)) {
      throw std::invalid_argument("dropout probability must lie in [0, 1)");
    }
  }
}

double softplus(double r) { return std::max(r, 0.0) + std::log1p(std::exp(-std::abs(r))); }

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw std::domain_error("softplus inverse needs y > 0");
  // log(exp(y) - 1) = y + log(1 - exp(-y))
  return y + std::log(-std::expm1(-y));
}

fht::FhtParams link(fht::DistKind kind, double r1, double r2) {
  const double x0 = softplus(r1) + kLinkEpsilon;
  const double s = softplus(r2) + kLinkEpsilon;
  return {kind, x0, kind == fht::DistKind::Levy ? s : -s};
}

std::array<double, 2> link_derivative(fht::DistKind kind, double r1, double r2) {
  const double d2 = sigmoid(r2);
  return {sigmoid(r1), kind == fht::DistKind::Levy ? d2 : -d2};
}

void Gradients::zero() {
  for (auto& b : blocks) std::fill(b.begin(), b.end(), 0.0);
}

bool Gradients::all_zero() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [](const auto& b) { return std::all_of(b.begin(), b.end(), [](double v) { return v == 0.0; }); });
}

Network make_network_for_io(const NetworkSpec& spec) {
  validate(spec);
  Network net;
  net.spec_ = spec;
  std::size_t in = spec.input_dim;
  for (const auto& ls : spec.hidden) {
    HiddenLayer h;
    h.spec = ls;
    h.in = in;
    h.weight.assign(ls.width * in, 0.0);
    h.bias.assign(ls.width, 0.0);
    h.gamma.assign(ls.width, 1.0);
    h.beta.assign(ls.width, 0.0);
    h.running_mean.assign(ls.width, 0.0);
    h.running_var.assign(ls.width, 1.0);
    net.hidden_.push_back(std::move(h));
    in = ls.width;
  }
  net.output_.in = in;
  net.output_.weight.assign(2 * in, 0.0);
  net.output_.bias.assign(2, 0.0);
  return net;
}

Network Network::init(const NetworkSpec& spec, std::uint64_t seed) {
  Network net = make_network_for_io(spec);
  std::mt19937_64 init_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  for (auto& h : net.hidden_) {
    const double fan_in = static_cast<double>(std::max<std::size_t>(h.in, 1));
    const double fan_out = static_cast<double>(h.spec.width);
    const double sd = h.spec.activation == Activation::Tanh ? std::sqrt(2.0 / (fan_in + fan_out))
                                                            : std::sqrt(2.0 / fan_in);
    for (double& w : h.weight) w = sd * normal(init_rng);
  }
  const double fan_in = static_cast<double>(std::max<std::size_t>(net.output_.in, 1));
  const double sd = std::sqrt(2.0 / (fan_in + 2.0));
  for (double& w : net.output_.weight) w = sd * normal(init_rng);

  const double theta0 = spec.kind == fht::DistKind::Levy ? 1.0 : 0.1;
  net.output_.bias[0] = softplus_inverse(1.0 - kLinkEpsilon);
  net.output_.bias[1] = softplus_inverse(theta0 - kLinkEpsilon);

  // Dropout draws come from a stream separate from the initial weights.
  std::seed_seq dropout_seed{seed, std::uint64_t{0x64726f70}};
  net.rng_.seed(dropout_seed);
  return net;
}

ForwardResult Network::run(const Matrix& batch, Mode mode, std::mt19937_64* rng,
                           std::vector<BatchStats>* stats) const {
  if (batch.cols() != spec_.input_dim) {
    throw std::invalid_argument("input has " + std::to_string(batch.cols()) + " columns, network expects " +
                                std::to_string(spec_.input_dim));
  }
  const std::size_t n = batch.rows();
  const bool any_bn = std::any_of(hidden_.begin(), hidden_.end(), [](const auto& h) { return h.spec.batch_norm; });
  if (mode == Mode::Train && any_bn && n < 2) {
    throw std::invalid_argument("batch norm in train mode needs a batch of at least 2 subjects");
  }

  ForwardResult result;
  result.cache.mode = mode;
  Matrix current = batch;
  for (const auto& h : hidden_) {
    ForwardCache::Hidden hc;
    hc.input = current;
    Matrix z = affine(current, h.weight, h.bias, h.spec.width);
    const std::size_t w = h.spec.width;

    hc.normalized = z;
    Matrix y = z;
    if (h.spec.batch_norm) {
      std::vector<double> mean(w, 0.0);
      std::vector<double> var(w, 0.0);
      if (mode == Mode::Train) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < w; ++c) mean[c] += z(i, c);
        for (double& m : mean) m /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < w; ++c) var[c] += (z(i, c) - mean[c]) * (z(i, c) - mean[c]);
        for (double& v : var) v /= static_cast<double>(n);
        if (stats) stats->push_back({mean, var});
      } else {
        mean = h.running_mean;
        var = h.running_var;
      }
      hc.inv_std.resize(w);
      for (std::size_t c = 0; c < w; ++c) hc.inv_std[c] = 1.0 / std::sqrt(var[c] + kBatchNormEpsilon);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < w; ++c) {
          const double xhat = (z(i, c) - mean[c]) * hc.inv_std[c];
          hc.normalized(i, c) = xhat;
          y(i, c) = h.gamma[c] * xhat + h.beta[c];
        }
      }
    } else if (stats && mode == Mode::Train) {
      stats->push_back({});
    }

    if (mode == Mode::Train && h.spec.dropout_p > 0.0) {
      std::bernoulli_distribution keep(1.0 - h.spec.dropout_p);
      const double scale = 1.0 / (1.0 - h.spec.dropout_p);
      hc.mask.resize(n * w);
      for (std::size_t k = 0; k < n * w; ++k) {
        hc.mask[k] = keep(*rng) ? scale : 0.0;
        y.values()[k] *= hc.mask[k];
      }
    }
    hc.pre_activation = y;
    for (double& v : y.values()) v = activate(h.spec.activation, v);
    current = std::move(y);
    result.cache.hidden.push_back(std::move(hc));
  }

  result.cache.last_hidden = current;
  result.cache.raw = affine(current, output_.weight, output_.bias, 2);
  result.params.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.params[i] = link(spec_.kind, result.cache.raw(i, 0), result.cache.raw(i, 1));
  }
  return result;
}

ForwardResult Network::forward(const Matrix& batch, Mode mode) {
  if (mode == Mode::Eval) return run(batch, mode, nullptr, nullptr);
  std::vector<BatchStats> stats;
  ForwardResult result = run(batch, mode, &rng_, &stats);
  const double n = static_cast<double>(batch.rows());
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    auto& h = hidden_[l];
    if (!h.spec.batch_norm) continue;
    for (std::size_t c = 0; c < h.spec.width; ++c) {
      const double unbiased = stats[l].var[c] * n / (n - 1.0);
      h.running_mean[c] = kBatchNormMomentum * h.running_mean[c] + (1.0 - kBatchNormMomentum) * stats[l].mean[c];
      h.running_var[c] = kBatchNormMomentum * h.running_var[c] + (1.0 - kBatchNormMomentum) * unbiased;
    }
  }
  return result;
}

std::vector<fht::FhtParams> Network::predict(const Matrix& batch) const {
  return run(batch, Mode::Eval, nullptr, nullptr).params;
}

fht::FhtParams Network::predict_one(std::span<const double> x) const {
  Matrix m(1, x.size());
  std::copy(x.begin(), x.end(), m.row(0).begin());
  return predict(m).front();
}

Gradients Network::make_gradients() const {
  Gradients g;
  for (const auto& block : parameters()) g.blocks.emplace_back(block.size(), 0.0);
  return g;
}

std::vector<std::span<double>> Network::parameters() {
  std::vector<std::span<double>> out;
  for (auto& h : hidden_) {
    out.emplace_back(h.weight);
    out.emplace_back(h.bias);
    out.emplace_back(h.gamma);
    out.emplace_back(h.beta);
  }
  out.emplace_back(output_.weight);
  out.emplace_back(output_.bias);
  return out;
}

std::vector<std::span<const double>> Network::parameters() const {
  std::vector<std::span<const double>> out;
  for (const auto& h : hidden_) {
    out.emplace_back(h.weight);
    out.emplace_back(h.bias);
    out.emplace_back(h.gamma);
    out.emplace_back(h.beta);
  }
  out.emplace_back(output_.weight);
  out.emplace_back(output_.bias);
  return out;
}

Gradients Network::backward(const ForwardCache& cache, const Matrix& grad_params) const {
  const std::size_t n = cache.raw.rows();
  if (grad_params.rows() != n || grad_params.cols() != 2) {
    throw std::invalid_argument("parameter gradient must be " + std::to_string(n) + " x 2");
  }
  if (cache.hidden.size() != hidden_.size()) throw std::invalid_argument("forward cache does not match network");

  Gradients grads = make_gradients();
  const std::size_t out_block = 4 * hidden_.size();

  Matrix draw(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = link_derivative(spec_.kind, cache.raw(i, 0), cache.raw(i, 1));
    draw(i, 0) = grad_params(i, 0) * d[0];
    draw(i, 1) = grad_params(i, 1) * d[1];
  }
  Matrix da = affine_backward(cache.last_hidden, draw, output_.weight, grads.blocks[out_block],
                              grads.blocks[out_block + 1]);

  for (std::size_t l = hidden_.size(); l-- > 0;) {
    const auto& h = hidden_[l];
    const auto& hc = cache.hidden[l];
    const std::size_t w = h.spec.width;
    auto& dweight = grads.blocks[4 * l];
    auto& dbias = grads.blocks[4 * l + 1];
    auto& dgamma = grads.blocks[4 * l + 2];
    auto& dbeta = grads.blocks[4 * l + 3];

    Matrix dy(n, w);
    for (std::size_t k = 0; k < n * w; ++k) {
      double g = da.values()[k] * activate_derivative(h.spec.activation, hc.pre_activation.values()[k]);
      if (!hc.mask.empty()) g *= hc.mask[k];
      dy.values()[k] = g;
    }

    Matrix dz(n, w);
    if (h.spec.batch_norm) {
      Matrix dxhat(n, w);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < w; ++c) {
          dgamma[c] += dy(i, c) * hc.normalized(i, c);
          dbeta[c] += dy(i, c);
          dxhat(i, c) = dy(i, c) * h.gamma[c];
        }
      }
      if (cache.mode == Mode::Train) {
        const double nn = static_cast<double>(n);
        for (std::size_t c = 0; c < w; ++c) {
          double sum = 0.0;
          double sum_x = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            sum += dxhat(i, c);
            sum_x += dxhat(i, c) * hc.normalized(i, c);
          }
          for (std::size_t i = 0; i < n; ++i) {
            dz(i, c) = hc.inv_std[c] / nn * (nn * dxhat(i, c) - sum - hc.normalized(i, c) * sum_x);
          }
        }
      } else {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t c = 0; c < w; ++c) dz(i, c) = dxhat(i, c) * hc.inv_std[c];
      }
    } else {
      dz = dy;
    }
    da = affine_backward(hc.input, dz, h.weight, dweight, dbias);
  }
  return grads;
}

std::string Network::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void Network::set_rng_state(const std::string& state) {
  std::istringstream is(state);
  is >> rng_;
  if (!is) throw std::invalid_argument("malformed RNG state");
}

bool operator==(const Network& a, const Network& b) {
  if (a.spec_.input_dim != b.spec_.input_dim || a.spec_.kind != b.spec_.kind ||
      a.hidden_.size() != b.hidden_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < a.hidden_.size(); ++l) {
    const auto& x = a.hidden_[l];
    const auto& y = b.hidden_[l];
    if (x.spec.width != y.spec.width || x.spec.activation != y.spec.activation ||
        x.spec.dropout_p != y.spec.dropout_p || x.spec.batch_norm != y.spec.batch_norm || x.weight != y.weight ||
        x.bias != y.bias || x.gamma != y.gamma || x.beta != y.beta || x.running_mean != y.running_mean ||
        x.running_var != y.running_var) {
      return false;
    }
  }
  return a.output_.weight == b.output_.weight && a.output_.bias == b.output_.bias && a.rng_ == b.rng_;
}

}  // namespace deepfht::nn
