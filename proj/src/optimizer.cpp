#include "deepfht/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deepfht::train {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

Optimizer::Optimizer(OptimizerConfig cfg, double learning_rate, std::span<const std::size_t> block_sizes)
    : cfg_(cfg), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (cfg_.kind == OptimizerKind::Adam) {
    for (std::size_t n : block_sizes) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }
}

void Optimizer::step(std::span<const std::span<double>> params, std::span<const std::vector<double>> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("parameter/gradient block count mismatch");
  ++t_;
  if (cfg_.kind == OptimizerKind::Sgd) {
    for (std::size_t b = 0; b < params.size(); ++b)
      for (std::size_t k = 0; k < params[b].size(); ++k) params[b][k] -= lr_ * grads[b][k];
    return;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    for (std::size_t k = 0; k < params[b].size(); ++k) {
      const double g = grads[b][k];
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      params[b][k] -= lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + cfg_.epsilon);
    }
  }
}

}  // namespace deepfht::train
