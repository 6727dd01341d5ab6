#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace deepfht::train {

enum class OptimizerKind { Sgd, Adam };
std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order update over a fixed list of parameter blocks.
class Optimizer {
 public:
  Optimizer(OptimizerConfig cfg, double learning_rate, std::span<const std::size_t> block_sizes);

  void step(std::span<const std::span<double>> params, std::span<const std::vector<double>> grads);
  std::size_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  double lr_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace deepfht::train
