#pragma once

// `deepfht` command-line front end. Subcommands: generate, train, eval,
// compare, riskmap, simulate, rerun.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "deepfht/fht.hpp"
#include "deepfht/network.hpp"
#include "deepfht/train.hpp"

namespace deepfht::cli {

inline constexpr std::string_view kVersion = "0.1.0";

/// Training configuration file (JSON). Every key is optional; defaults are
/// the NonPH settings.
struct ModelConfig {
  std::vector<std::size_t> hidden_sizes{16, 16};
  nn::Activation activation = nn::Activation::Relu;
  double dropout = 0.0;
  bool batch_norm = true;
  std::size_t epochs = 450;
  std::size_t batch_size = 256;
  double learning_rate = 0.0039;
  fht::DistKind distribution = fht::DistKind::Levy;
  train::OptimizerKind optimizer = train::OptimizerKind::Adam;
  /// 0 means every event time in each minibatch loss.
  std::size_t eval_time_cap = 256;

  std::vector<nn::LayerSpec> layers() const;
  train::TrainConfig train_config(std::uint64_t seed) const;
};

ModelConfig parse_model_config(std::string_view json_text);
std::string to_json(const ModelConfig& cfg);

/// Runs one command line (without the program name). Returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace deepfht::cli
