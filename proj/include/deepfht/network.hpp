#pragma once

// Feedforward network mapping covariates to first-hitting-time parameters.
//
// Each hidden block is  affine -> batch norm -> dropout -> activation.
// The output block is an affine map to two raw values followed by the link
//
//   x0    = softplus(r1) + eps
//   D     = softplus(r2) + eps          (Levy)
//   mu    = -(softplus(r2) + eps)       (inverse Gaussian)
//
// so emitted parameters are valid for any finite raw output.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "deepfht/fht.hpp"
#include "deepfht/matrix.hpp"

namespace deepfht::nn {

enum class Activation { Relu, Elu, Tanh };
std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

enum class Mode { Train, Eval };

struct LayerSpec {
  std::size_t width = 16;
  Activation activation = Activation::Relu;
  double dropout_p = 0.0;
  bool batch_norm = true;
};

struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<LayerSpec> hidden;
  fht::DistKind kind = fht::DistKind::Levy;
};

void validate(const NetworkSpec& spec);

inline constexpr double kLinkEpsilon = 1e-6;
inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBatchNormEpsilon = 1e-5;

double softplus(double r);
double softplus_inverse(double y);

/// Constrained parameters from the two raw outputs.
fht::FhtParams link(fht::DistKind kind, double r1, double r2);
/// Derivatives of (x0, theta) with respect to (r1, r2); the Jacobian is diagonal.
std::array<double, 2> link_derivative(fht::DistKind kind, double r1, double r2);

struct HiddenLayer {
  LayerSpec spec;
  std::size_t in = 0;
  std::vector<double> weight;  // spec.width x in, row-major
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
};

struct OutputLayer {
  std::size_t in = 0;
  std::vector<double> weight;  // 2 x in
  std::vector<double> bias;    // 2
};

/// Activations kept by forward() for the matching backward() call.
struct ForwardCache {
  struct Hidden {
    Matrix input;
    Matrix normalized;  // x-hat (or the affine output when batch norm is off)
    std::vector<double> inv_std;
    Matrix pre_activation;  // after dropout
    std::vector<double> mask;  // dropout scale per entry, empty when disabled
  };
  Mode mode = Mode::Eval;
  std::vector<Hidden> hidden;
  Matrix last_hidden;
  Matrix raw;  // n x 2 output before the link
};

struct ForwardResult {
  std::vector<fht::FhtParams> params;
  ForwardCache cache;
};

/// Gradient buffers, one per trainable block in Network::parameters() order.
struct Gradients {
  std::vector<std::vector<double>> blocks;

  void zero();
  bool all_zero() const;
};

class Network {
 public:
  /// He-normal weights for relu/elu, Xavier-normal for tanh and the output
  /// block; zero hidden biases; batch-norm scale 1 and shift 0; output bias
  /// chosen so an all-zero hidden state maps to x0 = 1 and D = 1 (Levy) or
  /// mu = -0.1 (inverse Gaussian).
  static Network init(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  fht::DistKind kind() const { return spec_.kind; }
  std::size_t input_dim() const { return spec_.input_dim; }

  /// Train mode samples dropout masks from the owned RNG and uses (and
  /// updates the running estimates of) batch statistics.
  ForwardResult forward(const Matrix& batch, Mode mode);
  /// Eval-mode forward; a pure function of weights and input.
  std::vector<fht::FhtParams> predict(const Matrix& batch) const;
  fht::FhtParams predict_one(std::span<const double> x) const;

  /// Reverse-mode gradients of a scalar loss given dL/d(x0, theta) per row.
  Gradients backward(const ForwardCache& cache, const Matrix& grad_params) const;

  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  Gradients make_gradients() const;

  std::vector<HiddenLayer>& hidden() { return hidden_; }
  const std::vector<HiddenLayer>& hidden() const { return hidden_; }
  OutputLayer& output() { return output_; }
  const OutputLayer& output() const { return output_; }

  std::string rng_state() const;
  void set_rng_state(const std::string& state);

  friend bool operator==(const Network& a, const Network& b);

 private:
  Network() = default;
  friend Network make_network_for_io(const NetworkSpec& spec);
  struct BatchStats {
    std::vector<double> mean;
    std::vector<double> var;
  };
  ForwardResult run(const Matrix& batch, Mode mode, std::mt19937_64* rng, std::vector<BatchStats>* stats) const;

  NetworkSpec spec_;
  std::vector<HiddenLayer> hidden_;
  OutputLayer output_;
  std::mt19937_64 rng_;
};

/// Network with the right shapes and zeroed weights; used by deserializers.
Network make_network_for_io(const NetworkSpec& spec);

}  // namespace deepfht::nn
