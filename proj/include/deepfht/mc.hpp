#pragma once

// Euler-Maruyama first-passage simulation of
//
//   X_{k+1} = X_k + mu dt + sqrt(2 D dt) xi,   xi ~ N(0, 1),
//
// absorbed at the first X <= 0. Used as an independent check of fht_core.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "deepfht/fht.hpp"

namespace deepfht::mc {

struct SimConfig {
  std::size_t n_paths = 100000;
  double dt = 1e-4;
  double t_max = 10.0;
  std::uint64_t seed = 0;
  /// Also absorb a path that stays positive at both ends of a step with the
  /// Brownian-bridge crossing probability exp(-X_k X_{k+1} / (D dt)).
  bool bridge_correction = false;
  /// 0 means std::thread::hardware_concurrency().
  unsigned threads = 0;

  void validate() const;
};

/// Process coefficients. For the inverse Gaussian law D is 1.
struct Process {
  double x0 = 1.0;
  double drift = 0.0;
  double diffusion = 1.0;

  static Process from(const fht::FhtParams& p);
};

/// One entry per path: hitting time, or nullopt if the path survived past
/// t_max. Hitting times are reported at the end of the absorbing step.
using FptSample = std::vector<std::optional<double>>;

FptSample simulate_fpt(const Process& process, const SimConfig& cfg);
FptSample simulate_fpt(const fht::FhtParams& params, const SimConfig& cfg);

/// Fraction of paths with hitting time > t (survivors count as > t_max).
/// Hits within 1e-9 relative of t count as <= t, absorbing grid rounding.
std::vector<double> empirical_survival(const FptSample& sample, std::span<const double> t_grid);

/// sqrt(S (1 - S) / n).
double binomial_se(double survival, std::size_t n);

struct Comparison {
  double t = 0.0;
  double empirical = 0.0;
  double closed_form = 0.0;
  double se = 0.0;
  double z = 0.0;
};
std::vector<Comparison> compare(const fht::FhtParams& params, const FptSample& sample, std::span<const double> t_grid);

/// Single column `hitting_time`; survivors written as NA.
void write_sample_csv(std::ostream& out, const FptSample& sample);

}  // namespace deepfht::mc
