#pragma once

// Parameter-space interpretation: inverse-distance-weighted event times
//
//   T(p) = sum_i w_i(p) T_i / sum_i w_i(p),   w_i(p) = 1 / sqrt(d(p, p_i)),
//
// over uncensored training subjects, and gridded risk maps for plotting.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deepfht/data.hpp"
#include "deepfht/fht.hpp"
#include "deepfht/train.hpp"

namespace deepfht::interpret {

/// Default: Euclidean on (x0, log D) for Levy and on (x0, mu) for the
/// inverse Gaussian law. Raw: Euclidean on (x0, theta) for both.
enum class DistanceMetric { Default, Raw };
std::string_view to_string(DistanceMetric m);
DistanceMetric parse_metric(std::string_view name);

struct Source {
  fht::FhtParams params;
  double time = 0.0;
};

/// Point in the plane where distances are measured.
std::array<double, 2> embed(const fht::FhtParams& p, DistanceMetric metric);
double distance(const fht::FhtParams& a, const fht::FhtParams& b, DistanceMetric metric);

/// Interpolated time at `query`. A source closer than 1e-12 is an exact hit
/// and its time is returned (the mean, if several coincide).
double idw_time(const fht::FhtParams& query, std::span<const Source> sources,
                DistanceMetric metric = DistanceMetric::Default);

enum class AxisScale { Linear, Log };
std::string_view to_string(AxisScale s);
AxisScale parse_scale(std::string_view name);

struct Axis {
  std::string name;
  double min = 0.0;
  double max = 1.0;
  AxisScale scale = AxisScale::Linear;
  std::size_t resolution = 200;

  double value(std::size_t k) const;
};

struct OverlayPoint {
  fht::FhtParams params;
  double time = 0.0;
  bool event = false;
};

struct RiskMap {
  fht::DistKind kind = fht::DistKind::Levy;
  DistanceMetric metric = DistanceMetric::Default;
  Axis x_axis;  // x0
  Axis y_axis;  // D or mu
  /// Row-major, y_axis.resolution rows by x_axis.resolution columns.
  std::vector<double> times;
  std::size_t n_sources = 0;
  std::vector<OverlayPoint> overlay;

  double at(std::size_t ix, std::size_t iy) const { return times[iy * x_axis.resolution + ix]; }
};

struct RiskMapOptions {
  std::size_t resolution = 200;
  AxisScale x_scale = AxisScale::Linear;
  AxisScale y_scale = AxisScale::Linear;
  DistanceMetric metric = DistanceMetric::Default;
  /// Fraction of the source range added on each side of the default axes.
  double padding = 0.1;
  std::optional<Axis> x_axis;
  std::optional<Axis> y_axis;
};

/// Default axes span every source point, padded on both sides.
RiskMap risk_grid(std::span<const Source> sources, fht::DistKind kind, std::span<const OverlayPoint> overlay,
                  const RiskMapOptions& options = {});

/// Risk map of a trained model: sources are the uncensored `train` subjects,
/// overlay the `overlay` subjects (typically the test set).
RiskMap risk_grid(const train::FittedModel& model, std::span<const data::SurvivalRecord> train,
                  std::span<const data::SurvivalRecord> overlay, const RiskMapOptions& options = {});

void write_grid_csv(std::ostream& out, const RiskMap& map);
void write_overlay_csv(std::ostream& out, const RiskMap& map);

/// Fraction of total variance along the leading principal axis of 2-D points.
double leading_component_share(std::span<const std::array<double, 2>> points);

}  // namespace deepfht::interpret
