#include "deepfht/interpret.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace deepfht::interpret {
namespace {

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double to_axis_space(double v, AxisScale s) {
  if (s == AxisScale::Linear) return v;
  if (!(v > 0.0)) throw std::invalid_argument("log-scaled axis needs positive values");
  return std::log(v);
}

double from_axis_space(double v, AxisScale s) { return s == AxisScale::Linear ? v : std::exp(v); }

Axis default_axis(std::string name, std::span<const double> values, AxisScale scale, double padding,
                  std::size_t resolution) {
  double lo = to_axis_space(values.front(), scale);
  double hi = lo;
  for (double v : values) {
    const double a = to_axis_space(v, scale);
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  double pad = padding * (hi - lo);
  if (pad == 0.0) pad = std::max(std::abs(lo) * padding, 1e-3);
  return {std::move(name), from_axis_space(lo - pad, scale), from_axis_space(hi + pad, scale), scale, resolution};
}

}  // namespace

std::string_view to_string(DistanceMetric m) { return m == DistanceMetric::Default ? "default" : "raw"; }

DistanceMetric parse_metric(std::string_view name) {
  if (name == "default") return DistanceMetric::Default;
  if (name == "raw") return DistanceMetric::Raw;
  throw std::invalid_argument("unknown distance metric '" + std::string(name) + "' (expected default or raw)");
}

std::string_view to_string(AxisScale s) { return s == AxisScale::Linear ? "linear" : "log"; }

AxisScale parse_scale(std::string_view name) {
  if (name == "linear") return AxisScale::Linear;
  if (name == "log") return AxisScale::Log;
  throw std::invalid_argument("unknown axis scale '" + std::string(name) + "' (expected linear or log)");
}

std::array<double, 2> embed(const fht::FhtParams& p, DistanceMetric metric) {
  if (metric == DistanceMetric::Default && p.kind == fht::DistKind::Levy) return {p.x0, std::log(p.theta)};
  return {p.x0, p.theta};
}

double distance(const fht::FhtParams& a, const fht::FhtParams& b, DistanceMetric metric) {
  const auto ea = embed(a, metric);
  const auto eb = embed(b, metric);
  return std::hypot(ea[0] - eb[0], ea[1] - eb[1]);
}

double idw_time(const fht::FhtParams& query, std::span<const Source> sources, DistanceMetric metric) {
  if (sources.empty()) throw std::invalid_argument("IDW interpolation needs at least one source");
  double num = 0.0;
  double den = 0.0;
  double exact_sum = 0.0;
  std::size_t exact = 0;
  for (const auto& s : sources) {
    if (!(s.time > 0.0)) throw std::invalid_argument("IDW source times must be > 0");
    const double d = distance(query, s.params, metric);
    if (d < 1e-12) {
      exact_sum += s.time;
      ++exact;
      continue;
    }
    const double w = 1.0 / std::sqrt(d);
    num += w * s.time;
    den += w;
  }
  if (exact > 0) return exact_sum / static_cast<double>(exact);
  return num / den;
}

double Axis::value(std::size_t k) const {
  if (resolution == 1) return min;
  const double f = static_cast<double>(k) / static_cast<double>(resolution - 1);
  if (k + 1 == resolution) return max;
  if (scale == AxisScale::Linear) return min + f * (max - min);
  return std::exp(std::log(min) + f * (std::log(max) - std::log(min)));
}

RiskMap risk_grid(std::span<const Source> sources, fht::DistKind kind, std::span<const OverlayPoint> overlay,
                  const RiskMapOptions& options) {
  if (sources.empty()) throw std::invalid_argument("risk map needs at least one uncensored source");
  if (options.resolution == 0) throw std::invalid_argument("risk map resolution must be >= 1");
  const auto names = fht::parameter_names(kind);

  RiskMap map;
  map.kind = kind;
  map.metric = options.metric;
  map.n_sources = sources.size();
  map.overlay.assign(overlay.begin(), overlay.end());

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : sources) {
    xs.push_back(s.params.x0);
    ys.push_back(s.params.theta);
  }
  map.x_axis = options.x_axis ? *options.x_axis
                              : default_axis(std::string(names[0]), xs, options.x_scale, options.padding,
                                             options.resolution);
  map.y_axis = options.y_axis ? *options.y_axis
                              : default_axis(std::string(names[1]), ys, options.y_scale, options.padding,
                                             options.resolution);

  map.times.resize(map.x_axis.resolution * map.y_axis.resolution);
  for (std::size_t iy = 0; iy < map.y_axis.resolution; ++iy) {
    for (std::size_t ix = 0; ix < map.x_axis.resolution; ++ix) {
      const fht::FhtParams q{kind, map.x_axis.value(ix), map.y_axis.value(iy)};
      map.times[iy * map.x_axis.resolution + ix] = idw_time(q, sources, options.metric);
    }
  }
  return map;
}

RiskMap risk_grid(const train::FittedModel& model, std::span<const data::SurvivalRecord> train,
                  std::span<const data::SurvivalRecord> overlay, const RiskMapOptions& options) {
  std::vector<data::SurvivalRecord> uncensored;
  for (const auto& r : train) {
    if (r.event) uncensored.push_back(r);
  }
  if (uncensored.empty()) throw std::invalid_argument("risk map needs at least one uncensored training record");
  const auto params = model.params(data::feature_matrix(uncensored));
  std::vector<Source> sources;
  for (std::size_t i = 0; i < uncensored.size(); ++i) sources.push_back({params[i], uncensored[i].time});

  std::vector<OverlayPoint> points;
  if (!overlay.empty()) {
    const auto op = model.params(data::feature_matrix(overlay));
    for (std::size_t i = 0; i < overlay.size(); ++i) points.push_back({op[i], overlay[i].time, overlay[i].event});
  }
  return risk_grid(sources, model.kind(), points, options);
}

void write_grid_csv(std::ostream& out, const RiskMap& map) {
  out << "# distribution=" << fht::to_string(map.kind) << " metric=" << to_string(map.metric)
      << " sources=" << map.n_sources << '\n';
  out << "# x_axis=" << map.x_axis.name << " scale=" << to_string(map.x_axis.scale) << " min=" << fmt(map.x_axis.min)
      << " max=" << fmt(map.x_axis.max) << " resolution=" << map.x_axis.resolution << '\n';
  out << "# y_axis=" << map.y_axis.name << " scale=" << to_string(map.y_axis.scale) << " min=" << fmt(map.y_axis.min)
      << " max=" << fmt(map.y_axis.max) << " resolution=" << map.y_axis.resolution << '\n';
  out << map.x_axis.name << ',' << map.y_axis.name << ",T\n";
  for (std::size_t iy = 0; iy < map.y_axis.resolution; ++iy) {
    for (std::size_t ix = 0; ix < map.x_axis.resolution; ++ix) {
      out << fmt(map.x_axis.value(ix)) << ',' << fmt(map.y_axis.value(iy)) << ',' << fmt(map.at(ix, iy)) << '\n';
    }
  }
}

void write_overlay_csv(std::ostream& out, const RiskMap& map) {
  out << "# distribution=" << fht::to_string(map.kind) << " subjects=" << map.overlay.size() << '\n';
  out << map.x_axis.name << ',' << map.y_axis.name << ",time,event\n";
  for (const auto& p : map.overlay) {
    out << fmt(p.params.x0) << ',' << fmt(p.params.theta) << ',' << fmt(p.time) << ',' << (p.event ? 1 : 0) << '\n';
  }
}

double leading_component_share(std::span<const std::array<double, 2>> points) {
  if (points.size() < 2) throw std::invalid_argument("need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (const auto& p : points) {
    mx += p[0];
    my += p[1];
  }
  const double n = static_cast<double>(points.size());
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    sxx += (p[0] - mx) * (p[0] - mx);
    syy += (p[1] - my) * (p[1] - my);
    sxy += (p[0] - mx) * (p[1] - my);
  }
  const double trace = sxx + syy;
  if (trace <= 0.0) return 1.0;
  const double disc = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  return (0.5 * trace + disc) / trace;
}

}  // namespace deepfht::interpret
