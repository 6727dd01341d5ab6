#include "deepfht/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "deepfht/cox.hpp"
#include "deepfht/data.hpp"
#include "deepfht/interpret.hpp"
#include "deepfht/mc.hpp"
#include "deepfht/metrics.hpp"
#include "deepfht/model_io.hpp"
#include "deepfht/nonph.hpp"

namespace deepfht::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-invocation state shared by the subcommand handlers.
struct Context {
  std::vector<std::string> args;
  std::ostream* out = nullptr;
  bool write_manifest = true;
  json inputs = json::object();
  json outputs = json::object();
  json config = json::object();
};

void write_text(Context& ctx, const std::string& key, const fs::path& path, std::string_view content) {
  io::write_file_atomic(path, content);
  ctx.outputs[key] = path.string();
}

void save_manifest(const Context& ctx, const std::string& command, const fs::path& primary_out,
                    std::uint64_t seed, double seconds) {
  if (!ctx.write_manifest) return;
  json m;
  m["command"] = command;
  m["argv"] = ctx.args;
  m["config"] = ctx.config;
  m["seeds"] = {{"seed", seed}};
  m["inputs"] = ctx.inputs;
  m["outputs"] = ctx.outputs;
  m["version"] = kVersion;
  m["wall_clock_seconds"] = seconds;
  auto path = primary_out;
  path += ".manifest.json";
  io::write_file_atomic(path, m.dump(2) + "\n");
}

data::CsvSchema schema_for(const data::PreprocessRecipe& recipe) {
  data::CsvSchema schema;
  for (const auto& c : recipe.columns) {
    schema.feature_columns.push_back(c.name);
    if (c.type == data::ColumnType::Categorical) schema.categorical_columns.push_back(c.name);
  }
  return schema;
}

data::CsvSchema schema_with(const std::vector<std::string>& categorical) {
  data::CsvSchema schema;
  schema.categorical_columns = categorical;
  return schema;
}

ModelConfig load_config(Context& ctx, const std::string& path, const std::string& distribution) {
  ModelConfig cfg;
  if (!path.empty()) {
    cfg = parse_model_config(io::read_file(path));
    ctx.inputs["config"] = path;
  }
  if (!distribution.empty()) cfg.distribution = fht::parse_dist_kind(distribution);
  ctx.config["model"] = json::parse(to_json(cfg));
  return cfg;
}

const data::PreprocessRecipe& require_recipe(const std::optional<data::PreprocessRecipe>& r) {
  if (!r) throw UsageError("model file carries no preprocessing recipe");
  return *r;
}

std::string fmt_pm(const metrics::MetricSummary& m, std::size_t n_bootstrap) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4);
  if (n_bootstrap >= 2) {
    s << m.mean << " ± " << m.std;
  } else {
    s << m.point;
  }
  return s.str();
}

void print_reports(std::ostream& out, const std::vector<metrics::EvalReport>& reports) {
  out << std::left << std::setw(16) << "model" << std::setw(22) << "C-index" << "IBS\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(16) << r.model << std::setw(22) << fmt_pm(r.c_index, r.n_bootstrap)
        << fmt_pm(r.ibs, r.n_bootstrap) << '\n';
  }
}

// --- generate ---

struct GenerateOpts {
  std::string out;
  std::uint64_t seed = 0;
  nonph::NonPhConfig cfg;
};

void cmd_generate(Context& ctx, const GenerateOpts& o) {
  auto cfg = o.cfg;
  cfg.seed = o.seed;
  ctx.config["nonph"] = {{"n_raw", cfg.n_raw},
                         {"n_features", cfg.n_features},
                         {"n_intervals", cfg.n_intervals},
                         {"beta", cfg.beta},
                         {"horizon", cfg.horizon},
                         {"n_subintervals", cfg.n_subintervals},
                         {"target_censoring", cfg.target_censoring},
                         {"n_keep", cfg.n_keep}};
  const auto records = nonph::generate_nonph(cfg);
  std::ostringstream csv;
  data::write_csv(csv, records, nonph::feature_names(cfg));
  write_text(ctx, "data", o.out, csv.str());
  *ctx.out << "wrote " << records.size() << " records (censoring " << std::setprecision(4)
           << data::censoring_ratio(records) << ") to " << o.out << '\n';
}

// --- train ---

struct TrainOpts {
  std::string data;
  std::string config;
  std::string out;
  std::string distribution;
  std::string model_type = "deepfht";
  std::vector<std::string> categorical;
  std::uint64_t seed = 0;
};

void cmd_train(Context& ctx, const TrainOpts& o) {
  ctx.inputs["data"] = o.data;
  const auto table = data::load_csv(o.data, schema_with(o.categorical));
  auto recipe = data::fit_preprocess(table);
  for (const auto& w : recipe.warnings) *ctx.out << "warning: " << w << '\n';
  const auto records = data::to_records(recipe, table);
  if (o.model_type == "cox") {
    ctx.config["model_type"] = "cox";
    io::CoxArtifact a{cox::fit_cox(records), std::move(recipe)};
    write_text(ctx, "model", o.out, io::serialize(a));
    *ctx.out << "fitted Cox model on " << records.size() << " records (" << a.model.diagnostics.iterations
             << " iterations) -> " << o.out << '\n';
    return;
  }
  if (o.model_type != "deepfht") throw UsageError("unknown model type '" + o.model_type + "'");
  const auto cfg = load_config(ctx, o.config, o.distribution);
  auto model = train::fit(records, cfg.distribution, cfg.layers(), cfg.train_config(o.seed));
  model.recipe = std::move(recipe);
  write_text(ctx, "model", o.out, io::serialize(model));
  *ctx.out << "trained " << fht::to_string(cfg.distribution) << " model on " << records.size() << " records";
  if (!model.loss_trace.empty()) *ctx.out << ", final loss " << model.loss_trace.back();
  *ctx.out << " -> " << o.out << '\n';
}

// --- eval ---

struct EvalOpts {
  std::string model;
  std::string data;
  std::string out;
  std::size_t bootstrap = 100;
  std::uint64_t seed = 0;
};

metrics::EvalReport evaluate_artifact(const io::ModelArtifact& artifact, const std::string& data_path,
                                      std::size_t n_bootstrap, std::uint64_t seed) {
  return std::visit(
      [&](const auto& m) {
        const auto& recipe = require_recipe(m.recipe);
        const auto table = data::load_csv(data_path, schema_for(recipe));
        const auto records = data::to_records(recipe, table);
        if constexpr (std::is_same_v<std::decay_t<decltype(m)>, train::FittedModel>) {
          return metrics::evaluate(std::string(fht::to_string(m.kind())), train::survival_fn(m, records), records,
                                   n_bootstrap, seed);
        } else {
          return metrics::evaluate("cox", cox::survival_fn(m.model, records), records, n_bootstrap, seed);
        }
      },
      artifact);
}

void cmd_eval(Context& ctx, const EvalOpts& o) {
  ctx.inputs["model"] = o.model;
  ctx.inputs["data"] = o.data;
  ctx.config["bootstrap"] = o.bootstrap;
  const auto artifact = io::load_model(o.model);
  const auto report = evaluate_artifact(artifact, o.data, o.bootstrap, o.seed);
  write_text(ctx, "report", o.out, metrics::to_json(report));
  print_reports(*ctx.out, {report});
}

// --- compare ---

struct CompareOpts {
  std::string data;
  std::string config;
  std::string out;
  std::vector<std::string> categorical;
  std::size_t bootstrap = 100;
  std::size_t folds = 0;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

std::vector<data::SurvivalRecord> outcome_only(const data::RawTable& t) {
  std::vector<data::SurvivalRecord> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) {
    out[i].event = t.event[i];
    out[i].time = t.time[i];
  }
  return out;
}

using Trainer = std::function<train::SurvivalFn(const std::vector<data::SurvivalRecord>& train,
                                                const std::vector<data::SurvivalRecord>& test)>;

struct Candidate {
  std::string name;
  Trainer trainer;
};

std::vector<Candidate> candidates(const ModelConfig& base, std::uint64_t seed) {
  std::vector<Candidate> out;
  for (auto kind : {fht::DistKind::Levy, fht::DistKind::InverseGaussian}) {
    auto cfg = base;
    cfg.distribution = kind;
    out.push_back({std::string(fht::to_string(kind)), [cfg, seed](const auto& tr, const auto& te) {
                     auto model = train::fit(tr, cfg.distribution, cfg.layers(), cfg.train_config(seed));
                     return train::survival_fn(model, te);
                   }});
  }
  out.push_back({"cox", [](const auto& tr, const auto& te) { return cox::survival_fn(cox::fit_cox(tr), te); }});
  return out;
}

void cmd_compare(Context& ctx, const CompareOpts& o) {
  ctx.inputs["data"] = o.data;
  const auto cfg = load_config(ctx, o.config, "");
  ctx.config["bootstrap"] = o.bootstrap;
  ctx.config["folds"] = o.folds;
  ctx.config["test_fraction"] = o.test_fraction;
  if (o.folds == 1) throw UsageError("--folds must be 0 (off) or >= 2");

  const auto table = data::load_csv(o.data, schema_with(o.categorical));
  const auto outcomes = outcome_only(table);
  const auto split = data::stratified_split(outcomes, o.test_fraction, o.seed);
  const auto train_table = table.select_rows(split.train);
  const auto test_table = table.select_rows(split.test);
  const auto recipe = data::fit_preprocess(train_table);
  const auto train_records = data::to_records(recipe, train_table);
  const auto test_records = data::to_records(recipe, test_table);
  const auto models = candidates(cfg, o.seed);

  json report;
  report["split"] = {{"seed", o.seed},
                     {"test_fraction", o.test_fraction},
                     {"n_train", train_records.size()},
                     {"n_test", test_records.size()}};

  if (o.folds >= 2) {
    const auto train_outcomes = outcome_only(train_table);
    const auto folds = data::cv_folds(train_outcomes, o.folds, o.seed);
    json cv = json::array();
    for (const auto& m : models) {
      std::vector<double> values;
      for (const auto& f : folds) {
        const auto fold_train = train_table.select_rows(f.train);
        const auto fold_val = train_table.select_rows(f.test);
        const auto fold_recipe = data::fit_preprocess(fold_train);
        const auto tr = data::to_records(fold_recipe, fold_train);
        const auto va = data::to_records(fold_recipe, fold_val);
        values.push_back(metrics::antolini_cindex(m.trainer(tr, va), va).value);
      }
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= static_cast<double>(values.size());
      double var = 0.0;
      for (double v : values) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(values.size() - 1));
      cv.push_back({{"model", m.name}, {"c_index_mean", mean}, {"c_index_std", sd}, {"folds", values}});
      *ctx.out << "cv " << m.name << ": C-index " << std::fixed << std::setprecision(4) << mean << " ± " << sd
               << std::defaultfloat << '\n';
    }
    report["cv"] = cv;
  }

  std::vector<metrics::EvalReport> reports;
  for (const auto& m : models) {
    reports.push_back(metrics::evaluate(m.name, m.trainer(train_records, test_records), test_records, o.bootstrap,
                                        o.seed));
  }
  report["models"] = json::parse(metrics::to_json(reports));
  write_text(ctx, "report", o.out, report.dump(2) + "\n");
  print_reports(*ctx.out, reports);
}

// --- riskmap ---

struct RiskmapOpts {
  std::string model;
  std::string data;
  std::string overlay;
  std::string out;
  std::string overlay_out;
  std::size_t resolution = 200;
  std::string x_scale = "linear";
  std::string y_scale = "linear";
  std::string metric = "default";
  std::uint64_t seed = 0;
};

void cmd_riskmap(Context& ctx, const RiskmapOpts& o) {
  ctx.inputs["model"] = o.model;
  ctx.inputs["data"] = o.data;
  ctx.config["resolution"] = o.resolution;
  ctx.config["x_scale"] = o.x_scale;
  ctx.config["y_scale"] = o.y_scale;
  ctx.config["metric"] = o.metric;
  auto artifact = io::load_model(o.model);
  auto* model = std::get_if<train::FittedModel>(&artifact);
  if (!model) throw UsageError("risk maps need a DeepFHT model, got a Cox model");
  const auto& recipe = require_recipe(model->recipe);
  const auto train_records = data::to_records(recipe, data::load_csv(o.data, schema_for(recipe)));
  std::vector<data::SurvivalRecord> overlay;
  if (!o.overlay.empty()) {
    ctx.inputs["overlay"] = o.overlay;
    overlay = data::to_records(recipe, data::load_csv(o.overlay, schema_for(recipe)));
  }
  interpret::RiskMapOptions opts;
  opts.resolution = o.resolution;
  opts.x_scale = interpret::parse_scale(o.x_scale);
  opts.y_scale = interpret::parse_scale(o.y_scale);
  opts.metric = interpret::parse_metric(o.metric);
  const auto map = interpret::risk_grid(*model, train_records, overlay, opts);

  std::ostringstream grid;
  interpret::write_grid_csv(grid, map);
  write_text(ctx, "grid", o.out, grid.str());
  if (!overlay.empty()) {
    fs::path overlay_out = o.overlay_out;
    if (overlay_out.empty()) overlay_out = fs::path(o.out).replace_extension(".overlay.csv");
    std::ostringstream ov;
    interpret::write_overlay_csv(ov, map);
    write_text(ctx, "overlay", overlay_out, ov.str());
  }
  *ctx.out << "risk map " << map.x_axis.resolution << "x" << map.y_axis.resolution << " from " << map.n_sources
           << " uncensored subjects -> " << o.out << '\n';
}

// --- simulate ---

struct SimulateOpts {
  std::string distribution = "levy";
  double x0 = 1.0;
  double theta = 1.0;
  std::size_t paths = 100000;
  double dt = 1e-4;
  double t_max = 0.0;
  bool bridge = true;
  std::vector<double> times{0.1, 0.5, 1.0, 2.0, 5.0};
  std::string out;
  std::string samples;
  std::uint64_t seed = 0;
};

void cmd_simulate(Context& ctx, const SimulateOpts& o) {
  const fht::FhtParams params{fht::parse_dist_kind(o.distribution), o.x0, o.theta};
  if (o.times.empty()) throw UsageError("--times needs at least one value");
  for (double t : o.times) {
    if (!(t > 0.0)) throw UsageError("--times values must be > 0");
  }
  mc::SimConfig cfg;
  cfg.n_paths = o.paths;
  cfg.dt = o.dt;
  cfg.t_max = o.t_max > 0.0 ? o.t_max : *std::max_element(o.times.begin(), o.times.end());
  cfg.seed = o.seed;
  cfg.bridge_correction = o.bridge;
  ctx.config["simulation"] = {{"distribution", o.distribution}, {"x0", o.x0},     {"theta", o.theta},
                              {"paths", o.paths},               {"dt", o.dt},     {"t_max", cfg.t_max},
                              {"bridge", o.bridge},             {"times", o.times}};
  const auto sample = mc::simulate_fpt(params, cfg);
  const auto rows = mc::compare(params, sample, o.times);

  json summary;
  summary["distribution"] = o.distribution;
  summary["params"] = {{fht::parameter_names(params.kind)[0], o.x0}, {fht::parameter_names(params.kind)[1], o.theta}};
  summary["paths"] = o.paths;
  summary["dt"] = o.dt;
  summary["t_max"] = cfg.t_max;
  summary["bridge_correction"] = o.bridge;
  json cmp = json::array();
  double max_z = 0.0;
  *ctx.out << "t          empirical  closed_form  z\n";
  for (const auto& r : rows) {
    cmp.push_back({{"t", r.t}, {"empirical", r.empirical}, {"closed_form", r.closed_form}, {"se", r.se}, {"z", r.z}});
    max_z = std::max(max_z, std::abs(r.z));
    *ctx.out << std::left << std::setw(11) << r.t << std::setw(11) << r.empirical << std::setw(13) << r.closed_form
             << r.z << '\n';
  }
  summary["comparison"] = cmp;
  summary["max_abs_z"] = max_z;
  summary["within_3se"] = max_z <= 3.0;
  write_text(ctx, "summary", o.out, summary.dump(2) + "\n");
  if (!o.samples.empty()) {
    std::ostringstream s;
    mc::write_sample_csv(s, sample);
    write_text(ctx, "samples", o.samples, s.str());
  }
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool write_manifest);

void cmd_rerun(const std::string& manifest_path, std::ostream& out, std::ostream& err, int& code) {
  json m;
  try {
    m = json::parse(io::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw UsageError(manifest_path + ": malformed manifest: " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw UsageError(manifest_path + ": manifest has no argv");
  const auto argv = m["argv"].get<std::vector<std::string>>();
  if (!argv.empty() && argv.front() == "rerun") throw UsageError("a manifest cannot replay another rerun");
  code = dispatch(argv, out, err, false);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool write_manifest) {
  CLI::App app{"DeepFHT: first-hitting-time survival models", "deepfht"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::uint64_t seed = 0;

  GenerateOpts gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic NonPH dataset as CSV");
  generate->add_option("--out", gen.out, "Output CSV")->required();
  generate->add_option("--seed", seed, "Random seed");
  generate->add_option("--n-raw", gen.cfg.n_raw, "Records drawn before subsampling");
  generate->add_option("--n-keep", gen.cfg.n_keep, "Records kept");
  generate->add_option("--features", gen.cfg.n_features, "Number of covariates");
  generate->add_option("--censoring", gen.cfg.target_censoring, "Censored fraction of kept records");

  TrainOpts tr;
  auto* train = app.add_subcommand("train", "Fit preprocessing and a model; write the model file");
  train->add_option("--data", tr.data, "Training CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--config", tr.config, "Model config JSON")->check(CLI::ExistingFile);
  train->add_option("--out", tr.out, "Output model file")->required();
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--distribution", tr.distribution, "levy or invgauss (overrides the config)")
      ->check(CLI::IsMember({"levy", "invgauss"}));
  train->add_option("--model-type", tr.model_type, "deepfht or cox")->check(CLI::IsMember({"deepfht", "cox"}));
  train->add_option("--categorical", tr.categorical, "Columns to treat as categorical")->delimiter(',');

  EvalOpts ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a model file on a CSV");
  eval->add_option("--model", ev.model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", ev.data, "Evaluation CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", ev.out, "Output report (JSON)")->required();
  eval->add_option("--bootstrap", ev.bootstrap, "Bootstrap resamples (0 disables)");
  eval->add_option("--seed", seed, "Random seed");

  CompareOpts cmp;
  auto* compare = app.add_subcommand("compare", "Levy, inverse Gaussian and Cox models on one split");
  compare->add_option("--data", cmp.data, "CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--config", cmp.config, "Model config JSON")->check(CLI::ExistingFile);
  compare->add_option("--out", cmp.out, "Output report (JSON)")->required();
  compare->add_option("--bootstrap", cmp.bootstrap, "Bootstrap resamples (0 disables)");
  compare->add_option("--folds", cmp.folds, "Cross-validation folds on the training part (0 disables)");
  compare->add_option("--test-fraction", cmp.test_fraction, "Held-out fraction");
  compare->add_option("--categorical", cmp.categorical, "Columns to treat as categorical")->delimiter(',');
  compare->add_option("--seed", seed, "Random seed");

  RiskmapOpts rm;
  auto* riskmap = app.add_subcommand("riskmap", "Export an interpolated event-time grid over parameter space");
  riskmap->add_option("--model", rm.model, "DeepFHT model file")->required()->check(CLI::ExistingFile);
  riskmap->add_option("--data", rm.data, "Training CSV (uncensored rows are the sources)")
      ->required()
      ->check(CLI::ExistingFile);
  riskmap->add_option("--overlay", rm.overlay, "CSV of subjects to overlay")->check(CLI::ExistingFile);
  riskmap->add_option("--out", rm.out, "Output grid CSV")->required();
  riskmap->add_option("--overlay-out", rm.overlay_out, "Output overlay CSV");
  riskmap->add_option("--resolution", rm.resolution, "Cells per axis");
  riskmap->add_option("--x-scale", rm.x_scale, "linear or log")->check(CLI::IsMember({"linear", "log"}));
  riskmap->add_option("--y-scale", rm.y_scale, "linear or log")->check(CLI::IsMember({"linear", "log"}));
  riskmap->add_option("--metric", rm.metric, "default or raw")->check(CLI::IsMember({"default", "raw"}));
  riskmap->add_option("--seed", seed, "Unused; accepted for uniformity");

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo first-passage times vs the closed form");
  simulate->add_option("--distribution", sim.distribution, "levy or invgauss")
      ->check(CLI::IsMember({"levy", "invgauss"}));
  simulate->add_option("--x0", sim.x0, "Initial distance to the barrier");
  simulate->add_option("--theta", sim.theta, "D (levy) or mu (invgauss)");
  simulate->add_option("--paths", sim.paths, "Number of paths");
  simulate->add_option("--dt", sim.dt, "Time step");
  simulate->add_option("--t-max", sim.t_max, "Simulation horizon (default: largest --times)");
  simulate->add_flag("--bridge,!--no-bridge", sim.bridge, "Brownian-bridge crossing correction");
  simulate->add_option("--times", sim.times, "Comparison times")->delimiter(',');
  simulate->add_option("--out", sim.out, "Output summary (JSON)")->required();
  simulate->add_option("--samples", sim.samples, "Optional hitting-time CSV");
  simulate->add_option("--seed", seed, "Random seed");

  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "Replay a command from its manifest");
  rerun->add_option("manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  Context ctx;
  ctx.args = args;
  ctx.out = &out;
  ctx.write_manifest = write_manifest;
  try {
    const auto start = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    if (*generate) {
      gen.seed = seed;
      cmd_generate(ctx, gen);
      save_manifest(ctx, "generate", gen.out, seed, elapsed());
    } else if (*train) {
      tr.seed = seed;
      cmd_train(ctx, tr);
      save_manifest(ctx, "train", tr.out, seed, elapsed());
    } else if (*eval) {
      ev.seed = seed;
      cmd_eval(ctx, ev);
      save_manifest(ctx, "eval", ev.out, seed, elapsed());
    } else if (*compare) {
      cmp.seed = seed;
      cmd_compare(ctx, cmp);
      save_manifest(ctx, "compare", cmp.out, seed, elapsed());
    } else if (*riskmap) {
      rm.seed = seed;
      cmd_riskmap(ctx, rm);
      save_manifest(ctx, "riskmap", rm.out, seed, elapsed());
    } else if (*simulate) {
      sim.seed = seed;
      cmd_simulate(ctx, sim);
      save_manifest(ctx, "simulate", sim.out, seed, elapsed());
    } else if (*rerun) {
      int code = 0;
      cmd_rerun(manifest, out, err, code);
      return code;
    }
  } catch (const std::exception& e) {
    err << "deepfht: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

std::vector<nn::LayerSpec> ModelConfig::layers() const {
  std::vector<nn::LayerSpec> out;
  for (auto w : hidden_sizes) out.push_back({w, activation, dropout, batch_norm});
  return out;
}

train::TrainConfig ModelConfig::train_config(std::uint64_t seed) const {
  train::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.learning_rate = learning_rate;
  cfg.optimizer.kind = optimizer;
  cfg.seed = seed;
  cfg.eval_time_cap = eval_time_cap == 0 ? std::nullopt : std::optional<std::size_t>(eval_time_cap);
  return cfg;
}

ModelConfig parse_model_config(std::string_view json_text) {
  ModelConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "hidden_sizes") {
        cfg.hidden_sizes = value.get<std::vector<std::size_t>>();
      } else if (key == "activation") {
        cfg.activation = nn::parse_activation(value.get<std::string>());
      } else if (key == "dropout") {
        cfg.dropout = value.get<double>();
      } else if (key == "batch_norm") {
        cfg.batch_norm = value.get<bool>();
      } else if (key == "epochs") {
        cfg.epochs = value.get<std::size_t>();
      } else if (key == "batch_size") {
        cfg.batch_size = value.get<std::size_t>();
      } else if (key == "learning_rate") {
        cfg.learning_rate = value.get<double>();
      } else if (key == "distribution") {
        cfg.distribution = fht::parse_dist_kind(value.get<std::string>());
      } else if (key == "optimizer") {
        cfg.optimizer = train::parse_optimizer(value.get<std::string>());
      } else if (key == "eval_time_cap") {
        cfg.eval_time_cap = value.get<std::size_t>();
      } else {
        throw UsageError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config has a value of the wrong type: ") + e.what());
  }
  if (cfg.hidden_sizes.empty()) throw UsageError("config: hidden_sizes must not be empty");
  for (auto w : cfg.hidden_sizes) {
    if (w == 0) throw UsageError("config: hidden layer widths must be >= 1");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw UsageError("config: dropout must lie in [0, 1)");
  train::validate(cfg.train_config(0));
  return cfg;
}

std::string to_json(const ModelConfig& cfg) {
  json j = {{"hidden_sizes", cfg.hidden_sizes},
            {"activation", nn::to_string(cfg.activation)},
            {"dropout", cfg.dropout},
            {"batch_norm", cfg.batch_norm},
            {"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"learning_rate", cfg.learning_rate},
            {"distribution", fht::to_string(cfg.distribution)},
            {"optimizer", train::to_string(cfg.optimizer)},
            {"eval_time_cap", cfg.eval_time_cap}};
  return j.dump(2) + "\n";
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return dispatch(args, out, err, true);
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace deepfht::cli
