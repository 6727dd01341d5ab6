#include "deepfht/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace deepfht::io {
namespace {

using nlohmann::json;

std::string_view to_string(data::ColumnType t) { return t == data::ColumnType::Numeric ? "numeric" : "categorical"; }

data::ColumnType parse_column_type(const std::string& s) {
  if (s == "numeric") return data::ColumnType::Numeric;
  if (s == "categorical") return data::ColumnType::Categorical;
  throw FormatError("unknown column type '" + s + "'");
}

std::string_view to_string(data::ImputeRule r) {
  switch (r) {
    case data::ImputeRule::Mean: return "mean";
    case data::ImputeRule::Median: return "median";
    case data::ImputeRule::Mode: return "mode";
  }
  return "mean";
}

data::ImputeRule parse_rule(const std::string& s) {
  if (s == "mean") return data::ImputeRule::Mean;
  if (s == "median") return data::ImputeRule::Median;
  if (s == "mode") return data::ImputeRule::Mode;
  throw FormatError("unknown imputation rule '" + s + "'");
}

json recipe_json(const data::PreprocessRecipe& r) {
  json cols = json::array();
  for (const auto& c : r.columns) {
    cols.push_back({{"name", c.name},
                    {"type", to_string(c.type)},
                    {"impute", to_string(c.rule)},
                    {"fill_value", c.fill_value},
                    {"fill_category", c.fill_category},
                    {"categories", c.categories}});
  }
  json outs = json::array();
  for (const auto& o : r.outputs) {
    outs.push_back({{"source", o.source}, {"category", o.category}, {"name", o.name}, {"mean", o.mean}, {"scale", o.scale}});
  }
  return {{"columns", cols}, {"outputs", outs}, {"warnings", r.warnings}};
}

data::PreprocessRecipe recipe_from(const json& j) {
  data::PreprocessRecipe r;
  for (const auto& c : j.at("columns")) {
    data::ColumnRecipe cr;
    cr.name = c.at("name").get<std::string>();
    cr.type = parse_column_type(c.at("type").get<std::string>());
    cr.rule = parse_rule(c.at("impute").get<std::string>());
    cr.fill_value = c.at("fill_value").get<double>();
    cr.fill_category = c.at("fill_category").get<std::string>();
    cr.categories = c.at("categories").get<std::vector<std::string>>();
    r.columns.push_back(std::move(cr));
  }
  for (const auto& o : j.at("outputs")) {
    data::OutputColumn oc;
    oc.source = o.at("source").get<std::size_t>();
    if (oc.source >= r.columns.size()) throw FormatError("recipe output refers to a missing column");
    oc.category = o.at("category").get<std::string>();
    oc.name = o.at("name").get<std::string>();
    oc.mean = o.at("mean").get<double>();
    oc.scale = o.at("scale").get<double>();
    r.outputs.push_back(std::move(oc));
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

json envelope(std::string_view kind, const std::optional<data::PreprocessRecipe>& recipe) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = kind;
  j["recipe"] = recipe ? recipe_json(*recipe) : json(nullptr);
  return j;
}

void assign(std::vector<double>& dst, const json& src, std::size_t expected, const char* what) {
  dst = src.get<std::vector<double>>();
  if (dst.size() != expected) {
    throw FormatError(std::string("model file: '") + what + "' has " + std::to_string(dst.size()) +
                      " values, expected " + std::to_string(expected));
  }
}

train::FittedModel fitted_from(const json& j) {
  const json& net = j.at("network");
  nn::NetworkSpec spec;
  spec.kind = fht::parse_dist_kind(net.at("distribution").get<std::string>());
  spec.input_dim = net.at("input_dim").get<std::size_t>();
  for (const auto& l : net.at("hidden")) {
    nn::LayerSpec ls;
    ls.width = l.at("width").get<std::size_t>();
    ls.activation = nn::parse_activation(l.at("activation").get<std::string>());
    ls.dropout_p = l.at("dropout").get<double>();
    ls.batch_norm = l.at("batch_norm").get<bool>();
    spec.hidden.push_back(ls);
  }
  nn::validate(spec);
  nn::Network network = nn::make_network_for_io(spec);
  const auto& layers = net.at("hidden");
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    auto& h = network.hidden()[i];
    const json& l = layers[i];
    const std::size_t w = h.spec.width;
    assign(h.weight, l.at("weight"), w * h.in, "weight");
    assign(h.bias, l.at("bias"), w, "bias");
    if (h.spec.batch_norm) {
      assign(h.gamma, l.at("gamma"), w, "gamma");
      assign(h.beta, l.at("beta"), w, "beta");
      assign(h.running_mean, l.at("running_mean"), w, "running_mean");
      assign(h.running_var, l.at("running_var"), w, "running_var");
    }
  }
  auto& out = network.output();
  assign(out.weight, net.at("output").at("weight"), 2 * out.in, "output weight");
  assign(out.bias, net.at("output").at("bias"), 2, "output bias");
  network.set_rng_state(net.at("rng_state").get<std::string>());

  train::FittedModel model{std::move(network), std::nullopt, {}};
  if (!j.at("recipe").is_null()) model.recipe = recipe_from(j.at("recipe"));
  model.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  return model;
}

CoxArtifact cox_from(const json& j) {
  CoxArtifact a;
  const json& c = j.at("cox");
  a.model.beta = c.at("beta").get<std::vector<double>>();
  a.model.baseline_times = c.at("baseline_times").get<std::vector<double>>();
  a.model.baseline_survival = c.at("baseline_survival").get<std::vector<double>>();
  if (a.model.baseline_times.size() != a.model.baseline_survival.size()) {
    throw FormatError("model file: baseline times and survival differ in length");
  }
  const json& d = c.at("diagnostics");
  a.model.diagnostics.iterations = d.at("iterations").get<std::size_t>();
  a.model.diagnostics.gradient_norm = d.at("gradient_norm").get<double>();
  a.model.diagnostics.log_likelihood = d.at("log_likelihood").get<double>();
  a.model.diagnostics.log_likelihood_trace = d.at("log_likelihood_trace").get<std::vector<double>>();
  a.model.diagnostics.step_halvings = d.at("step_halvings").get<std::size_t>();
  a.model.diagnostics.ridge_used = d.at("ridge_used").get<double>();
  if (!j.at("recipe").is_null()) a.recipe = recipe_from(j.at("recipe"));
  return a;
}

}  // namespace

std::string serialize(const train::FittedModel& model) {
  json j = envelope("deepfht", model.recipe);
  const auto& net = model.network;
  json hidden = json::array();
  for (const auto& h : net.hidden()) {
    json l = {{"width", h.spec.width},
              {"activation", nn::to_string(h.spec.activation)},
              {"dropout", h.spec.dropout_p},
              {"batch_norm", h.spec.batch_norm},
              {"weight", h.weight},
              {"bias", h.bias}};
    if (h.spec.batch_norm) {
      l["gamma"] = h.gamma;
      l["beta"] = h.beta;
      l["running_mean"] = h.running_mean;
      l["running_var"] = h.running_var;
    }
    hidden.push_back(std::move(l));
  }
  j["network"] = {{"distribution", fht::to_string(net.kind())},
                  {"input_dim", net.input_dim()},
                  {"hidden", hidden},
                  {"output", {{"weight", net.output().weight}, {"bias", net.output().bias}}},
                  {"rng_state", net.rng_state()}};
  j["loss_trace"] = model.loss_trace;
  return j.dump(1) + "\n";
}

std::string serialize(const CoxArtifact& a) {
  json j = envelope("cox", a.recipe);
  const auto& d = a.model.diagnostics;
  j["cox"] = {{"beta", a.model.beta},
              {"baseline_times", a.model.baseline_times},
              {"baseline_survival", a.model.baseline_survival},
              {"diagnostics",
               {{"iterations", d.iterations},
                {"gradient_norm", d.gradient_norm},
                {"log_likelihood", d.log_likelihood},
                {"log_likelihood_trace", d.log_likelihood_trace},
                {"step_halvings", d.step_halvings},
                {"ridge_used", d.ridge_used}}}};
  return j.dump(1) + "\n";
}

ModelArtifact deserialize(std::string_view text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported model format_version " + std::to_string(version) + " (expected " +
                        std::to_string(kFormatVersion) + ")");
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "deepfht") return fitted_from(j);
    if (kind == "cox") return cox_from(j);
    throw FormatError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

std::string serialize_recipe(const data::PreprocessRecipe& recipe) { return recipe_json(recipe).dump(1) + "\n"; }

data::PreprocessRecipe deserialize_recipe(std::string_view text) {
  try {
    return recipe_from(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed recipe: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const train::FittedModel& model) {
  write_file_atomic(path, serialize(model));
}

void save_model(const std::filesystem::path& path, const CoxArtifact& model) {
  write_file_atomic(path, serialize(model));
}

ModelArtifact load_model(const std::filesystem::path& path) {
  try {
    return deserialize(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace deepfht::io
