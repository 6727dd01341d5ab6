#include "deepfht/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace deepfht::train {

BrierLoss brier_loss(const SurvivalFn& survival, std::span<const data::SurvivalRecord> subjects,
                     std::span<const double> times) {
  if (times.empty()) throw std::invalid_argument("Brier loss needs at least one event time");
  BrierLoss out;
  out.dloss_dsurvival = Matrix(subjects.size(), times.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const auto& r = subjects[i];
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const bool failed = r.time <= t && r.event;
      const bool at_risk = r.time > t;
      if (!failed && !at_risk) continue;
      const double s = survival(t, i);
      if (!(s >= 0.0 && s <= 1.0)) throw std::domain_error("survival prediction outside [0, 1]");
      if (failed) {
        out.value += s * s;
        out.dloss_dsurvival(i, k) = 2.0 * s;
      } else {
        out.value += (1.0 - s) * (1.0 - s);
        out.dloss_dsurvival(i, k) = -2.0 * (1.0 - s);
      }
    }
  }
  return out;
}

std::vector<double> unique_event_times(std::span<const data::SurvivalRecord> records) {
  std::vector<double> times;
  for (const auto& r : records) {
    if (r.event) times.push_back(r.time);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 2) throw std::invalid_argument("batch size must be >= 2 (batch norm needs batch statistics)");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("learning rate must be > 0");
  }
}

namespace {

struct BatchResult {
  double loss = 0.0;
  Matrix grad_params;
};

// Normalized Brier loss of one minibatch and its gradient with respect to
// the per-subject process parameters.
BatchResult batch_loss(const std::vector<fht::FhtParams>& params, std::span<const data::SurvivalRecord> batch,
                       std::span<const double> times) {
  const std::size_t n = batch.size();
  BatchResult out;
  out.grad_params = Matrix(n, 2);
  const double norm = 1.0 / (static_cast<double>(times.size()) * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = batch[i];
    double g0 = 0.0;
    double g1 = 0.0;
    for (double t : times) {
      const bool failed = r.time <= t && r.event;
      const bool at_risk = r.time > t;
      if (!failed && !at_risk) continue;
      const auto sg = fht::survival_with_grad(params[i], t);
      const double resid = failed ? sg.value : sg.value - 1.0;
      out.loss += resid * resid;
      g0 += 2.0 * resid * sg.grad[0];
      g1 += 2.0 * resid * sg.grad[1];
    }
    out.grad_params(i, 0) = g0 * norm;
    out.grad_params(i, 1) = g1 * norm;
  }
  out.loss *= norm;
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  // A trailing singleton cannot be batch-normalized; fold it into its neighbour.
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back().front());
    batches.pop_back();
  }
  return batches;
}

}  // namespace

FittedModel fit(std::span<const data::SurvivalRecord> dataset, fht::DistKind kind,
                const std::vector<nn::LayerSpec>& hidden, const TrainConfig& cfg) {
  validate(cfg);
  if (dataset.size() < 2) throw std::invalid_argument("training needs at least 2 subjects");
  for (const auto& r : dataset) data::validate(r);
  const std::vector<double> event_times = unique_event_times(dataset);
  if (event_times.empty()) throw std::invalid_argument("training data has no uncensored subject");

  nn::NetworkSpec spec;
  spec.input_dim = dataset.front().x.size();
  spec.hidden = hidden;
  spec.kind = kind;
  FittedModel model{nn::Network::init(spec, cfg.seed), std::nullopt, {}};

  std::vector<std::size_t> block_sizes;
  for (const auto& block : model.network.parameters()) block_sizes.push_back(block.size());
  Optimizer optimizer(cfg.optimizer, cfg.learning_rate, block_sizes);

  std::seed_seq loop_seed{cfg.seed, std::uint64_t{0x747261696e}};
  std::mt19937_64 rng(loop_seed);
  const std::size_t cap = cfg.eval_time_cap.value_or(0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t seen = 0;
    const auto batches = make_batches(dataset.size(), cfg.batch_size, rng);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& idx = batches[b];
      const auto batch = data::subset(dataset, idx);
      const auto times = stratified_time_subsample(std::span<const double>(event_times), cap, rng);

      auto fwd = model.network.forward(data::feature_matrix(batch), nn::Mode::Train);
      for (const auto& p : fwd.params) {
        if (!std::isfinite(p.x0) || !std::isfinite(p.theta)) {
          throw TrainingDiverged("non-finite network output at epoch " + std::to_string(epoch + 1) + ", batch " +
                                 std::to_string(b + 1) + "; try a smaller learning rate");
        }
      }
      const BatchResult br = batch_loss(fwd.params, batch, times);
      if (!std::isfinite(br.loss)) {
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                               std::to_string(b + 1) + "; try a smaller learning rate");
      }
      const nn::Gradients grads = model.network.backward(fwd.cache, br.grad_params);
      optimizer.step(model.network.parameters(), grads.blocks);

      epoch_loss += br.loss * static_cast<double>(idx.size());
      seen += idx.size();
    }
    model.loss_trace.push_back(epoch_loss / static_cast<double>(seen));
  }
  return model;
}

double predict_survival(const FittedModel& model, std::span<const double> x, double t) {
  return fht::survival(model.params(x), t);
}

SurvivalFn survival_fn(const FittedModel& model, std::span<const data::SurvivalRecord> subjects) {
  auto params = model.params(data::feature_matrix(subjects));
  return [params = std::move(params)](double t, std::size_t i) { return fht::survival(params.at(i), t); };
}

}  // namespace deepfht::train
