#include "sir/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "sir/error.hpp"
#include "sir/metrics.hpp"

namespace sir {

void TrainConfig::validate() const {
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (patience >= max_epochs) throw ConfigError("patience must be smaller than max_epochs");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
  if (softrank_negatives == 0) throw ConfigError("softrank_negatives must be positive");
}

ModelConfig TrainConfig::model_config() const { return ModelConfig{mode, widths, compressor_dim}; }

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"loss", to_string(c.loss)},
       {"mode", to_string(c.mode)},
       {"max_epochs", c.max_epochs},
       {"patience", c.patience},
       {"learning_rate", c.learning_rate},
       {"sigma", c.sigma},
       {"seed", c.seed},
       {"widths", c.widths},
       {"compressor_dim", c.compressor_dim},
       {"softrank_negatives", c.softrank_negatives},
       {"min_improvement", c.min_improvement}};
}

std::string to_string(StopReason reason) { return reason == StopReason::max_epochs ? "max_epochs" : "early_stop"; }

void to_json(nlohmann::json& j, const TrainHistory& h) {
  j = {{"train_loss", h.train_loss},
       {"validation_ndcg", h.validation_ndcg},
       {"stop_reason", to_string(h.stop_reason)},
       {"best_epoch", h.best_epoch},
       {"epochs", h.epochs()}};
}

PreparedQuery sample_list(const PreparedQuery& q, std::size_t negatives, std::mt19937_64& rng) {
  std::vector<std::size_t> others;
  std::size_t booked = q.num_items;
  for (std::size_t j = 0; j < q.num_items; ++j) {
    if (q.labels[j] == 1 && booked == q.num_items) {
      booked = j;
    } else {
      others.push_back(j);
    }
  }
  if (booked == q.num_items) throw LabelError("query '" + q.query_id + "': no booked item");
  if (others.size() <= negatives) return q;

  // Partial Fisher-Yates: the first `negatives` entries become the sample.
  for (std::size_t i = 0; i < negatives; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, others.size() - 1);
    std::swap(others[i], others[pick(rng)]);
  }
  others.resize(negatives);
  others.push_back(booked);
  std::sort(others.begin(), others.end());

  const std::size_t k1 = q.fixed_std.size() / q.num_items;
  const std::size_t k2 = q.scalevariant_std.size() / q.num_items;
  const std::size_t kw = q.wide_raw.size() / q.num_items;
  PreparedQuery out;
  out.query_id = q.query_id;
  out.num_items = others.size();
  out.query_numeric = q.query_numeric;
  out.query_categories = q.query_categories;
  auto append_row = [](std::vector<double>& dst, const std::vector<double>& src, std::size_t j, std::size_t w) {
    dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(j * w),
               src.begin() + static_cast<std::ptrdiff_t>((j + 1) * w));
  };
  for (std::size_t j : others) {
    append_row(out.fixed_std, q.fixed_std, j, k1);
    if (k2) append_row(out.scalevariant_std, q.scalevariant_std, j, k2);
    append_row(out.wide_raw, q.wide_raw, j, kw);
    out.labels.push_back(q.labels[j]);
  }
  return out;
}

TrainResult train(const FeatureSchema& schema, const PreparedDataset& train_ds, const PreparedDataset& validation,
                  const TrainConfig& config) {
  config.validate();
  if (train_ds.empty()) throw TrainingError("training set is empty");
  if (validation.empty()) throw TrainingError("validation set is empty");

  RankerModel model(schema, config.model_config(), config.seed);
  ParameterSet& params = model.params();
  ParameterSet best_params = params;
  TrainHistory history;

  double best_value = -std::numeric_limits<double>::infinity();
  double anchor = best_value;
  std::size_t since_improvement = 0;
  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::mt19937_64 rng(config.seed * 0x9e3779b97f4a7c15ULL + epoch + 1);
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> losses;
    losses.reserve(order.size());
    for (std::size_t idx : order) {
      const PreparedQuery* query = &train_ds[idx];
      PreparedQuery sampled;
      if (config.loss == LossKind::softrank) {
        sampled = sample_list(*query, config.softrank_negatives, rng);
        query = &sampled;
      }
      Tape tape;
      const Var scores = model.forward(tape, *query).scores;
      LossOutput loss = compute_loss(config.loss, tape.value(scores).values, query->labels, config.sigma);
      if (!std::isfinite(loss.value)) {
        throw TrainingError("epoch " + std::to_string(epoch + 1) + ", query '" + query->query_id +
                            "': non-finite loss");
      }
      tape.backward(scores, Tensor::vector(std::move(loss.score_gradients)), params);
      try {
        sgd_step(params, config.learning_rate);
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch + 1) + ", query '" + query->query_id + "': " + e.what());
      }
      losses.push_back(loss.value);
    }
    history.train_loss.push_back(pairwise_sum(losses) / static_cast<double>(losses.size()));

    const double val = mean_ndcg(model, validation).mean;
    history.validation_ndcg.push_back(val);
    if (val > best_value) {
      best_value = val;
      history.best_epoch = epoch;
      best_params = params;
    }
    if (val > anchor + config.min_improvement) {
      anchor = val;
      since_improvement = 0;
    } else if (++since_improvement >= config.patience) {
      history.stop_reason = StopReason::early_stop;
      break;
    }
  }
  params = std::move(best_params);
  return TrainResult{std::move(model), std::move(history)};
}

}  // namespace sir
