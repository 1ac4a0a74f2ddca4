#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sir/losses.hpp"
#include "sir/model.hpp"
#include "sir/standardize.hpp"

namespace sir {

struct TrainConfig {
  LossKind loss = LossKind::ranknet;
  Mode mode = Mode::sir;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  double learning_rate = 0.005;
  double sigma = kDefaultSoftRankSigma;
  std::uint64_t seed = 7;
  std::vector<std::size_t> widths{64, 32, 16};
  std::size_t compressor_dim = 4;
  /// SoftRank trains on the booked item plus this many sampled negatives.
  std::size_t softrank_negatives = 8;
  /// Validation NDCG must beat the last improvement by more than this to
  /// reset the patience counter.
  double min_improvement = 1e-6;

  void validate() const;
  ModelConfig model_config() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);

enum class StopReason { max_epochs, early_stop };
std::string to_string(StopReason reason);

struct TrainHistory {
  std::vector<double> train_loss;       // mean loss per query, per epoch
  std::vector<double> validation_ndcg;  // per epoch
  StopReason stop_reason = StopReason::max_epochs;
  std::size_t best_epoch = 0;           // 0-based index into the vectors

  std::size_t epochs() const { return validation_ndcg.size(); }
  double best_validation_ndcg() const { return validation_ndcg.at(best_epoch); }
  bool operator==(const TrainHistory&) const = default;
};

void to_json(nlohmann::json& j, const TrainHistory& h);

struct TrainResult {
  RankerModel model;
  TrainHistory history;
};

/// Per-query SGD over seeded epoch shuffles, validated after every epoch.
/// Stops after `max_epochs` or when validation NDCG has not improved for
/// `patience` consecutive epochs, then restores the best epoch's weights.
/// Both datasets must be standardized with stats fitted on `train`.
TrainResult train(const FeatureSchema& schema, const PreparedDataset& train, const PreparedDataset& validation,
                  const TrainConfig& config);

/// Keeps the booked item and up to `negatives` other items drawn without
/// replacement, in their original order.
PreparedQuery sample_list(const PreparedQuery& query, std::size_t negatives, std::mt19937_64& rng);

}  // namespace sir
