#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sir/autodiff.hpp"
#include "sir/mode.hpp"
#include "sir/schema.hpp"
#include "sir/standardize.hpp"

namespace sir {

struct ModelConfig {
  Mode mode = Mode::sir;
  /// Hidden layer widths of the deep stack. 512-256-128 reproduces the
  /// full-size network; the smaller default trains in seconds.
  std::vector<std::size_t> widths{64, 32, 16};
  /// Output width L of the query compressor in the wide part.
  std::size_t compressor_dim = 4;

  bool operator==(const ModelConfig&) const = default;
};

/// Siamese per-item scorer. Every item of a query goes through the same
/// weights; scores never depend on other items of the list.
///
/// sir mode:       score = deep(query, fixed) + <w, compress(query) (x) log(fixed ++ scalevariant)>
/// deep_only mode: score = deep(query, fixed ++ scalevariant)
class RankerModel {
 public:
  RankerModel(FeatureSchema schema, ModelConfig config, std::uint64_t seed);
  /// Rebuilds a model around existing parameters (checkpoint loading).
  RankerModel(FeatureSchema schema, ModelConfig config, ParameterSet params);

  const FeatureSchema& schema() const { return schema_; }
  const ModelConfig& config() const { return config_; }
  Mode mode() const { return config_.mode; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  std::size_t deep_input_dim() const;

  struct Outputs {
    Var scores;                 // [D]
    Var deep;                   // [D]
    std::optional<Var> wide;    // [D], sir mode only
  };

  /// Records the forward pass of one query on `tape`.
  Outputs forward(Tape& tape, const PreparedQuery& query) const;

  /// Processed query representation: standardized numerics followed by the
  /// embeddings of each categorical feature, in schema order.
  Var query_representation(Tape& tape, const PreparedQuery& query) const;

 private:
  void check_architecture() const;

  FeatureSchema schema_;
  ModelConfig config_;
  ParameterSet params_;
};

struct Checkpoint {
  RankerModel model;
  StandardizationStats stats;
};

void save_checkpoint(const std::string& path, const RankerModel& model, const StandardizationStats& stats,
                     const nlohmann::json& provenance);
/// Throws SchemaError when the checkpoint was trained against a different
/// schema, naming both fingerprints.
Checkpoint load_checkpoint(const std::string& path, const FeatureSchema& expected_schema);

nlohmann::json checkpoint_to_json(const RankerModel& model, const StandardizationStats& stats);
Checkpoint checkpoint_from_json(const nlohmann::json& j, const FeatureSchema& expected_schema);

}  // namespace sir
