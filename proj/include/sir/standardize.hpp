#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sir/dataset.hpp"
#include "sir/mode.hpp"
#include "sir/schema.hpp"

namespace sir {

struct FeatureStats {
  std::string name;
  double mean = 0.0;
  double stddev = 1.0;

  bool operator==(const FeatureStats&) const = default;
};

/// Train-split mean and standard deviation of every numeric feature that
/// feeds the deep stack. Scale-variant features are only covered for the
/// deep_only baseline; under sir they reach the model raw, through the log.
struct StandardizationStats {
  Mode mode = Mode::sir;
  std::vector<FeatureStats> query;
  std::vector<FeatureStats> fixed;
  std::vector<FeatureStats> scalevariant;

  bool operator==(const StandardizationStats&) const = default;
};

void to_json(nlohmann::json& j, const StandardizationStats& stats);
void from_json(const nlohmann::json& j, StandardizationStats& stats);

/// Query features count once per query, item features once per item.
/// Throws ValidationError naming any zero-variance feature.
StandardizationStats fit_standardization(const Dataset& train, const FeatureSchema& schema,
                                         Mode mode = Mode::sir);

/// Model-ready view of one query. Matrices are row-major, one row per item.
struct PreparedQuery {
  std::string query_id;
  std::size_t num_items = 0;
  std::vector<double> query_numeric;         // standardized
  std::vector<std::size_t> query_categories;
  std::vector<double> fixed_std;             // D x K1
  std::vector<double> scalevariant_std;      // D x K2, deep_only stats only
  std::vector<double> wide_raw;              // D x (K1 + K2), unstandardized
  std::vector<int> labels;
};

using PreparedDataset = std::vector<PreparedQuery>;

PreparedQuery apply_standardization(const QueryRecord& query, const FeatureSchema& schema,
                                    const StandardizationStats& stats);
PreparedDataset apply_standardization(const Dataset& ds, const FeatureSchema& schema,
                                      const StandardizationStats& stats);

}  // namespace sir
