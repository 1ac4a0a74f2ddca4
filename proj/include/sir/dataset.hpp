#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sir/schema.hpp"

namespace sir {

inline constexpr std::size_t kMaxItemsPerQuery = 25;

struct ItemRecord {
  std::string item_id;
  std::vector<double> fixed;         // K1, strictly positive
  std::vector<double> scalevariant;  // K2, strictly positive
  int label = 0;

  bool operator==(const ItemRecord&) const = default;
};

struct QueryRecord {
  std::string query_id;
  /// One value per schema query feature; categorical entries hold the
  /// integral category id.
  std::vector<double> query_values;
  int num_nights = 1;
  double exchange_rate = 1.0;
  std::vector<ItemRecord> items;

  std::size_t size() const { return items.size(); }
  /// Index of the single booked item.
  std::size_t booked_index() const;
  std::vector<int> labels() const;

  bool operator==(const QueryRecord&) const = default;
};

using Dataset = std::vector<QueryRecord>;

/// Throws ValidationError naming the query and the violated rule.
void validate_query(const QueryRecord& query, const FeatureSchema& schema);
void validate_dataset(const Dataset& ds, const FeatureSchema& schema);

/// JSON-Lines, one query object per line. Blank lines are skipped.
Dataset load_dataset(const std::string& path, const FeatureSchema& schema);
void save_dataset(const Dataset& ds, const FeatureSchema& schema, const std::string& path);

Dataset parse_dataset(const std::string& text, const FeatureSchema& schema);
std::string query_to_json_line(const QueryRecord& query, const FeatureSchema& schema);

/// Content hash of a dataset (FNV-1a over the JSON-Lines encoding).
std::string dataset_fingerprint(const Dataset& ds, const FeatureSchema& schema);

struct HoldoutSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// 70/30 train/test split by whole queries, with 10% of the training part
/// held out for validation (63/7/30 overall). Deterministic under seed.
HoldoutSplit split_holdout(const Dataset& ds, std::uint64_t seed);

}  // namespace sir
