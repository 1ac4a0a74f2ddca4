#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace sir {

enum class FeatureKind { numeric, categorical };

struct QueryFeature {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  std::size_t cardinality = 0;    // categorical only
  std::size_t embedding_dim = 0;  // categorical only

  bool operator==(const QueryFeature&) const = default;
};

/// Declares how a query record's features split between the query vector,
/// scale-fixed item features and scale-variant item features.
struct FeatureSchema {
  std::vector<QueryFeature> query_features;
  std::vector<std::string> item_features_fixed;
  std::vector<std::string> item_features_scalevariant;

  std::size_t num_query() const { return query_features.size(); }
  std::size_t num_fixed() const { return item_features_fixed.size(); }
  std::size_t num_scalevariant() const { return item_features_scalevariant.size(); }
  std::size_t num_item() const { return num_fixed() + num_scalevariant(); }

  std::size_t num_query_numeric() const;
  /// Width of the processed query representation: numeric features plus
  /// the concatenated embeddings of categorical ones.
  std::size_t query_repr_dim() const;

  /// Throws SchemaError on duplicate names, K2 == 0, or cardinality < 2.
  void validate() const;

  /// Index of a scale-variant feature, or throws ConfigError.
  std::size_t scalevariant_index(const std::string& name) const;

  /// FNV-1a 64 of the canonical JSON serialization, as 16 hex digits.
  std::string fingerprint() const;

  bool operator==(const FeatureSchema&) const = default;
};

void to_json(nlohmann::json& j, const FeatureSchema& schema);
void from_json(const nlohmann::json& j, FeatureSchema& schema);

FeatureSchema load_schema(const std::string& path);
void save_schema(const FeatureSchema& schema, const std::string& path);

std::string fnv1a_hex(const std::string& bytes);

}  // namespace sir
