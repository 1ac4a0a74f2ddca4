#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sir/dataset.hpp"
#include "sir/schema.hpp"

namespace sir {

/// Synthetic booked-search corpus. The first two scale-variant features are
/// "price" and "discount"; the first two numeric query features are
/// "num_nights" and "exchange_rate".
struct GeneratorConfig {
  std::size_t num_queries = 2000;
  std::size_t min_items = 5;
  std::size_t max_items = 25;
  std::size_t query_numeric = 12;
  std::vector<std::size_t> categorical_cardinalities{5, 8, 12, 20};
  std::size_t embedding_dim = 3;
  std::size_t fixed = 12;
  std::size_t scalevariant = 2;
  double temperature = 1.0;
  std::uint64_t seed = 7;

  void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// The latent utility the generator books from:
///   u = sum_k beta_k z_k + nonlinear(z) + interaction(query, z)
///     + sum_k gamma_k(query) log(scalevariant_k) + query effect
/// where z_k is the standardized log of fixed feature k.
struct HiddenUtility {
  std::vector<double> fixed_weights;
  std::vector<double> fixed_log_mean;
  std::vector<double> fixed_log_sd;
  double fixed_shift = 0.5;
  std::vector<double> scalevariant_base;   // gamma_k at a neutral query
  std::vector<double> scalevariant_slope;  // gamma_k sensitivity to query numeric k
  std::vector<double> query_effect;        // per numeric query feature
  double nonlinear_weight = 0.8;
  double interaction_weight = 0.6;

  double utility(const QueryRecord& query, const ItemRecord& item) const;
  /// Index of the first generic query numeric (after num_nights, exchange_rate).
  static constexpr std::size_t kFirstGenericNumeric = 2;
};

struct GeneratedData {
  FeatureSchema schema;
  Dataset dataset;
  HiddenUtility utility;
};

FeatureSchema generator_schema(const GeneratorConfig& config);
GeneratedData generate(const GeneratorConfig& config);

/// Currency multipliers the generator draws a query's exchange rate from.
const std::vector<double>& exchange_rate_table();

/// Mean NDCG of ranking every query by its true utility. Throws ConfigError
/// when the utility is missing or does not fit the dataset.
double ideal_ndcg_bound(const Dataset& ds, const HiddenUtility* utility);

}  // namespace sir
