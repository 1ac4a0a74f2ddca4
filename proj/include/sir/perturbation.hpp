#pragma once

#include <string>
#include <vector>

#include "sir/dataset.hpp"
#include "sir/schema.hpp"

namespace sir {

inline constexpr double kHighExchangeRate = 1200.0;

/// Test-time rescaling of selected scale-variant features.
///   1: per-stay totals (times num_nights)
///   2: local currency (times the query's exchange_rate)
///   3: both of the above
///   4: a fixed high-rate currency for every query (times `rate`)
struct PerturbationCase {
  int id = 1;
  std::vector<std::string> targets{"price", "discount"};
  double rate = kHighExchangeRate;
};

/// Returns a rescaled copy; labels, fixed features and query features are
/// untouched. Within a query every target value gets the same multiplier.
Dataset apply_case(const Dataset& ds, const FeatureSchema& schema, const PerturbationCase& perturbation);

/// Multiplier applied to query `q` under `perturbation`.
double case_multiplier(const QueryRecord& q, const PerturbationCase& perturbation);

}  // namespace sir
