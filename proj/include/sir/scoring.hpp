#pragma once

#include <span>
#include <vector>

#include "sir/dataset.hpp"
#include "sir/model.hpp"
#include "sir/standardize.hpp"

namespace sir {

/// Deep-part score of item j. Reads query features and the item's
/// standardized fixed features only (plus the scale-variant copy in
/// deep_only mode, where the deep part is the whole model).
double score_deep(const RankerModel& model, const PreparedQuery& query, std::size_t item);

/// Wide-part score <w, compress(query) (x) log(raw item features)> of item j.
/// Zero for deep_only models, which have no wide part.
double score_wide(const RankerModel& model, const PreparedQuery& query, std::size_t item);

/// Per-item scores for the whole list.
std::vector<double> score_query(const RankerModel& model, const PreparedQuery& query);

/// A permutation of one query's items sorted by descending score.
struct Ranking {
  std::vector<std::size_t> order;      // position (0-based) -> item index
  std::vector<std::size_t> positions;  // item index -> 1-based position

  bool operator==(const Ranking&) const = default;
};

/// Stable descending sort; ties keep ascending item index.
Ranking rank(std::span<const double> scores);

/// Multiplies every scale-variant value of every item by `c`.
QueryRecord scale_query(const QueryRecord& query, double c);

/// Largest |(s~_j - s~_k) - (s_j - s_k)| over item pairs, where s~ scores the
/// query with its scale-variant features multiplied by c.
double invariance_gap(const RankerModel& model, const StandardizationStats& stats, const QueryRecord& query,
                      double c);

}  // namespace sir
