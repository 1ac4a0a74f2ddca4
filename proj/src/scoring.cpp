#include "sir/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sir/error.hpp"

namespace sir {

namespace {

void require_finite(const PreparedQuery& q) {
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(q.query_numeric) || !finite(q.fixed_std) || !finite(q.scalevariant_std) || !finite(q.wide_raw)) {
    throw ScoringError("query '" + q.query_id + "' has non-finite inputs");
  }
}

void require_positive_wide(const RankerModel& model, const PreparedQuery& q, std::size_t first,
                           std::size_t last) {
  const auto& schema = model.schema();
  const std::size_t width = schema.num_item();
  for (std::size_t j = first; j < last; ++j) {
    for (std::size_t k = 0; k < width; ++k) {
      if (!(q.wide_raw[j * width + k] > 0.0)) {
        const std::string& name = k < schema.num_fixed() ? schema.item_features_fixed[k]
                                                         : schema.item_features_scalevariant[k - schema.num_fixed()];
        throw DomainError("query '" + q.query_id + "' item " + std::to_string(j) + ": wide-path feature '" +
                          name + "' must be strictly positive, got " + std::to_string(q.wide_raw[j * width + k]));
      }
    }
  }
}

PreparedQuery single_item(const RankerModel& model, const PreparedQuery& q, std::size_t j) {
  if (j >= q.num_items) {
    throw DimensionError("item index " + std::to_string(j) + " out of range for query '" + q.query_id +
                         "' with " + std::to_string(q.num_items) + " items");
  }
  const std::size_t k1 = model.schema().num_fixed(), k2 = model.schema().num_scalevariant();
  auto slice = [j](const std::vector<double>& v, std::size_t width) {
    if (v.empty()) return std::vector<double>{};
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(j * width),
                               v.begin() + static_cast<std::ptrdiff_t>((j + 1) * width));
  };
  PreparedQuery one;
  one.query_id = q.query_id;
  one.num_items = 1;
  one.query_numeric = q.query_numeric;
  one.query_categories = q.query_categories;
  one.fixed_std = slice(q.fixed_std, k1);
  one.scalevariant_std = slice(q.scalevariant_std, k2);
  one.wide_raw = slice(q.wide_raw, k1 + k2);
  one.labels = {q.labels.empty() ? 0 : q.labels[j]};
  return one;
}

}  // namespace

double score_deep(const RankerModel& model, const PreparedQuery& query, std::size_t item) {
  PreparedQuery one = single_item(model, query, item);
  require_finite(one);
  // The deep part never reads the raw wide-path values; blank them so the
  // result provably cannot depend on them.
  if (model.mode() == Mode::sir) std::fill(one.wide_raw.begin(), one.wide_raw.end(), 1.0);
  Tape tape;
  return tape.value(model.forward(tape, one).deep).values[0];
}

double score_wide(const RankerModel& model, const PreparedQuery& query, std::size_t item) {
  if (model.mode() == Mode::deep_only) return 0.0;
  PreparedQuery one = single_item(model, query, item);
  require_finite(one);
  require_positive_wide(model, query, item, item + 1);
  Tape tape;
  return tape.value(*model.forward(tape, one).wide).values[0];
}

std::vector<double> score_query(const RankerModel& model, const PreparedQuery& query) {
  require_finite(query);
  if (model.mode() == Mode::sir) require_positive_wide(model, query, 0, query.num_items);
  Tape tape;
  return tape.value(model.forward(tape, query).scores).values;
}

Ranking rank(std::span<const double> scores) {
  for (double s : scores) {
    if (std::isnan(s)) throw ScoringError("cannot rank a NaN score");
  }
  Ranking r;
  r.order.resize(scores.size());
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  r.positions.resize(scores.size());
  for (std::size_t pos = 0; pos < r.order.size(); ++pos) r.positions[r.order[pos]] = pos + 1;
  return r;
}

QueryRecord scale_query(const QueryRecord& query, double c) {
  QueryRecord out = query;
  for (auto& item : out.items)
    for (double& v : item.scalevariant) v *= c;
  return out;
}

double invariance_gap(const RankerModel& model, const StandardizationStats& stats, const QueryRecord& query,
                      double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("invariance_gap: scale must be positive and finite");
  const auto& schema = model.schema();
  const auto base = score_query(model, apply_standardization(query, schema, stats));
  const auto scaled = score_query(model, apply_standardization(scale_query(query, c), schema, stats));
  double gap = 0.0;
  for (std::size_t j = 0; j < base.size(); ++j) {
    for (std::size_t k = j + 1; k < base.size(); ++k) {
      gap = std::max(gap, std::abs((scaled[j] - scaled[k]) - (base[j] - base[k])));
    }
  }
  return gap;
}

}  // namespace sir
