#include "sir/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "sir/error.hpp"
#include "sir/metrics.hpp"
#include "sir/scoring.hpp"

namespace sir {

namespace {

const char* const kFixedNames[] = {"star_rating", "review_score", "review_count", "distance_to_center",
                                   "popularity", "room_size", "photo_count", "amenity_score",
                                   "cancellation_window", "loyalty_points", "availability", "brand_strength"};
const char* const kCategoricalNames[] = {"point_of_sale", "device", "locale", "destination"};

constexpr double kPriceLogMean = 4.8;    // ~120 per night
constexpr double kPriceLevelSd = 0.6;    // destination price level
constexpr double kPriceItemSd = 0.45;
constexpr double kDiscountLogMean = 2.7; // ~15

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string pad(std::size_t i, int width) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

HiddenUtility make_utility(const GeneratorConfig& c) {
  std::mt19937_64 rng(splitmix64(c.seed ^ 0x5eedULL));
  std::normal_distribution<double> normal;
  HiddenUtility u;
  for (std::size_t k = 0; k < c.fixed; ++k) {
    u.fixed_weights.push_back(0.5 * normal(rng));
    u.fixed_log_mean.push_back(0.3 * static_cast<double>(k % 5));
    u.fixed_log_sd.push_back(0.4 + 0.05 * static_cast<double>(k % 4));
  }
  for (std::size_t k = 0; k < c.scalevariant; ++k) {
    if (k == 0) {
      u.scalevariant_base.push_back(-1.5);
      u.scalevariant_slope.push_back(0.4);
    } else if (k == 1) {
      u.scalevariant_base.push_back(0.5);
      u.scalevariant_slope.push_back(0.3);
    } else {
      u.scalevariant_base.push_back(0.3 * normal(rng));
      u.scalevariant_slope.push_back(0.0);
    }
  }
  for (std::size_t m = 0; m < c.query_numeric; ++m) u.query_effect.push_back(normal(rng));
  return u;
}

}  // namespace

const std::vector<double>& exchange_rate_table() {
  static const std::vector<double> table{1.0, 0.92, 0.79, 1.36, 1.52, 7.1, 18.0, 83.0, 110.0, 1200.0};
  return table;
}

void GeneratorConfig::validate() const {
  if (num_queries == 0) throw ConfigError("generator: num_queries must be positive");
  if (min_items < 2 || max_items > kMaxItemsPerQuery || min_items > max_items) {
    throw ConfigError("generator: items per query must satisfy 2 <= min <= max <= 25");
  }
  if (query_numeric < HiddenUtility::kFirstGenericNumeric + 3) {
    throw ConfigError("generator: needs at least 5 numeric query features");
  }
  if (fixed < 3) throw ConfigError("generator: needs at least 3 fixed item features");
  if (scalevariant < 2) throw ConfigError("generator: needs at least 2 scale-variant features (price, discount)");
  for (auto card : categorical_cardinalities) {
    if (card < 2) throw ConfigError("generator: categorical cardinality must be at least 2");
  }
  if (embedding_dim == 0) throw ConfigError("generator: embedding_dim must be positive");
  if (!(temperature > 0.0)) throw ConfigError("generator: temperature must be positive");
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"num_queries", c.num_queries},
       {"min_items", c.min_items},
       {"max_items", c.max_items},
       {"query_numeric", c.query_numeric},
       {"categorical_cardinalities", c.categorical_cardinalities},
       {"embedding_dim", c.embedding_dim},
       {"fixed", c.fixed},
       {"scalevariant", c.scalevariant},
       {"temperature", c.temperature},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  GeneratorConfig d;
  c.num_queries = j.value("num_queries", d.num_queries);
  c.min_items = j.value("min_items", d.min_items);
  c.max_items = j.value("max_items", d.max_items);
  c.query_numeric = j.value("query_numeric", d.query_numeric);
  c.categorical_cardinalities = j.value("categorical_cardinalities", d.categorical_cardinalities);
  c.embedding_dim = j.value("embedding_dim", d.embedding_dim);
  c.fixed = j.value("fixed", d.fixed);
  c.scalevariant = j.value("scalevariant", d.scalevariant);
  c.temperature = j.value("temperature", d.temperature);
  c.seed = j.value("seed", d.seed);
}

FeatureSchema generator_schema(const GeneratorConfig& c) {
  c.validate();
  FeatureSchema s;
  s.query_features.push_back({"num_nights", FeatureKind::numeric, 0, 0});
  s.query_features.push_back({"exchange_rate", FeatureKind::numeric, 0, 0});
  for (std::size_t m = HiddenUtility::kFirstGenericNumeric; m < c.query_numeric; ++m) {
    s.query_features.push_back({"query_signal_" + std::to_string(m - 2), FeatureKind::numeric, 0, 0});
  }
  for (std::size_t i = 0; i < c.categorical_cardinalities.size(); ++i) {
    std::string name = i < std::size(kCategoricalNames) ? kCategoricalNames[i] : "category_" + std::to_string(i);
    s.query_features.push_back({name, FeatureKind::categorical, c.categorical_cardinalities[i], c.embedding_dim});
  }
  for (std::size_t k = 0; k < c.fixed; ++k) {
    s.item_features_fixed.push_back(k < std::size(kFixedNames) ? kFixedNames[k] : "fixed_" + std::to_string(k));
  }
  s.item_features_scalevariant = {"price", "discount"};
  for (std::size_t k = 2; k < c.scalevariant; ++k) {
    s.item_features_scalevariant.push_back("scalevariant_" + std::to_string(k));
  }
  s.validate();
  return s;
}

double HiddenUtility::utility(const QueryRecord& q, const ItemRecord& item) const {
  std::vector<double> z(item.fixed.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    z[k] = (std::log(item.fixed[k] - fixed_shift) - fixed_log_mean[k]) / fixed_log_sd[k];
  }
  const std::size_t g = kFirstGenericNumeric;
  double u = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) u += fixed_weights[k] * z[k];
  u += nonlinear_weight * std::max(0.0, z[0] + z[1]);
  u -= interaction_weight * q.query_values[g + 2] * z[2];
  for (std::size_t k = 0; k < item.scalevariant.size(); ++k) {
    const double sensitivity = k < 2 ? q.query_values[g + k] : 0.0;
    u += (scalevariant_base[k] + scalevariant_slope[k] * sensitivity) * std::log(item.scalevariant[k]);
  }
  for (std::size_t m = g; m < query_effect.size(); ++m) u += query_effect[m] * q.query_values[m];
  return u;
}

GeneratedData generate(const GeneratorConfig& c) {
  GeneratedData out;
  out.schema = generator_schema(c);
  out.utility = make_utility(c);
  const auto& rates = exchange_rate_table();

  out.dataset.reserve(c.num_queries);
  for (std::size_t i = 0; i < c.num_queries; ++i) {
    std::mt19937_64 rng(splitmix64(c.seed) ^ splitmix64(i + 1));
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit;

    QueryRecord q;
    q.query_id = "q" + pad(i, 6);
    q.num_nights = std::uniform_int_distribution<int>(1, 14)(rng);
    q.exchange_rate = rates[std::uniform_int_distribution<std::size_t>(0, rates.size() - 1)(rng)];
    q.query_values.push_back(q.num_nights);
    q.query_values.push_back(q.exchange_rate);
    for (std::size_t m = HiddenUtility::kFirstGenericNumeric; m < c.query_numeric; ++m) {
      q.query_values.push_back(normal(rng));
    }
    for (auto card : c.categorical_cardinalities) {
      q.query_values.push_back(static_cast<double>(std::uniform_int_distribution<std::size_t>(0, card - 1)(rng)));
    }

    const auto items = std::uniform_int_distribution<std::size_t>(c.min_items, c.max_items)(rng);
    const double price_level = kPriceLogMean + kPriceLevelSd * normal(rng);
    for (std::size_t j = 0; j < items; ++j) {
      ItemRecord item;
      item.item_id = q.query_id + "_h" + pad(j, 2);
      for (std::size_t k = 0; k < c.fixed; ++k) {
        item.fixed.push_back(out.utility.fixed_shift +
                             std::exp(out.utility.fixed_log_mean[k] + out.utility.fixed_log_sd[k] * normal(rng)));
      }
      const double log_price = price_level + kPriceItemSd * normal(rng);
      item.scalevariant.push_back(std::exp(log_price));
      item.scalevariant.push_back(
          std::exp(kDiscountLogMean + 0.3 * (price_level - kPriceLogMean) + 0.5 * normal(rng)));
      for (std::size_t k = 2; k < c.scalevariant; ++k) item.scalevariant.push_back(std::exp(0.5 * normal(rng)));
      q.items.push_back(std::move(item));
    }

    // Book one item with probability softmax(u / temperature).
    std::vector<double> logits;
    for (const auto& item : q.items) logits.push_back(out.utility.utility(q, item) / c.temperature);
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) total += (l = std::exp(l - top));
    double draw = unit(rng) * total;
    std::size_t booked = items - 1;
    for (std::size_t j = 0; j < items; ++j) {
      draw -= logits[j];
      if (draw < 0.0) {
        booked = j;
        break;
      }
    }
    q.items[booked].label = 1;
    out.dataset.push_back(std::move(q));
  }
  return out;
}

double ideal_ndcg_bound(const Dataset& ds, const HiddenUtility* utility) {
  if (!utility) throw ConfigError("ideal_ndcg_bound: hidden utility weights are missing");
  std::vector<double> per_query;
  per_query.reserve(ds.size());
  for (const auto& q : ds) {
    if (q.query_values.size() < utility->query_effect.size()) {
      throw ConfigError("ideal_ndcg_bound: utility does not match the dataset's query features");
    }
    std::vector<double> u;
    for (const auto& item : q.items) {
      if (item.fixed.size() != utility->fixed_weights.size() ||
          item.scalevariant.size() != utility->scalevariant_base.size()) {
        throw ConfigError("ideal_ndcg_bound: utility does not match the dataset's item features");
      }
      u.push_back(utility->utility(q, item));
    }
    per_query.push_back(ndcg(rank(u), q.labels()));
  }
  return summarize(std::move(per_query)).mean;
}

}  // namespace sir
