#include "sir/standardize.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "sir/error.hpp"

namespace sir {

std::string to_string(Mode mode) { return mode == Mode::sir ? "sir" : "deep_only"; }

Mode parse_mode(std::string_view text) {
  if (text == "sir") return Mode::sir;
  if (text == "deep_only") return Mode::deep_only;
  throw ConfigError("unknown model mode '" + std::string(text) + "' (expected sir or deep_only)");
}

namespace {

// Welford accumulator.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
};

FeatureStats finish(const std::string& name, const Moments& m) {
  const double var = m.n ? m.m2 / static_cast<double>(m.n) : 0.0;
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) throw ValidationError("feature '" + name + "' has zero variance on the training split");
  return FeatureStats{name, m.mean, sd};
}

void check_names(const std::vector<FeatureStats>& stats, const std::vector<std::string>& names,
                 const char* group) {
  if (stats.size() != names.size()) {
    throw SchemaError(std::string("standardization stats for ") + group + " features cover " +
                      std::to_string(stats.size()) + " features, schema declares " +
                      std::to_string(names.size()));
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (stats[k].name != names[k]) {
      throw SchemaError("standardization stats name unknown feature '" + stats[k].name + "'");
    }
  }
}

}  // namespace

StandardizationStats fit_standardization(const Dataset& train, const FeatureSchema& schema, Mode mode) {
  if (train.empty()) throw ValidationError("fit_standardization: empty training set");
  StandardizationStats stats;
  stats.mode = mode;

  for (std::size_t m = 0; m < schema.num_query(); ++m) {
    const auto& f = schema.query_features[m];
    if (f.kind != FeatureKind::numeric) continue;
    Moments acc;
    for (const auto& q : train) acc.add(q.query_values[m]);
    stats.query.push_back(finish(f.name, acc));
  }
  for (std::size_t k = 0; k < schema.num_fixed(); ++k) {
    Moments acc;
    for (const auto& q : train)
      for (const auto& item : q.items) acc.add(item.fixed[k]);
    stats.fixed.push_back(finish(schema.item_features_fixed[k], acc));
  }
  if (mode == Mode::deep_only) {
    for (std::size_t k = 0; k < schema.num_scalevariant(); ++k) {
      Moments acc;
      for (const auto& q : train)
        for (const auto& item : q.items) acc.add(item.scalevariant[k]);
      stats.scalevariant.push_back(finish(schema.item_features_scalevariant[k], acc));
    }
  }
  return stats;
}

PreparedQuery apply_standardization(const QueryRecord& q, const FeatureSchema& schema,
                                    const StandardizationStats& stats) {
  PreparedQuery out;
  out.query_id = q.query_id;
  out.num_items = q.items.size();

  std::size_t numeric_seen = 0;
  for (std::size_t m = 0; m < schema.num_query(); ++m) {
    const auto& f = schema.query_features[m];
    if (f.kind == FeatureKind::numeric) {
      if (numeric_seen >= stats.query.size() || stats.query[numeric_seen].name != f.name) {
        throw SchemaError("standardization stats do not cover query feature '" + f.name + "'");
      }
      const auto& s = stats.query[numeric_seen++];
      out.query_numeric.push_back((q.query_values[m] - s.mean) / s.stddev);
    } else {
      out.query_categories.push_back(static_cast<std::size_t>(q.query_values[m]));
    }
  }
  if (numeric_seen != stats.query.size()) {
    throw SchemaError("standardization stats name unknown query feature '" +
                      stats.query[numeric_seen].name + "'");
  }
  check_names(stats.fixed, schema.item_features_fixed, "fixed");
  const bool deep_sv = !stats.scalevariant.empty();
  if (deep_sv) check_names(stats.scalevariant, schema.item_features_scalevariant, "scale-variant");

  const std::size_t k1 = schema.num_fixed(), k2 = schema.num_scalevariant();
  out.fixed_std.reserve(out.num_items * k1);
  out.wide_raw.reserve(out.num_items * (k1 + k2));
  for (const auto& item : q.items) {
    for (std::size_t k = 0; k < k1; ++k) {
      out.fixed_std.push_back((item.fixed[k] - stats.fixed[k].mean) / stats.fixed[k].stddev);
    }
    if (deep_sv) {
      for (std::size_t k = 0; k < k2; ++k) {
        out.scalevariant_std.push_back((item.scalevariant[k] - stats.scalevariant[k].mean) /
                                       stats.scalevariant[k].stddev);
      }
    }
    out.wide_raw.insert(out.wide_raw.end(), item.fixed.begin(), item.fixed.end());
    out.wide_raw.insert(out.wide_raw.end(), item.scalevariant.begin(), item.scalevariant.end());
    out.labels.push_back(item.label);
  }
  return out;
}

PreparedDataset apply_standardization(const Dataset& ds, const FeatureSchema& schema,
                                      const StandardizationStats& stats) {
  PreparedDataset out;
  out.reserve(ds.size());
  for (const auto& q : ds) out.push_back(apply_standardization(q, schema, stats));
  return out;
}

namespace {

nlohmann::json stats_json(const std::vector<FeatureStats>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : v) a.push_back({{"name", s.name}, {"mean", s.mean}, {"stddev", s.stddev}});
  return a;
}

std::vector<FeatureStats> stats_from(const nlohmann::json& a) {
  std::vector<FeatureStats> v;
  for (const auto& e : a) {
    v.push_back({e.at("name").get<std::string>(), e.at("mean").get<double>(), e.at("stddev").get<double>()});
  }
  return v;
}

}  // namespace

void to_json(nlohmann::json& j, const StandardizationStats& stats) {
  j = {{"mode", to_string(stats.mode)},
       {"query", stats_json(stats.query)},
       {"fixed", stats_json(stats.fixed)},
       {"scalevariant", stats_json(stats.scalevariant)}};
}

void from_json(const nlohmann::json& j, StandardizationStats& stats) {
  stats.mode = parse_mode(j.at("mode").get<std::string>());
  stats.query = stats_from(j.at("query"));
  stats.fixed = stats_from(j.at("fixed"));
  stats.scalevariant = stats_from(j.at("scalevariant"));
}

}  // namespace sir
