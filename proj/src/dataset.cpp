#include "sir/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sir/error.hpp"

namespace sir {

using nlohmann::json;

std::size_t QueryRecord::booked_index() const {
  std::size_t found = items.size();
  for (std::size_t j = 0; j < items.size(); ++j) {
    if (items[j].label == 1) {
      if (found != items.size()) throw LabelError("query '" + query_id + "': multiple booked items");
      found = j;
    }
  }
  if (found == items.size()) throw LabelError("query '" + query_id + "': no booked item");
  return found;
}

std::vector<int> QueryRecord::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(it.label);
  return out;
}

namespace {

[[noreturn]] void invalid(const QueryRecord& q, const std::string& rule) {
  throw ValidationError("query '" + q.query_id + "': " + rule);
}

}  // namespace

void validate_query(const QueryRecord& q, const FeatureSchema& schema) {
  if (q.query_values.size() != schema.num_query()) {
    invalid(q, "expected " + std::to_string(schema.num_query()) + " query features, got " +
                   std::to_string(q.query_values.size()));
  }
  for (std::size_t m = 0; m < schema.num_query(); ++m) {
    const auto& f = schema.query_features[m];
    const double v = q.query_values[m];
    if (!std::isfinite(v)) invalid(q, "query feature '" + f.name + "' is not finite");
    if (f.kind == FeatureKind::categorical) {
      if (v != std::floor(v) || v < 0 || v >= static_cast<double>(f.cardinality)) {
        invalid(q, "categorical feature '" + f.name + "' has id " + std::to_string(v) +
                       " outside [0, " + std::to_string(f.cardinality) + ")");
      }
    }
  }
  if (q.num_nights < 1) invalid(q, "num_nights must be a positive integer");
  if (!(q.exchange_rate > 0.0) || !std::isfinite(q.exchange_rate)) {
    invalid(q, "exchange_rate must be positive and finite");
  }
  if (q.items.size() < 2) invalid(q, "needs at least 2 items");
  if (q.items.size() > kMaxItemsPerQuery) {
    invalid(q, "has " + std::to_string(q.items.size()) + " items, more than " +
                   std::to_string(kMaxItemsPerQuery));
  }
  int booked = 0;
  for (const auto& item : q.items) {
    if (item.label != 0 && item.label != 1) invalid(q, "item '" + item.item_id + "' label must be 0 or 1");
    booked += item.label;
    if (item.fixed.size() != schema.num_fixed() ||
        item.scalevariant.size() != schema.num_scalevariant()) {
      invalid(q, "item '" + item.item_id + "' feature counts do not match the schema");
    }
    for (std::size_t k = 0; k < item.fixed.size(); ++k) {
      if (!std::isfinite(item.fixed[k]) || !(item.fixed[k] > 0.0)) {
        invalid(q, "item '" + item.item_id + "' fixed feature '" + schema.item_features_fixed[k] +
                       "' must be finite and strictly positive");
      }
    }
    for (std::size_t k = 0; k < item.scalevariant.size(); ++k) {
      if (!std::isfinite(item.scalevariant[k]) || !(item.scalevariant[k] > 0.0)) {
        invalid(q, "item '" + item.item_id + "' scale-variant feature '" +
                       schema.item_features_scalevariant[k] + "' must be finite and strictly positive");
      }
    }
  }
  if (booked == 0) invalid(q, "no booked item");
  if (booked > 1) invalid(q, "multiple booked items");
}

void validate_dataset(const Dataset& ds, const FeatureSchema& schema) {
  for (const auto& q : ds) validate_query(q, schema);
}

namespace {

std::vector<double> read_named(const json& obj, const std::vector<std::string>& names,
                               const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  if (obj.size() != names.size()) {
    throw ParseError(where + " has " + std::to_string(obj.size()) + " entries, schema declares " +
                     std::to_string(names.size()));
  }
  std::vector<double> out;
  out.reserve(names.size());
  for (const auto& n : names) {
    auto it = obj.find(n);
    if (it == obj.end()) throw ParseError(where + " is missing feature '" + n + "'");
    if (!it->is_number()) throw ParseError(where + " feature '" + n + "' is not a number");
    out.push_back(it->get<double>());
  }
  return out;
}

QueryRecord parse_query(const json& j, const FeatureSchema& schema) {
  QueryRecord q;
  q.query_id = j.at("query_id").get<std::string>();
  std::vector<std::string> qnames;
  for (const auto& f : schema.query_features) qnames.push_back(f.name);
  q.query_values = read_named(j.at("query"), qnames, "query");
  q.num_nights = j.at("num_nights").get<int>();
  q.exchange_rate = j.at("exchange_rate").get<double>();
  for (const auto& ij : j.at("items")) {
    ItemRecord item;
    item.item_id = ij.at("item_id").get<std::string>();
    item.fixed = read_named(ij.at("fixed"), schema.item_features_fixed, "fixed");
    item.scalevariant = read_named(ij.at("scalevariant"), schema.item_features_scalevariant, "scalevariant");
    item.label = ij.at("label").get<int>();
    q.items.push_back(std::move(item));
  }
  return q;
}

}  // namespace

Dataset parse_dataset(const std::string& text, const FeatureSchema& schema) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    QueryRecord q;
    try {
      q = parse_query(json::parse(line), schema);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_query(q, schema);
    ds.push_back(std::move(q));
  }
  return ds;
}

Dataset load_dataset(const std::string& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), schema);
}

std::string query_to_json_line(const QueryRecord& q, const FeatureSchema& schema) {
  json j;
  j["query_id"] = q.query_id;
  json query = json::object();
  for (std::size_t m = 0; m < schema.num_query(); ++m) {
    if (schema.query_features[m].kind == FeatureKind::categorical) {
      query[schema.query_features[m].name] = static_cast<long long>(q.query_values[m]);
    } else {
      query[schema.query_features[m].name] = q.query_values[m];
    }
  }
  j["query"] = std::move(query);
  j["num_nights"] = q.num_nights;
  j["exchange_rate"] = q.exchange_rate;
  json items = json::array();
  for (const auto& item : q.items) {
    json fixed = json::object(), sv = json::object();
    for (std::size_t k = 0; k < schema.num_fixed(); ++k) fixed[schema.item_features_fixed[k]] = item.fixed[k];
    for (std::size_t k = 0; k < schema.num_scalevariant(); ++k) {
      sv[schema.item_features_scalevariant[k]] = item.scalevariant[k];
    }
    items.push_back(json{{"item_id", item.item_id}, {"fixed", std::move(fixed)},
                         {"scalevariant", std::move(sv)}, {"label", item.label}});
  }
  j["items"] = std::move(items);
  return j.dump();
}

void save_dataset(const Dataset& ds, const FeatureSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write dataset file '" + path + "'");
  for (const auto& q : ds) out << query_to_json_line(q, schema) << '\n';
}

std::string dataset_fingerprint(const Dataset& ds, const FeatureSchema& schema) {
  std::string all;
  for (const auto& q : ds) {
    all += query_to_json_line(q, schema);
    all += '\n';
  }
  return fnv1a_hex(all);
}

HoldoutSplit split_holdout(const Dataset& ds, std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n < 10) throw ValidationError("split_holdout needs at least 10 queries, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_test = static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(n)));
  const std::size_t n_train_all = n - n_test;
  const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n_train_all)));
  const std::size_t n_train = n_train_all - n_val;

  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(from),
                                 order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(idx.begin(), idx.end());
    Dataset out;
    out.reserve(count);
    for (std::size_t i : idx) out.push_back(ds[i]);
    return out;
  };
  HoldoutSplit split;
  split.train = take(0, n_train);
  split.validation = take(n_train, n_val);
  split.test = take(n_train_all, n_test);
  return split;
}

}  // namespace sir
