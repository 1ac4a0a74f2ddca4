#include "sir/schema.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "sir/error.hpp"

namespace sir {

std::size_t FeatureSchema::num_query_numeric() const {
  std::size_t n = 0;
  for (const auto& f : query_features) n += f.kind == FeatureKind::numeric;
  return n;
}

std::size_t FeatureSchema::query_repr_dim() const {
  std::size_t n = 0;
  for (const auto& f : query_features) n += f.kind == FeatureKind::numeric ? 1 : f.embedding_dim;
  return n;
}

void FeatureSchema::validate() const {
  std::set<std::string> names;
  auto claim = [&](const std::string& name) {
    if (name.empty()) throw SchemaError("feature names must be non-empty");
    if (!names.insert(name).second) throw SchemaError("duplicate feature name '" + name + "'");
  };
  for (const auto& f : query_features) {
    claim(f.name);
    if (f.kind == FeatureKind::categorical) {
      if (f.cardinality < 2) {
        throw SchemaError("categorical feature '" + f.name + "' needs cardinality >= 2");
      }
      if (f.embedding_dim == 0) {
        throw SchemaError("categorical feature '" + f.name + "' needs embedding_dim >= 1");
      }
    }
  }
  for (const auto& n : item_features_fixed) claim(n);
  for (const auto& n : item_features_scalevariant) claim(n);
  if (item_features_scalevariant.empty()) {
    throw SchemaError("schema needs at least one scale-variant item feature");
  }
}

std::size_t FeatureSchema::scalevariant_index(const std::string& name) const {
  for (std::size_t k = 0; k < item_features_scalevariant.size(); ++k) {
    if (item_features_scalevariant[k] == name) return k;
  }
  throw ConfigError("feature '" + name + "' is not a scale-variant feature of the schema");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string FeatureSchema::fingerprint() const {
  nlohmann::json j = *this;
  return fnv1a_hex(j.dump());
}

void to_json(nlohmann::json& j, const FeatureSchema& schema) {
  j = nlohmann::json::object();
  auto& q = j["query_features"] = nlohmann::json::array();
  for (const auto& f : schema.query_features) {
    nlohmann::json e{{"name", f.name}};
    if (f.kind == FeatureKind::numeric) {
      e["kind"] = "numeric";
    } else {
      e["kind"] = "categorical";
      e["cardinality"] = f.cardinality;
      e["embedding_dim"] = f.embedding_dim;
    }
    q.push_back(std::move(e));
  }
  j["item_features_fixed"] = schema.item_features_fixed;
  j["item_features_scalevariant"] = schema.item_features_scalevariant;
}

void from_json(const nlohmann::json& j, FeatureSchema& schema) {
  try {
    schema = FeatureSchema{};
    for (const auto& e : j.at("query_features")) {
      QueryFeature f;
      f.name = e.at("name").get<std::string>();
      const auto kind = e.at("kind").get<std::string>();
      if (kind == "numeric") {
        f.kind = FeatureKind::numeric;
      } else if (kind == "categorical") {
        f.kind = FeatureKind::categorical;
        f.cardinality = e.at("cardinality").get<std::size_t>();
        f.embedding_dim = e.value("embedding_dim", std::size_t{4});
      } else {
        throw SchemaError("feature '" + f.name + "' has unknown kind '" + kind + "'");
      }
      schema.query_features.push_back(std::move(f));
    }
    schema.item_features_fixed = j.at("item_features_fixed").get<std::vector<std::string>>();
    schema.item_features_scalevariant =
        j.at("item_features_scalevariant").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  schema.validate();
}

FeatureSchema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schema file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("schema file '" + path + "': " + e.what());
  }
  return j.get<FeatureSchema>();
}

void save_schema(const FeatureSchema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write schema file '" + path + "'");
  out << nlohmann::json(schema).dump(2) << '\n';
}

}  // namespace sir
