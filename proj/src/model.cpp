#include "sir/model.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "sir/error.hpp"

namespace sir {

namespace {

constexpr double kEmbeddingInitLimit = 0.05;
constexpr int kCheckpointVersion = 1;

std::string layer_name(std::size_t i, const char* what) {
  return "deep.layer" + std::to_string(i) + "." + what;
}

}  // namespace

RankerModel::RankerModel(FeatureSchema schema, ModelConfig config, std::uint64_t seed)
    : schema_(std::move(schema)), config_(std::move(config)) {
  schema_.validate();
  check_architecture();
  std::mt19937_64 rng(seed);

  for (const auto& f : schema_.query_features) {
    if (f.kind != FeatureKind::categorical) continue;
    params_.add("embedding." + f.name,
                uniform_tensor(Shape{f.cardinality, f.embedding_dim}, kEmbeddingInitLimit, rng));
  }
  std::size_t fan_in = deep_input_dim();
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    params_.add(layer_name(i, "weight"), glorot_uniform(fan_in, config_.widths[i], rng));
    params_.add(layer_name(i, "bias"), Tensor(Shape{config_.widths[i]}, 0.0));
    fan_in = config_.widths[i];
  }
  params_.add("deep.head.weight", glorot_uniform(fan_in, 1, rng));
  params_.add("deep.head.bias", Tensor(Shape{1}, 0.0));

  if (config_.mode == Mode::sir) {
    const std::size_t repr = schema_.query_repr_dim(), dim_l = config_.compressor_dim;
    params_.add("compressor.weight", glorot_uniform(repr, dim_l, rng));
    params_.add("compressor.bias", Tensor(Shape{dim_l}, 0.0));
    Tensor w = glorot_uniform(dim_l * schema_.num_item(), 1, rng);
    w.shape = Shape{dim_l * schema_.num_item()};
    params_.add("wide.weight", std::move(w));
  }
}

RankerModel::RankerModel(FeatureSchema schema, ModelConfig config, ParameterSet params)
    : schema_(std::move(schema)), config_(std::move(config)), params_(std::move(params)) {
  schema_.validate();
  check_architecture();
  // Shape check against a freshly initialized reference.
  RankerModel reference(schema_, config_, 0);
  if (reference.params_.size() != params_.size()) {
    throw SchemaError("parameter set does not match the model architecture");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (reference.params_[i].name != params_[i].name ||
        reference.params_[i].value.shape != params_[i].value.shape) {
      throw SchemaError("parameter '" + params_[i].name + "' does not match the model architecture");
    }
    if (!params_[i].value.all_finite()) throw SchemaError("parameter '" + params_[i].name + "' is not finite");
  }
}

void RankerModel::check_architecture() const {
  if (config_.widths.empty()) throw ConfigError("deep stack needs at least one hidden layer");
  for (auto w : config_.widths) {
    if (w == 0) throw ConfigError("hidden layer widths must be positive");
  }
  if (config_.mode == Mode::sir) {
    if (config_.compressor_dim == 0 || config_.compressor_dim >= schema_.query_repr_dim()) {
      throw ConfigError("compressor width L=" + std::to_string(config_.compressor_dim) +
                        " must satisfy 0 < L < " + std::to_string(schema_.query_repr_dim()) +
                        " (query representation width)");
    }
  }
}

std::size_t RankerModel::deep_input_dim() const {
  std::size_t d = schema_.query_repr_dim() + schema_.num_fixed();
  if (config_.mode == Mode::deep_only) d += schema_.num_scalevariant();
  return d;
}

Var RankerModel::query_representation(Tape& tape, const PreparedQuery& q) const {
  std::vector<Var> parts;
  parts.push_back(tape.constant(Tensor::vector(q.query_numeric)));
  std::size_t c = 0;
  for (const auto& f : schema_.query_features) {
    if (f.kind != FeatureKind::categorical) continue;
    Var table = tape.parameter(params_, "embedding." + f.name);
    parts.push_back(tape.embedding(table, q.query_categories.at(c++), f.name));
  }
  return tape.concat(parts);
}

RankerModel::Outputs RankerModel::forward(Tape& tape, const PreparedQuery& q) const {
  const std::size_t items = q.num_items;
  const std::size_t k1 = schema_.num_fixed(), k2 = schema_.num_scalevariant();
  if (q.query_numeric.size() != schema_.num_query_numeric() ||
      q.query_categories.size() != schema_.num_query() - schema_.num_query_numeric() ||
      q.fixed_std.size() != items * k1 || q.wide_raw.size() != items * (k1 + k2)) {
    throw DimensionError("prepared query '" + q.query_id + "' does not match the model schema");
  }
  if (config_.mode == Mode::deep_only && q.scalevariant_std.size() != items * k2) {
    throw DimensionError("prepared query '" + q.query_id +
                         "' lacks standardized scale-variant features required by deep_only mode");
  }

  Var repr = query_representation(tape, q);
  std::vector<Var> deep_parts{tape.repeat_rows(repr, items),
                              tape.constant(Tensor::matrix(items, k1, q.fixed_std))};
  if (config_.mode == Mode::deep_only) {
    deep_parts.push_back(tape.constant(Tensor::matrix(items, k2, q.scalevariant_std)));
  }
  Var h = tape.concat_cols(deep_parts);
  for (std::size_t i = 0; i < config_.widths.size(); ++i) {
    h = tape.relu(tape.affine(h, tape.parameter(params_, layer_name(i, "weight")),
                              tape.parameter(params_, layer_name(i, "bias"))));
  }
  Var head = tape.affine(h, tape.parameter(params_, "deep.head.weight"),
                         tape.parameter(params_, "deep.head.bias"));
  Outputs out;
  out.deep = tape.reshape(head, Shape{items});
  if (config_.mode == Mode::deep_only) {
    out.scores = out.deep;
    return out;
  }
  Var compressed = tape.affine(tape.reshape(repr, Shape{1, schema_.query_repr_dim()}),
                               tape.parameter(params_, "compressor.weight"),
                               tape.parameter(params_, "compressor.bias"));
  Var logs = tape.log(tape.constant(Tensor::matrix(items, k1 + k2, q.wide_raw)));
  out.wide = tape.kron_inner(compressed, logs, tape.parameter(params_, "wide.weight"));
  out.scores = tape.add(out.deep, *out.wide);
  return out;
}

nlohmann::json checkpoint_to_json(const RankerModel& model, const StandardizationStats& stats) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.params()) {
    params.push_back({{"name", p.name}, {"shape", p.value.shape}, {"values", p.value.values}});
  }
  return {{"format", "sir-ranker-checkpoint"},
          {"version", kCheckpointVersion},
          {"schema_fingerprint", model.schema().fingerprint()},
          {"schema", model.schema()},
          {"mode", to_string(model.mode())},
          {"widths", model.config().widths},
          {"compressor_dim", model.config().compressor_dim},
          {"standardization", stats},
          {"parameters", std::move(params)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j, const FeatureSchema& expected_schema) {
  try {
    if (j.at("format") != "sir-ranker-checkpoint" || j.at("version") != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint format or version");
    }
    const auto fp = j.at("schema_fingerprint").get<std::string>();
    if (fp != expected_schema.fingerprint()) {
      throw SchemaError("checkpoint schema fingerprint " + fp + " does not match schema fingerprint " +
                        expected_schema.fingerprint());
    }
    ModelConfig config;
    config.mode = parse_mode(j.at("mode").get<std::string>());
    config.widths = j.at("widths").get<std::vector<std::size_t>>();
    config.compressor_dim = j.at("compressor_dim").get<std::size_t>();
    ParameterSet params;
    for (const auto& e : j.at("parameters")) {
      params.add(e.at("name").get<std::string>(),
                 Tensor(e.at("shape").get<Shape>(), e.at("values").get<std::vector<double>>()));
    }
    auto stats = j.at("standardization").get<StandardizationStats>();
    return Checkpoint{RankerModel(expected_schema, config, std::move(params)), std::move(stats)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const RankerModel& model, const StandardizationStats& stats,
                     const nlohmann::json& provenance) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write checkpoint '" + path + "'");
  auto j = checkpoint_to_json(model, stats);
  j["provenance"] = provenance;
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path, const FeatureSchema& expected_schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint '" + path + "': " + e.what());
  }
  return checkpoint_from_json(j, expected_schema);
}

}  // namespace sir
