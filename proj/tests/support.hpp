#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "sir/dataset.hpp"
#include "sir/generator.hpp"
#include "sir/schema.hpp"
#include "sir/standardize.hpp"

namespace sir::testing {

inline GeneratorConfig small_config(std::size_t queries, std::uint64_t seed = 11) {
  GeneratorConfig c;
  c.num_queries = queries;
  c.min_items = 3;
  c.max_items = 8;
  c.query_numeric = 5;
  c.categorical_cardinalities = {3, 4};
  c.embedding_dim = 2;
  c.fixed = 3;
  c.scalevariant = 2;
  c.seed = seed;
  return c;
}

struct Fixture {
  GeneratedData data;
  StandardizationStats stats;
  PreparedDataset prepared;
};

inline Fixture make_fixture(std::size_t queries, Mode mode = Mode::sir, std::uint64_t seed = 11) {
  Fixture f{generate(small_config(queries, seed)), {}, {}};
  f.stats = fit_standardization(f.data.dataset, f.data.schema, mode);
  f.prepared = apply_standardization(f.data.dataset, f.data.schema, f.stats);
  return f;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline std::vector<int> one_booked(std::size_t n, std::size_t booked) {
  std::vector<int> labels(n, 0);
  labels[booked] = 1;
  return labels;
}

}  // namespace sir::testing
