#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "sir/dataset.hpp"
#include "sir/error.hpp"
#include "sir/standardize.hpp"
#include "support.hpp"

using namespace sir;
namespace fs = std::filesystem;

namespace {

FeatureSchema tiny_schema() {
  FeatureSchema s;
  s.query_features = {{"nights", FeatureKind::numeric, 0, 0}, {"device", FeatureKind::categorical, 3, 2}};
  s.item_features_fixed = {"stars"};
  s.item_features_scalevariant = {"price"};
  return s;
}

QueryRecord tiny_query(std::string id, double nights, double device, std::vector<double> stars,
                       std::vector<double> prices, std::size_t booked) {
  QueryRecord q;
  q.query_id = std::move(id);
  q.query_values = {nights, device};
  for (std::size_t i = 0; i < stars.size(); ++i)
    q.items.push_back({"i" + std::to_string(i), {stars[i]}, {prices[i]}, i == booked ? 1 : 0});
  return q;
}

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("sir_test_" + name); }

}  // namespace

TEST(Schema, RejectsInvalid) {
  FeatureSchema s = tiny_schema();
  EXPECT_NO_THROW(s.validate());
  auto dup = s;
  dup.item_features_fixed = {"price"};
  EXPECT_THROW(dup.validate(), SchemaError);
  auto no_sv = s;
  no_sv.item_features_scalevariant.clear();
  EXPECT_THROW(no_sv.validate(), SchemaError);
  auto card = s;
  card.query_features[1].cardinality = 1;
  EXPECT_THROW(card.validate(), SchemaError);
}

TEST(Schema, JsonRoundTripAndFingerprint) {
  FeatureSchema s = tiny_schema();
  auto path = temp_file("schema.json");
  save_schema(s, path.string());
  FeatureSchema back = load_schema(path.string());
  EXPECT_EQ(back, s);
  EXPECT_EQ(back.fingerprint(), s.fingerprint());
  auto other = s;
  other.item_features_fixed = {"rating"};
  EXPECT_NE(other.fingerprint(), s.fingerprint());
  fs::remove(path);
}

TEST(LoadDataset, EmptyFile) {
  auto path = temp_file("empty.jsonl");
  std::ofstream(path).close();
  EXPECT_TRUE(load_dataset(path.string(), tiny_schema()).empty());
  fs::remove(path);
}

TEST(LoadDataset, MultipleBookedItems) {
  const std::string line =
      R"({"query_id":"q1","query":{"nights":2,"device":1},"num_nights":2,"exchange_rate":1.0,"items":[)"
      R"({"item_id":"a","fixed":{"stars":3},"scalevariant":{"price":100},"label":1},)"
      R"({"item_id":"b","fixed":{"stars":4},"scalevariant":{"price":90},"label":1}]})";
  try {
    parse_dataset(line + "\n", tiny_schema());
    FAIL();
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("multiple booked items"), std::string::npos) << msg;
    EXPECT_NE(msg.find("q1"), std::string::npos) << msg;
  }
}

TEST(LoadDataset, MalformedLineReportsLineNumber) {
  const std::string good =
      R"({"query_id":"q1","query":{"nights":2,"device":1},"num_nights":2,"exchange_rate":1.0,"items":[)"
      R"({"item_id":"a","fixed":{"stars":3},"scalevariant":{"price":100},"label":1},)"
      R"({"item_id":"b","fixed":{"stars":4},"scalevariant":{"price":90},"label":0}]})";
  EXPECT_EQ(parse_dataset(good + "\n\n" + good + "\n", tiny_schema()).size(), 2u);
  try {
    parse_dataset(good + "\n{not json\n", tiny_schema());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 2:", 0), 0u) << e.what();
  }
}

TEST(LoadDataset, RejectsNonPositiveScaleVariant) {
  Dataset ds{tiny_query("q", 1, 0, {3, 4}, {100, -1}, 0)};
  EXPECT_THROW(validate_dataset(ds, tiny_schema()), ValidationError);
  ds[0].items[1].scalevariant[0] = 5;
  EXPECT_NO_THROW(validate_dataset(ds, tiny_schema()));
  ds[0].query_values[1] = 3;
  EXPECT_THROW(validate_dataset(ds, tiny_schema()), ValidationError);
}

TEST(LoadDataset, RoundTripGenerated) {
  auto data = generate(sir::testing::small_config(40));
  auto path = temp_file("roundtrip.jsonl");
  save_dataset(data.dataset, data.schema, path.string());
  Dataset back = load_dataset(path.string(), data.schema);
  ASSERT_EQ(back.size(), data.dataset.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], data.dataset[i]) << i;
  fs::remove(path);
}

TEST(Generated, ExactlyOneBookedPerQuery) {
  auto data = generate(sir::testing::small_config(300));
  for (const auto& q : data.dataset) {
    int booked = 0;
    for (const auto& item : q.items) booked += item.label;
    EXPECT_EQ(booked, 1) << q.query_id;
  }
}

TEST(FitStandardization, ConstantFeatureRejected) {
  Dataset ds{tiny_query("a", 2, 0, {5, 5}, {1, 2}, 0), tiny_query("b", 3, 1, {5, 5}, {3, 4}, 1)};
  try {
    fit_standardization(ds, tiny_schema());
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("stars"), std::string::npos);
  }
}

TEST(FitStandardization, SymmetricValues) {
  Dataset ds{tiny_query("a", -1, 0, {1, 3}, {1, 2}, 0), tiny_query("b", 1, 1, {1, 3}, {3, 4}, 1)};
  auto stats = fit_standardization(ds, tiny_schema());
  ASSERT_EQ(stats.query.size(), 1u);
  EXPECT_EQ(stats.query[0].name, "nights");
  EXPECT_EQ(stats.query[0].mean, 0.0);
  EXPECT_EQ(stats.query[0].stddev, 1.0);
  EXPECT_EQ(stats.fixed[0].mean, 2.0);
  EXPECT_EQ(stats.fixed[0].stddev, 1.0);
  EXPECT_TRUE(stats.scalevariant.empty());
}

TEST(FitStandardization, MatchesTwoPass) {
  auto data = generate(sir::testing::small_config(120));
  const auto& schema = data.schema;
  auto stats = fit_standardization(data.dataset, schema, Mode::deep_only);
  auto two_pass = [](const std::vector<double>& xs) {
    double m = 0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double v = 0;
    for (double x : xs) v += (x - m) * (x - m);
    return std::pair{m, std::sqrt(v / static_cast<double>(xs.size()))};
  };
  std::size_t numeric = 0;
  for (std::size_t f = 0; f < schema.num_query(); ++f) {
    if (schema.query_features[f].kind != FeatureKind::numeric) continue;
    std::vector<double> xs;
    for (const auto& q : data.dataset) xs.push_back(q.query_values[f]);
    auto [m, s] = two_pass(xs);
    EXPECT_NEAR(stats.query[numeric].mean, m, 1e-12 * (1 + std::abs(m)));
    EXPECT_NEAR(stats.query[numeric].stddev, s, 1e-12 * (1 + s));
    ++numeric;
  }
  for (std::size_t k = 0; k < schema.num_fixed(); ++k) {
    std::vector<double> xs;
    for (const auto& q : data.dataset)
      for (const auto& it : q.items) xs.push_back(it.fixed[k]);
    auto [m, s] = two_pass(xs);
    EXPECT_NEAR(stats.fixed[k].mean, m, 1e-12 * (1 + std::abs(m)));
    EXPECT_NEAR(stats.fixed[k].stddev, s, 1e-12 * (1 + s));
  }
  for (std::size_t k = 0; k < schema.num_scalevariant(); ++k) {
    std::vector<double> xs;
    for (const auto& q : data.dataset)
      for (const auto& it : q.items) xs.push_back(it.scalevariant[k]);
    auto [m, s] = two_pass(xs);
    EXPECT_NEAR(stats.scalevariant[k].mean, m, 1e-12 * (1 + std::abs(m)));
    EXPECT_NEAR(stats.scalevariant[k].stddev, s, 1e-12 * (1 + s));
  }
}

TEST(ApplyStandardization, MeanAndOneSigma) {
  Dataset ds{tiny_query("a", 2, 0, {1, 3}, {10, 20}, 0), tiny_query("b", 4, 2, {1, 3}, {30, 40}, 1)};
  auto stats = fit_standardization(ds, tiny_schema());
  QueryRecord probe = tiny_query("p", 3, 1, {2, 3}, {7, 8}, 0);
  auto pq = apply_standardization(probe, tiny_schema(), stats);
  EXPECT_EQ(pq.query_numeric, (std::vector<double>{0.0}));
  EXPECT_EQ(pq.fixed_std, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(pq.query_categories, (std::vector<std::size_t>{1}));
}

TEST(ApplyStandardization, ScaleVariantStaysRaw) {
  auto data = generate(sir::testing::small_config(50));
  auto stats = fit_standardization(data.dataset, data.schema);
  auto prepared = apply_standardization(data.dataset, data.schema, stats);
  const std::size_t k1 = data.schema.num_fixed(), k2 = data.schema.num_scalevariant();
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const auto& q = data.dataset[i];
    EXPECT_TRUE(prepared[i].scalevariant_std.empty());
    for (std::size_t j = 0; j < q.size(); ++j) {
      for (std::size_t k = 0; k < k1; ++k) EXPECT_EQ(prepared[i].wide_raw[j * (k1 + k2) + k], q.items[j].fixed[k]);
      for (std::size_t k = 0; k < k2; ++k)
        EXPECT_EQ(prepared[i].wide_raw[j * (k1 + k2) + k1 + k], q.items[j].scalevariant[k]);
    }
  }
}

TEST(ApplyStandardization, UnknownFeatureInStats) {
  Dataset ds{tiny_query("a", 2, 0, {1, 3}, {10, 20}, 0), tiny_query("b", 4, 2, {1, 3}, {30, 40}, 1)};
  auto stats = fit_standardization(ds, tiny_schema());
  stats.fixed[0].name = "rating";
  EXPECT_THROW(apply_standardization(ds, tiny_schema(), stats), SchemaError);
}

TEST(ApplyStandardization, StatsJsonRoundTrip) {
  auto data = generate(sir::testing::small_config(30));
  auto stats = fit_standardization(data.dataset, data.schema, Mode::deep_only);
  nlohmann::json j = stats;
  EXPECT_EQ(j.get<StandardizationStats>(), stats);
}

TEST(SplitHoldout, HundredQueries) {
  auto data = generate(sir::testing::small_config(100));
  auto split = split_holdout(data.dataset, 3);
  EXPECT_EQ(split.train.size(), 63u);
  EXPECT_EQ(split.validation.size(), 7u);
  EXPECT_EQ(split.test.size(), 30u);
}

TEST(SplitHoldout, ProportionsWithinOneQuery) {
  for (std::size_t n : {10u, 11u, 37u, 99u, 250u, 1001u}) {
    Dataset ds(n);
    for (std::size_t i = 0; i < n; ++i) ds[i].query_id = std::to_string(i);
    auto split = split_holdout(ds, n);
    double dn = static_cast<double>(n);
    EXPECT_LE(std::abs(static_cast<double>(split.train.size()) - 0.63 * dn), 1.0) << n;
    EXPECT_LE(std::abs(static_cast<double>(split.validation.size()) - 0.07 * dn), 1.0) << n;
    EXPECT_LE(std::abs(static_cast<double>(split.test.size()) - 0.30 * dn), 1.0) << n;
  }
}

TEST(SplitHoldout, DeterministicPartition) {
  auto data = generate(sir::testing::small_config(200));
  auto a = split_holdout(data.dataset, 21), b = split_holdout(data.dataset, 21), c = split_holdout(data.dataset, 22);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.validation, b.validation);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.test, c.test);
  std::multiset<std::string> ids;
  for (const auto* part : {&a.train, &a.validation, &a.test})
    for (const auto& q : *part) ids.insert(q.query_id);
  std::multiset<std::string> all;
  for (const auto& q : data.dataset) all.insert(q.query_id);
  EXPECT_EQ(ids, all);
  EXPECT_EQ(std::set<std::string>(ids.begin(), ids.end()).size(), ids.size());
}

TEST(SplitHoldout, TooFewQueries) {
  Dataset ds(9);
  EXPECT_THROW(split_holdout(ds, 1), ValidationError);
}
