#include <gtest/gtest.h>

#include "sir/error.hpp"
#include "sir/model.hpp"
#include "sir/perturbation.hpp"
#include "sir/scoring.hpp"
#include "support.hpp"

using namespace sir;

namespace {

GeneratedData data(std::size_t n = 60) {
  GeneratorConfig cfg;
  cfg.num_queries = n;
  return generate(cfg);
}

PerturbationCase make_case(int id) {
  PerturbationCase c;
  c.id = id;
  return c;
}

}  // namespace

TEST(ApplyCase, NightsOneIsIdentity) {
  auto d = data();
  for (auto& q : d.dataset) q.num_nights = 1;
  EXPECT_EQ(apply_case(d.dataset, d.schema, make_case(1)), d.dataset);
}

TEST(ApplyCase, CaseFourMultipliesByExactly1200) {
  auto d = data();
  auto out = apply_case(d.dataset, d.schema, make_case(4));
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j)
      for (std::size_t k = 0; k < 2; ++k)
        EXPECT_EQ(out[i].items[j].scalevariant[k], d.dataset[i].items[j].scalevariant[k] * 1200.0);
}

TEST(ApplyCase, CaseThreeIsComposition) {
  auto d = data();
  auto composed = apply_case(apply_case(d.dataset, d.schema, make_case(1)), d.schema, make_case(2));
  EXPECT_EQ(apply_case(d.dataset, d.schema, make_case(3)), composed);
}

TEST(ApplyCase, ConstantMultiplierPerQueryAndUntouchedFields) {
  auto d = data();
  for (int id = 1; id <= 4; ++id) {
    auto pc = make_case(id);
    auto out = apply_case(d.dataset, d.schema, pc);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto& a = d.dataset[i];
      const auto& b = out[i];
      double m = case_multiplier(a, pc);
      double expected = id == 1 ? a.num_nights : id == 2 ? a.exchange_rate : id == 3 ? a.num_nights * a.exchange_rate : 1200.0;
      EXPECT_EQ(m, expected);
      EXPECT_EQ(b.query_values, a.query_values);
      EXPECT_EQ(b.num_nights, a.num_nights);
      EXPECT_EQ(b.exchange_rate, a.exchange_rate);
      for (std::size_t j = 0; j < a.size(); ++j) {
        EXPECT_EQ(b.items[j].label, a.items[j].label);
        EXPECT_EQ(b.items[j].fixed, a.items[j].fixed);
        for (std::size_t k = 0; k < 2; ++k) {
          double v = a.items[j].scalevariant[k];
          double want = id == 3 ? v * a.num_nights * a.exchange_rate : v * m;
          EXPECT_EQ(b.items[j].scalevariant[k], want);
        }
      }
    }
  }
}

TEST(ApplyCase, TargetsSubset) {
  auto d = data();
  PerturbationCase pc = make_case(4);
  pc.targets = {"discount"};
  auto out = apply_case(d.dataset, d.schema, pc);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out[i].size(); ++j) {
      EXPECT_EQ(out[i].items[j].scalevariant[0], d.dataset[i].items[j].scalevariant[0]);
      EXPECT_EQ(out[i].items[j].scalevariant[1], d.dataset[i].items[j].scalevariant[1] * 1200.0);
    }
}

TEST(ApplyCase, InvalidConfiguration) {
  auto d = data(10);
  PerturbationCase pc = make_case(2);
  pc.targets = {"star_rating_missing"};
  EXPECT_THROW(apply_case(d.dataset, d.schema, pc), ConfigError);
  EXPECT_THROW(apply_case(d.dataset, d.schema, make_case(5)), ConfigError);
  pc = make_case(4);
  pc.rate = 0;
  EXPECT_THROW(apply_case(d.dataset, d.schema, pc), ConfigError);
}

TEST(ApplyCase, SirRankingsUnchanged) {
  auto d = data(80);
  auto stats = fit_standardization(d.dataset, d.schema);
  ModelConfig mc;
  mc.widths = {16, 8};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    RankerModel model(d.schema, mc, seed);
    auto base = apply_standardization(d.dataset, d.schema, stats);
    for (int id = 1; id <= 4; ++id) {
      auto moved = apply_standardization(apply_case(d.dataset, d.schema, make_case(id)), d.schema, stats);
      for (std::size_t i = 0; i < base.size(); ++i)
        EXPECT_EQ(rank(score_query(model, moved[i])), rank(score_query(model, base[i]))) << "case " << id;
    }
  }
}
