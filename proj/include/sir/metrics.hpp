#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sir/model.hpp"
#include "sir/scoring.hpp"
#include "sir/standardize.hpp"

namespace sir {

/// Full-list NDCG with gains 2^y - 1 and discounts 1 / log2(1 + position),
/// normalized by the DCG of the ideal ordering.
double ndcg(const Ranking& ranking, std::span<const int> labels);

/// Mean NDCG of ranking each list uniformly at random, in closed form.
double random_ranker_ndcg(std::span<const std::size_t> list_sizes);
double random_ranker_ndcg(const PreparedDataset& ds);

struct EvalResult {
  std::vector<double> per_query;
  double mean = 0.0;
  std::size_t count = 0;
};

void to_json(nlohmann::json& j, const EvalResult& r);

/// Order-fixed pairwise summation; result does not depend on thread count.
double pairwise_sum(std::span<const double> values);

EvalResult summarize(std::vector<double> per_query);

/// Scores, ranks and averages NDCG over every query (parallel kernel).
EvalResult mean_ndcg(const RankerModel& model, const PreparedDataset& ds);

/// NDCG of externally supplied per-query scores.
EvalResult evaluate_scores(const std::vector<std::vector<double>>& scores, const PreparedDataset& ds);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  /// P(T <= t): small when `a` is significantly smaller than `b`.
  double p_value = 0.5;
  bool degenerate = false;
};

/// Welch's unequal-variance two-sample t-test, one-sided toward a < b.
TTestResult two_sample_t_test(std::span<const double> a, std::span<const double> b);

/// alpha / n.
double bonferroni(double alpha, std::size_t n);

/// Student-t CDF with (possibly fractional) degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace sir
