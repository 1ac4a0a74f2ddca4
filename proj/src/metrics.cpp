#include "sir/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "sir/error.hpp"
#include "sir/kernels.hpp"
#include "sir/losses.hpp"

namespace sir {

double ndcg(const Ranking& ranking, std::span<const int> labels) {
  if (ranking.positions.size() != labels.size()) {
    throw DimensionError("ndcg: ranking covers " + std::to_string(ranking.positions.size()) + " items but " +
                         std::to_string(labels.size()) + " labels were given");
  }
  std::vector<int> ideal(labels.begin(), labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double ideal_dcg = 0.0, dcg = 0.0;
  for (std::size_t i = 0; i < ideal.size(); ++i) {
    ideal_dcg += (std::exp2(ideal[i]) - 1.0) * position_discount(i + 1);
  }
  if (!(ideal_dcg > 0.0)) throw LabelError("ndcg: no booked item");
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] != 0) dcg += (std::exp2(labels[j]) - 1.0) * position_discount(ranking.positions[j]);
  }
  return dcg / ideal_dcg;
}

double random_ranker_ndcg(std::span<const std::size_t> list_sizes) {
  if (list_sizes.empty()) return 0.0;
  std::vector<double> per_list;
  per_list.reserve(list_sizes.size());
  for (std::size_t n : list_sizes) {
    double acc = 0.0;
    for (std::size_t r = 1; r <= n; ++r) acc += position_discount(r);
    per_list.push_back(acc / static_cast<double>(n));
  }
  return pairwise_sum(per_list) / static_cast<double>(per_list.size());
}

double random_ranker_ndcg(const PreparedDataset& ds) {
  std::vector<std::size_t> sizes;
  for (const auto& q : ds) sizes.push_back(q.num_items);
  return random_ranker_ndcg(sizes);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

EvalResult summarize(std::vector<double> per_query) {
  EvalResult r;
  r.count = per_query.size();
  r.mean = r.count ? pairwise_sum(per_query) / static_cast<double>(r.count) : 0.0;
  r.per_query = std::move(per_query);
  return r;
}

EvalResult mean_ndcg(const RankerModel& model, const PreparedDataset& ds) {
  return summarize(kernels::ndcg_per_query_parallel(model, ds));
}

EvalResult evaluate_scores(const std::vector<std::vector<double>>& scores, const PreparedDataset& ds) {
  if (scores.size() != ds.size()) throw DimensionError("evaluate_scores: score sets and dataset differ in length");
  std::vector<double> per_query(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (scores[i].size() != ds[i].num_items)
      throw DimensionError("evaluate_scores: query " + ds[i].query_id + " has a mismatched score vector");
    per_query[i] = ndcg(rank(scores[i]), ds[i].labels);
  }
  return summarize(std::move(per_query));
}

void to_json(nlohmann::json& j, const EvalResult& r) {
  j = {{"mean_ndcg", r.mean}, {"count", r.count}, {"per_query_ndcg", r.per_query}};
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("student_t_cdf: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t_distribution<double>(df), t);
}

TTestResult two_sample_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw DomainError("two_sample_t_test: each sample needs at least 2 values");
  auto moments = [](std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = pairwise_sum(x) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::pair{mean, ss / (n - 1.0)};
  };
  const auto [mean_a, var_a] = moments(a);
  const auto [mean_b, var_b] = moments(b);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double va = var_a / na, vb = var_b / nb;
  TTestResult r;
  if (va + vb == 0.0) {
    r.degenerate = true;
    r.df = na + nb - 2.0;
    if (mean_a == mean_b) {
      r.t = 0.0;
      r.p_value = 0.5;
    } else {
      r.t = mean_a < mean_b ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
      r.p_value = mean_a < mean_b ? 0.0 : 1.0;
    }
    return r;
  }
  r.t = (mean_a - mean_b) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  r.p_value = student_t_cdf(r.t, r.df);
  return r;
}

double bonferroni(double alpha, std::size_t n) {
  if (n == 0) throw DomainError("bonferroni: number of comparisons must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("bonferroni: alpha must lie in (0, 1]");
  return alpha / static_cast<double>(n);
}

}  // namespace sir
