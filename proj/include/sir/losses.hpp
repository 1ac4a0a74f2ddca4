#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sir {

enum class LossKind { ranknet, lambdarank, listnet, listmle, softrank };

inline constexpr LossKind kAllLosses[] = {LossKind::ranknet, LossKind::lambdarank, LossKind::listnet,
                                          LossKind::listmle, LossKind::softrank};

std::string to_string(LossKind kind);
LossKind parse_loss(std::string_view text);

inline constexpr double kDefaultSoftRankSigma = 0.15;

/// Loss value and its gradient with respect to each item's score.
struct LossOutput {
  double value = 0.0;
  std::vector<double> score_gradients;
};

/// Cross-entropy over (more relevant, less relevant) pairs; tied pairs are
/// skipped, so with one booked item only booked-vs-other pairs contribute.
LossOutput ranknet_loss(std::span<const double> scores, std::span<const int> labels);

/// RankNet pairs reweighted by |delta NDCG| of swapping the two items in the
/// ranking induced by the current scores.
LossOutput lambdarank_loss(std::span<const double> scores, std::span<const int> labels);

/// -sum_j softmax(labels)_j log softmax(scores)_j.
LossOutput listnet_loss(std::span<const double> scores, std::span<const int> labels);

/// Negative top-one Plackett-Luce likelihood of the booked item.
LossOutput listmle_loss(std::span<const double> scores, std::span<const int> labels);

/// P(s_j > s_k) for s ~ N(z, sigma^2) independently.
double pairwise_win_prob(double z_j, double z_k, double sigma);

double normal_cdf(double x);

/// P[j][r]: probability that item j lands at rank r + 1 when every other
/// item independently beats it with its pairwise win probability.
struct RankDistribution {
  std::size_t n = 0;
  std::vector<double> p;  // n x n, row-major

  double at(std::size_t item, std::size_t rank0) const { return p[item * n + rank0]; }
};

RankDistribution rank_distribution(std::span<const double> scores, double sigma);

/// Negative smoothed NDCG: positional discounts replaced by their
/// expectation under rank_distribution.
LossOutput softrank_objective(std::span<const double> scores, std::span<const int> labels,
                              double sigma = kDefaultSoftRankSigma);

LossOutput compute_loss(LossKind kind, std::span<const double> scores, std::span<const int> labels,
                        double sigma = kDefaultSoftRankSigma);

/// 1 / log2(1 + position), position 1-based.
double position_discount(std::size_t position);

}  // namespace sir
