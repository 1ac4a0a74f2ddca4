#include "sir/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sir/error.hpp"
#include "sir/scoring.hpp"

namespace sir {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::ranknet: return "ranknet";
    case LossKind::lambdarank: return "lambdarank";
    case LossKind::listnet: return "listnet";
    case LossKind::listmle: return "listmle";
    case LossKind::softrank: return "softrank";
  }
  return "unknown";
}

LossKind parse_loss(std::string_view text) {
  for (LossKind k : kAllLosses) {
    if (to_string(k) == text) return k;
  }
  throw ConfigError("unknown loss '" + std::string(text) +
                    "' (expected ranknet, lambdarank, listnet, listmle or softrank)");
}

double position_discount(std::size_t position) {
  return 1.0 / std::log2(1.0 + static_cast<double>(position));
}

namespace {

void check_sizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("loss: " + std::to_string(scores.size()) + " scores but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (scores.empty()) throw DomainError("loss: empty list");
}

std::size_t single_booked(std::span<const int> labels) {
  std::size_t found = labels.size();
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] != 0 && labels[j] != 1) throw LabelError("labels must be 0 or 1");
    if (labels[j] == 1) {
      if (found != labels.size()) throw LabelError("multiple booked items");
      found = j;
    }
  }
  if (found == labels.size()) throw LabelError("no booked item");
  return found;
}

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gain(int label) { return std::exp2(static_cast<double>(label)) - 1.0; }

double ideal_dcg(std::span<const int> labels) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double dcg = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) dcg += gain(sorted[i]) * position_discount(i + 1);
  return dcg;
}

// Adds weight * (-log P(j above k)) for every pair with labels[j] > labels[k].
template <typename WeightFn>
LossOutput pairwise_logistic(std::span<const double> scores, std::span<const int> labels, WeightFn weight) {
  LossOutput out;
  out.score_gradients.assign(scores.size(), 0.0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    for (std::size_t k = 0; k < scores.size(); ++k) {
      if (labels[j] <= labels[k]) continue;
      const double w = weight(j, k);
      if (w == 0.0) continue;
      const double d = scores[j] - scores[k];
      out.value += w * softplus(-d);
      const double g = w * sigmoid(-d);
      out.score_gradients[j] -= g;
      out.score_gradients[k] += g;
    }
  }
  return out;
}

std::vector<double> softmax_of(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> p(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (p[i] = std::exp(x[i] - m));
  for (double& v : p) v /= z;
  return p;
}

double logsumexp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - m);
  return m + std::log(z);
}

void require_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive and finite");
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

LossOutput ranknet_loss(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  single_booked(labels);
  return pairwise_logistic(scores, labels, [](std::size_t, std::size_t) { return 1.0; });
}

LossOutput lambdarank_loss(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  single_booked(labels);
  const Ranking current = rank(scores);
  const double idcg = ideal_dcg(labels);
  return pairwise_logistic(scores, labels, [&](std::size_t j, std::size_t k) {
    const double dg = std::abs(gain(labels[j]) - gain(labels[k]));
    const double dd = std::abs(position_discount(current.positions[j]) - position_discount(current.positions[k]));
    return dg * dd / idcg;
  });
}

LossOutput listnet_loss(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  std::vector<double> label_values(labels.begin(), labels.end());
  const auto target = softmax_of(label_values);
  const auto prob = softmax_of(scores);
  const double lse = logsumexp(scores);
  LossOutput out;
  out.score_gradients.resize(scores.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out.value -= target[j] * (scores[j] - lse);
    out.score_gradients[j] = prob[j] - target[j];
  }
  return out;
}

LossOutput listmle_loss(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  const std::size_t b = single_booked(labels);
  LossOutput out;
  out.value = logsumexp(scores) - scores[b];
  out.score_gradients = softmax_of(scores);
  out.score_gradients[b] -= 1.0;
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double pairwise_win_prob(double z_j, double z_k, double sigma) {
  require_sigma(sigma);
  return normal_cdf((z_j - z_k) / (sigma * std::numbers::sqrt2));
}

namespace {

// Row of item j, keeping every intermediate distribution for the reverse pass.
std::vector<std::vector<double>> fold_row(std::span<const double> z, std::size_t j, double sigma,
                                          std::vector<double>& beat_probs) {
  const std::size_t n = z.size();
  std::vector<std::vector<double>> stages;
  stages.reserve(n);
  stages.push_back({1.0});
  beat_probs.clear();
  for (std::size_t k = 0; k < n; ++k) {
    if (k == j) continue;
    const double p = pairwise_win_prob(z[k], z[j], sigma);
    beat_probs.push_back(p);
    const auto& prev = stages.back();
    std::vector<double> next(prev.size() + 1, 0.0);
    for (std::size_t r = 0; r < next.size(); ++r) {
      const double moved = r > 0 ? prev[r - 1] * p : 0.0;
      const double stayed = r < prev.size() ? prev[r] * (1.0 - p) : 0.0;
      next[r] = moved + stayed;
    }
    stages.push_back(std::move(next));
  }
  return stages;
}

}  // namespace

RankDistribution rank_distribution(std::span<const double> scores, double sigma) {
  require_sigma(sigma);
  if (scores.empty()) throw DomainError("rank_distribution: empty list");
  RankDistribution dist;
  dist.n = scores.size();
  dist.p.resize(dist.n * dist.n);
  std::vector<double> beat;
  for (std::size_t j = 0; j < dist.n; ++j) {
    const auto stages = fold_row(scores, j, sigma, beat);
    std::copy(stages.back().begin(), stages.back().end(), dist.p.begin() + static_cast<std::ptrdiff_t>(j * dist.n));
  }
  return dist;
}

LossOutput softrank_objective(std::span<const double> scores, std::span<const int> labels, double sigma) {
  require_sigma(sigma);
  check_sizes(scores, labels);
  const double gmax = ideal_dcg(labels);
  if (!(gmax > 0.0)) throw LabelError("no booked item");
  const std::size_t n = scores.size();
  const double scale = sigma * std::numbers::sqrt2;

  LossOutput out;
  out.score_gradients.assign(n, 0.0);
  std::vector<double> beat;
  for (std::size_t j = 0; j < n; ++j) {
    const double weight = gain(labels[j]) / gmax;
    if (weight == 0.0) continue;
    const auto stages = fold_row(scores, j, sigma, beat);
    const auto& final_row = stages.back();
    // Upstream gradient of the loss w.r.t. the final rank distribution.
    std::vector<double> g(n);
    for (std::size_t r = 0; r < n; ++r) {
      out.value -= weight * final_row[r] * position_discount(r + 1);
      g[r] = -weight * position_discount(r + 1);
    }
    // Reverse through the convolution steps; step t folded in partner
    // index partners[t] with beat probability beat[t].
    std::vector<std::size_t> partners;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) partners.push_back(k);
    for (std::size_t t = partners.size(); t-- > 0;) {
      const auto& prev = stages[t];
      const double p = beat[t];
      double dp = 0.0;
      std::vector<double> g_prev(prev.size(), 0.0);
      for (std::size_t r = 0; r <= prev.size(); ++r) {
        const double before = r > 0 ? prev[r - 1] : 0.0;
        const double here = r < prev.size() ? prev[r] : 0.0;
        dp += g[r] * (before - here);
      }
      for (std::size_t r = 0; r < prev.size(); ++r) g_prev[r] = g[r] * (1.0 - p) + g[r + 1] * p;
      // p = Phi((z_k - z_j) / (sigma sqrt 2))
      const double dz = dp * normal_pdf((scores[partners[t]] - scores[j]) / scale) / scale;
      out.score_gradients[partners[t]] += dz;
      out.score_gradients[j] -= dz;
      g = std::move(g_prev);
    }
  }
  return out;
}

LossOutput compute_loss(LossKind kind, std::span<const double> scores, std::span<const int> labels,
                        double sigma) {
  switch (kind) {
    case LossKind::ranknet: return ranknet_loss(scores, labels);
    case LossKind::lambdarank: return lambdarank_loss(scores, labels);
    case LossKind::listnet: return listnet_loss(scores, labels);
    case LossKind::listmle: return listmle_loss(scores, labels);
    case LossKind::softrank: return softrank_objective(scores, labels, sigma);
  }
  throw ConfigError("unknown loss kind");
}

}  // namespace sir
