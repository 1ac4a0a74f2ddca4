#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sir/dataset.hpp"
#include "sir/generator.hpp"
#include "sir/losses.hpp"
#include "sir/metrics.hpp"
#include "sir/perturbation.hpp"
#include "sir/trainer.hpp"

namespace sir {

inline constexpr std::size_t kReportColumns = 6;  // validation, test, Case 1-4
inline constexpr const char* kColumnNames[kReportColumns] = {"validation", "test", "case1",
                                                             "case2",      "case3", "case4"};

struct ExperimentConfig {
  TrainConfig train;  // loss and mode are overridden per cell
  std::vector<LossKind> losses{std::begin(kAllLosses), std::end(kAllLosses)};
  std::vector<Mode> modes{Mode::deep_only, Mode::sir};
  double alpha = 0.05;
  std::size_t comparisons = 25;
  /// Scale used for the per-row invariance-gap annotation.
  double gap_scale = kHighExchangeRate;
};

struct ExperimentRow {
  LossKind loss = LossKind::ranknet;
  Mode mode = Mode::sir;
  std::array<double, kReportColumns> ndcg{};
  std::array<std::vector<double>, kReportColumns - 1> per_query;  // test, Case 1-4
  TrainHistory history;
  double invariance_gap = 0.0;       // max over test queries at gap_scale
  double case4_ranking_change = 0.0; // fraction of test queries whose ranking moved
  std::optional<std::string> error;

  std::string label() const;
};

struct Comparison {
  LossKind loss = LossKind::ranknet;
  std::size_t column = 1;  // index into kColumnNames, 1..5
  TTestResult test;
  bool significant = false;
};

struct ExperimentReport {
  nlohmann::json provenance;
  nlohmann::json config;
  std::size_t train_queries = 0, validation_queries = 0, test_queries = 0;
  double random_ranker_ndcg = 0.0;
  std::optional<double> ideal_ndcg;
  double threshold = 0.0;
  std::vector<ExperimentRow> rows;
  std::vector<Comparison> comparisons;

  bool all_cells_ok() const;
  const ExperimentRow& row(LossKind loss, Mode mode) const;
};

std::string display_name(LossKind kind);

/// Trains every (loss x mode) cell on one hold-out split, scores the clean
/// test set and its four rescaled variants, and compares each SIR row to
/// its deep_only counterpart with one-sided Welch tests. A row is flagged
/// significant when the original model's NDCG is significantly below the
/// SIR model's at the Bonferroni-adjusted threshold.
ExperimentReport run_experiment(const Dataset& ds, const FeatureSchema& schema, const ExperimentConfig& config,
                                const HiddenUtility* utility = nullptr);

nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
std::string render_text(const ExperimentReport& report);
std::string render_csv(const ExperimentReport& report);

}  // namespace sir
