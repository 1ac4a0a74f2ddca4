#include "sir/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "sir/error.hpp"
#include "sir/kernels.hpp"
#include "sir/metrics.hpp"
#include "sir/perturbation.hpp"
#include "sir/scoring.hpp"

namespace sir {

std::string display_name(LossKind kind) {
  switch (kind) {
    case LossKind::ranknet: return "RankNet";
    case LossKind::lambdarank: return "LambdaRank";
    case LossKind::listnet: return "ListNet";
    case LossKind::listmle: return "ListMLE";
    case LossKind::softrank: return "SoftRank";
  }
  return "?";
}

std::string ExperimentRow::label() const {
  return display_name(loss) + (mode == Mode::sir ? " (SIR)" : "");
}

bool ExperimentReport::all_cells_ok() const {
  return std::none_of(rows.begin(), rows.end(), [](const ExperimentRow& r) { return r.error.has_value(); });
}

const ExperimentRow& ExperimentReport::row(LossKind loss, Mode mode) const {
  for (const auto& r : rows) {
    if (r.loss == loss && r.mode == mode) return r;
  }
  throw ConfigError("report has no row for " + display_name(loss) + " / " + to_string(mode));
}

namespace {

struct ModeData {
  StandardizationStats stats;
  PreparedDataset train, validation;
  std::array<PreparedDataset, kReportColumns - 1> evaluation;  // test, Case 1-4
};

std::uint64_t cell_seed(std::uint64_t seed, std::size_t loss_index) {
  // Both modes of one loss share the initialization stream.
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (loss_index + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  return x ^ (x >> 31);
}

void run_cell(ExperimentRow& row, const FeatureSchema& schema, const ModeData& data, const Dataset& raw_test,
              const ExperimentConfig& config, std::uint64_t seed) {
  TrainConfig tc = config.train;
  tc.loss = row.loss;
  tc.mode = row.mode;
  tc.seed = seed;
  TrainResult trained = train(schema, data.train, data.validation, tc);
  row.history = trained.history;
  row.ndcg[0] = trained.history.best_validation_ndcg();

  std::array<std::vector<std::vector<double>>, kReportColumns - 1> scores;
  for (std::size_t c = 0; c < scores.size(); ++c) {
    scores[c] = kernels::score_dataset_serial(trained.model, data.evaluation[c]);
    std::vector<double> per_query(scores[c].size());
    for (std::size_t i = 0; i < per_query.size(); ++i) {
      per_query[i] = ndcg(rank(scores[c][i]), data.evaluation[c][i].labels);
    }
    row.ndcg[c + 1] = summarize(per_query).mean;
    row.per_query[c] = std::move(per_query);
  }
  row.case4_ranking_change = kernels::ranking_change_rate(scores[0], scores[4]);
  for (const auto& q : raw_test) {
    row.invariance_gap = std::max(row.invariance_gap, invariance_gap(trained.model, data.stats, q, config.gap_scale));
  }
}

}  // namespace

ExperimentReport run_experiment(const Dataset& ds, const FeatureSchema& schema, const ExperimentConfig& config,
                                const HiddenUtility* utility) {
  config.train.validate();
  const HoldoutSplit split = split_holdout(ds, config.train.seed);

  ExperimentReport report;
  report.train_queries = split.train.size();
  report.validation_queries = split.validation.size();
  report.test_queries = split.test.size();
  report.threshold = bonferroni(config.alpha, config.comparisons);
  {
    std::vector<std::size_t> sizes;
    for (const auto& q : split.test) sizes.push_back(q.size());
    report.random_ranker_ndcg = random_ranker_ndcg(sizes);
  }
  if (utility) report.ideal_ndcg = ideal_ndcg_bound(split.test, utility);

  std::array<Dataset, kReportColumns - 1> raw_eval;
  raw_eval[0] = split.test;
  for (int c = 1; c <= 4; ++c) raw_eval[static_cast<std::size_t>(c)] = apply_case(split.test, schema, PerturbationCase{c});

  std::map<Mode, ModeData> per_mode;
  for (Mode m : config.modes) {
    ModeData d;
    d.stats = fit_standardization(split.train, schema, m);
    d.train = apply_standardization(split.train, schema, d.stats);
    d.validation = apply_standardization(split.validation, schema, d.stats);
    for (std::size_t c = 0; c < raw_eval.size(); ++c) d.evaluation[c] = apply_standardization(raw_eval[c], schema, d.stats);
    per_mode.emplace(m, std::move(d));
  }

  std::vector<std::size_t> loss_index;
  for (std::size_t li = 0; li < config.losses.size(); ++li) {
    for (Mode m : config.modes) {
      ExperimentRow row;
      row.loss = config.losses[li];
      row.mode = m;
      report.rows.push_back(std::move(row));
      loss_index.push_back(li);
    }
  }

  // Cells are independent and individually deterministic.
  const auto cells = static_cast<std::ptrdiff_t>(report.rows.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < cells; ++i) {
    auto& row = report.rows[static_cast<std::size_t>(i)];
    try {
      run_cell(row, schema, per_mode.at(row.mode), split.test, config,
               cell_seed(config.train.seed, loss_index[static_cast<std::size_t>(i)]));
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  }

  const bool both_modes = std::count(config.modes.begin(), config.modes.end(), Mode::sir) &&
                          std::count(config.modes.begin(), config.modes.end(), Mode::deep_only);
  if (both_modes) {
    for (LossKind loss : config.losses) {
      const auto& original = report.row(loss, Mode::deep_only);
      const auto& invariant = report.row(loss, Mode::sir);
      if (original.error || invariant.error) continue;
      for (std::size_t c = 1; c < kReportColumns; ++c) {
        Comparison cmp;
        cmp.loss = loss;
        cmp.column = c;
        cmp.test = two_sample_t_test(original.per_query[c - 1], invariant.per_query[c - 1]);
        cmp.significant = cmp.test.p_value < report.threshold;
        report.comparisons.push_back(cmp);
      }
    }
  }

  nlohmann::json cfg = config.train;
  cfg.erase("loss");
  cfg.erase("mode");
  std::vector<std::string> losses, modes;
  for (auto l : config.losses) losses.push_back(to_string(l));
  for (auto m : config.modes) modes.push_back(to_string(m));
  cfg["losses"] = losses;
  cfg["modes"] = modes;
  cfg["alpha"] = config.alpha;
  cfg["comparisons"] = config.comparisons;
  cfg["gap_scale"] = config.gap_scale;
  report.config = std::move(cfg);
  return report;
}

nlohmann::json report_to_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row{{"label", r.label()}, {"loss", to_string(r.loss)}, {"mode", to_string(r.mode)}};
    if (r.error) {
      row["error"] = *r.error;
    } else {
      for (std::size_t c = 0; c < kReportColumns; ++c) row[kColumnNames[c]] = r.ndcg[c];
      row["history"] = r.history;
      row["invariance_gap"] = r.invariance_gap;
      row["case4_ranking_change"] = r.case4_ranking_change;
    }
    rows.push_back(std::move(row));
  }
  nlohmann::json comparisons = nlohmann::json::array();
  for (const auto& c : report.comparisons) {
    comparisons.push_back({{"loss", to_string(c.loss)},
                           {"column", kColumnNames[c.column]},
                           {"t", c.test.t},
                           {"df", c.test.df},
                           {"p_value", c.test.p_value},
                           {"degenerate", c.test.degenerate},
                           {"significant", c.significant}});
  }
  nlohmann::json j{{"provenance", report.provenance},
                   {"config", report.config},
                   {"split", {{"train", report.train_queries},
                              {"validation", report.validation_queries},
                              {"test", report.test_queries}}},
                   {"random_ranker_ndcg", report.random_ranker_ndcg},
                   {"significance_threshold", report.threshold},
                   {"rows", std::move(rows)},
                   {"comparisons", std::move(comparisons)}};
  if (report.ideal_ndcg) j["ideal_ndcg"] = *report.ideal_ndcg;
  return j;
}

ExperimentReport report_from_json(const nlohmann::json& j) {
  try {
    ExperimentReport r;
    r.provenance = j.value("provenance", nlohmann::json::object());
    r.config = j.value("config", nlohmann::json::object());
    r.train_queries = j.at("split").at("train").get<std::size_t>();
    r.validation_queries = j.at("split").at("validation").get<std::size_t>();
    r.test_queries = j.at("split").at("test").get<std::size_t>();
    r.random_ranker_ndcg = j.at("random_ranker_ndcg").get<double>();
    r.threshold = j.at("significance_threshold").get<double>();
    if (j.contains("ideal_ndcg")) r.ideal_ndcg = j.at("ideal_ndcg").get<double>();
    for (const auto& e : j.at("rows")) {
      ExperimentRow row;
      row.loss = parse_loss(e.at("loss").get<std::string>());
      row.mode = parse_mode(e.at("mode").get<std::string>());
      if (e.contains("error")) {
        row.error = e.at("error").get<std::string>();
      } else {
        for (std::size_t c = 0; c < kReportColumns; ++c) row.ndcg[c] = e.at(kColumnNames[c]).get<double>();
        row.invariance_gap = e.at("invariance_gap").get<double>();
        row.case4_ranking_change = e.at("case4_ranking_change").get<double>();
        const auto& h = e.at("history");
        row.history.train_loss = h.at("train_loss").get<std::vector<double>>();
        row.history.validation_ndcg = h.at("validation_ndcg").get<std::vector<double>>();
        row.history.best_epoch = h.at("best_epoch").get<std::size_t>();
        row.history.stop_reason =
            h.at("stop_reason").get<std::string>() == "early_stop" ? StopReason::early_stop : StopReason::max_epochs;
      }
      r.rows.push_back(std::move(row));
    }
    for (const auto& e : j.at("comparisons")) {
      Comparison c;
      c.loss = parse_loss(e.at("loss").get<std::string>());
      const auto col = e.at("column").get<std::string>();
      c.column = static_cast<std::size_t>(std::find(std::begin(kColumnNames), std::end(kColumnNames), col) -
                                          std::begin(kColumnNames));
      if (c.column >= kReportColumns) throw ParseError("unknown report column '" + col + "'");
      c.test.t = e.at("t").get<double>();
      c.test.df = e.at("df").get<double>();
      c.test.p_value = e.at("p_value").get<double>();
      c.test.degenerate = e.at("degenerate").get<bool>();
      c.significant = e.at("significant").get<bool>();
      r.comparisons.push_back(c);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed experiment report: ") + e.what());
  }
}

namespace {

bool is_significant(const ExperimentReport& report, LossKind loss, std::size_t column) {
  for (const auto& c : report.comparisons) {
    if (c.loss == loss && c.column == column) return c.significant;
  }
  return false;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string render_text(const ExperimentReport& report) {
  std::ostringstream out;
  out << "# sir-rank experiment report\n";
  if (report.provenance.is_object()) {
    for (const auto& [k, v] : report.provenance.items()) out << "# " << k << ": " << v.dump() << '\n';
  }
  out << "# split: train " << report.train_queries << ", validation " << report.validation_queries << ", test "
      << report.test_queries << '\n';
  out << "# random ranker NDCG: " << fmt(report.random_ranker_ndcg);
  if (report.ideal_ndcg) out << ", ideal (true utility) NDCG: " << fmt(*report.ideal_ndcg);
  out << '\n';
  out << "# *** : deep_only NDCG significantly below SIR, one-sided Welch p < " << report.threshold << '\n';

  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-11s %-11s %-11s %-11s %-11s %-11s %-9s %s\n", "Algorithm", "Validation",
                "Test", "Case 1", "Case 2", "Case 3", "Case 4", "Gap", "Moved@4");
  out << line << std::string(110, '-') << '\n';
  for (const auto& r : report.rows) {
    if (r.error) {
      out << r.label() << ": FAILED: " << *r.error << '\n';
      continue;
    }
    std::snprintf(line, sizeof line, "%-18s", r.label().c_str());
    out << line;
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      std::string cell = fmt(r.ndcg[c]);
      if (c >= 1 && r.mode == Mode::sir && is_significant(report, r.loss, c)) cell += "***";
      std::snprintf(line, sizeof line, " %-11s", cell.c_str());
      out << line;
    }
    std::snprintf(line, sizeof line, " %-9.1e %.1f%%\n", r.invariance_gap, 100.0 * r.case4_ranking_change);
    out << line;
  }
  return out.str();
}

std::string render_csv(const ExperimentReport& report) {
  std::ostringstream out;
  if (report.provenance.is_object()) {
    for (const auto& [k, v] : report.provenance.items()) out << "# " << k << ": " << v.dump() << '\n';
  }
  out << "algorithm,loss,mode,validation,test,case1,case2,case3,case4,best_epoch,epochs,stop_reason,"
         "invariance_gap,case4_ranking_change,p_test,p_case1,p_case2,p_case3,p_case4,error\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& r : report.rows) {
    out << r.label() << ',' << to_string(r.loss) << ',' << to_string(r.mode);
    if (r.error) {
      out << ",,,,,,,,,,,,,,,,," << '"' << *r.error << '"' << '\n';
      continue;
    }
    for (double v : r.ndcg) out << ',' << num(v);
    out << ',' << r.history.best_epoch + 1 << ',' << r.history.epochs() << ',' << to_string(r.history.stop_reason)
        << ',' << num(r.invariance_gap) << ',' << num(r.case4_ranking_change);
    for (std::size_t c = 1; c < kReportColumns; ++c) {
      out << ',';
      for (const auto& cmp : report.comparisons) {
        if (cmp.loss == r.loss && cmp.column == c) out << num(cmp.test.p_value);
      }
    }
    out << ",\n";
  }
  return out.str();
}

}  // namespace sir
