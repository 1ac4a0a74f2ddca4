// sir-rank: synthetic data generation, training, evaluation, perturbation
// and the full original-vs-SIR experiment matrix.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sir/dataset.hpp"
#include "sir/error.hpp"
#include "sir/experiment.hpp"
#include "sir/generator.hpp"
#include "sir/metrics.hpp"
#include "sir/model.hpp"
#include "sir/perturbation.hpp"
#include "sir/schema.hpp"
#include "sir/standardize.hpp"
#include "sir/trainer.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr std::uint64_t kDefaultSeed = 7;

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kValidation = 3, kTraining = 4 };

using nlohmann::json;

json provenance(std::uint64_t seed, json inputs = json::object()) {
  return {{"tool", "sir-rank"}, {"version", kToolVersion}, {"seed", seed}, {"inputs", std::move(inputs)}};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw sir::ParseError("cannot write '" + path + "'");
  out << text;
}

void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      widths.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw sir::ConfigError("--widths expects comma-separated positive integers, got '" + text + "'");
    }
  }
  if (widths.empty()) throw sir::ConfigError("--widths is empty");
  return widths;
}

std::vector<int> parse_cases(const std::string& text) {
  std::vector<int> cases;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok != "1" && tok != "2" && tok != "3" && tok != "4") {
      throw sir::ConfigError("--cases expects a comma-separated subset of 1,2,3,4, got '" + text + "'");
    }
    cases.push_back(std::stoi(tok));
  }
  return cases;
}

// Training flags shared by `train` and `experiment`.
struct TrainFlags {
  std::string loss = "ranknet";
  std::string mode = "sir";
  std::size_t epochs = 100;
  std::size_t patience = 20;
  double lr = 0.005;
  double sigma = sir::kDefaultSoftRankSigma;
  std::string widths = "64,32,16";
  std::size_t compressor_dim = 4;

  void attach(CLI::App* app, bool with_loss_and_mode) {
    if (with_loss_and_mode) {
      app->add_option("--loss", loss, "ranknet | lambdarank | listnet | listmle | softrank")->capture_default_str();
      app->add_option("--mode", mode, "sir | deep_only")->capture_default_str();
    }
    app->add_option("--epochs", epochs, "maximum training epochs")->capture_default_str();
    app->add_option("--patience", patience, "early-stopping patience in epochs")->capture_default_str();
    app->add_option("--lr", lr, "SGD learning rate")->capture_default_str();
    app->add_option("--sigma", sigma, "SoftRank score standard deviation")->capture_default_str();
    app->add_option("--widths", widths, "deep stack hidden widths, e.g. 512,256,128")->capture_default_str();
    app->add_option("--L", compressor_dim, "query compressor output width")->capture_default_str();
  }

  sir::TrainConfig config(std::uint64_t seed) const {
    sir::TrainConfig c;
    c.loss = sir::parse_loss(loss);
    c.mode = sir::parse_mode(mode);
    c.max_epochs = epochs;
    c.patience = patience;
    c.learning_rate = lr;
    c.sigma = sigma;
    c.seed = seed;
    c.widths = parse_widths(widths);
    c.compressor_dim = compressor_dim;
    c.validate();
    return c;
  }
};

int cmd_generate(const std::string& config_path, std::size_t queries, std::uint64_t seed, bool seed_set,
                 const std::string& schema_out, const std::string& data_out) {
  sir::GeneratorConfig gc;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw sir::ParseError("cannot open generator config '" + config_path + "'");
    gc = json::parse(in).get<sir::GeneratorConfig>();
  }
  if (queries) gc.num_queries = queries;
  if (seed_set || config_path.empty()) gc.seed = seed;
  const auto data = sir::generate(gc);
  sir::save_schema(data.schema, schema_out);
  sir::save_dataset(data.dataset, data.schema, data_out);
  write_json(data_out + ".meta.json",
             {{"provenance", provenance(gc.seed, {{"generator_config", gc}})},
              {"schema_fingerprint", data.schema.fingerprint()},
              {"dataset_fingerprint", sir::dataset_fingerprint(data.dataset, data.schema)},
              {"queries", data.dataset.size()}});
  std::cout << "wrote " << data.dataset.size() << " queries to " << data_out << " (schema " << schema_out << ")\n";
  return kOk;
}

int cmd_train(const std::string& schema_path, const std::string& data_path, const std::string& out,
              const TrainFlags& flags, std::uint64_t seed) {
  const auto schema = sir::load_schema(schema_path);
  const auto ds = sir::load_dataset(data_path, schema);
  const auto cfg = flags.config(seed);
  const auto split = sir::split_holdout(ds, seed);
  const auto stats = sir::fit_standardization(split.train, schema, cfg.mode);
  const auto trained = sir::train(schema, sir::apply_standardization(split.train, schema, stats),
                                  sir::apply_standardization(split.validation, schema, stats), cfg);
  const json prov = provenance(seed, {{"schema", schema.fingerprint()}, {"data", sir::dataset_fingerprint(ds, schema)}});
  sir::save_checkpoint(out, trained.model, stats, prov);
  write_json(out + ".history.json", {{"provenance", prov}, {"config", cfg}, {"history", trained.history}});
  std::printf("%s/%s: best validation NDCG %.4f at epoch %zu of %zu (%s)\n", sir::to_string(cfg.loss).c_str(),
              sir::to_string(cfg.mode).c_str(), trained.history.best_validation_ndcg(), trained.history.best_epoch + 1,
              trained.history.epochs(), sir::to_string(trained.history.stop_reason).c_str());
  return kOk;
}

int cmd_evaluate(const std::string& schema_path, const std::string& model_path, const std::string& data_path,
                 const std::string& cases_text, const std::string& out) {
  const auto schema = sir::load_schema(schema_path);
  const auto checkpoint = sir::load_checkpoint(model_path, schema);
  const auto ds = sir::load_dataset(data_path, schema);
  const auto clean = sir::mean_ndcg(checkpoint.model, sir::apply_standardization(ds, schema, checkpoint.stats));

  json result{{"provenance", provenance(0, {{"schema", schema.fingerprint()},
                                            {"data", sir::dataset_fingerprint(ds, schema)},
                                            {"model", sir::fnv1a_hex(sir::checkpoint_to_json(checkpoint.model,
                                                                                            checkpoint.stats)
                                                                         .dump())}})},
              {"mode", sir::to_string(checkpoint.model.mode())},
              {"clean", clean}};
  result["provenance"].erase("seed");
  std::printf("clean   mean NDCG %.6f over %zu queries\n", clean.mean, clean.count);
  if (!cases_text.empty()) {
    for (int c : parse_cases(cases_text)) {
      const auto perturbed = sir::apply_case(ds, schema, sir::PerturbationCase{c});
      const auto r = sir::mean_ndcg(checkpoint.model, sir::apply_standardization(perturbed, schema, checkpoint.stats));
      std::printf("case %d  mean NDCG %.6f (delta %+.6f)\n", c, r.mean, r.mean - clean.mean);
      result["case" + std::to_string(c)] = r;
    }
  }
  if (!out.empty()) write_json(out, result);
  return kOk;
}

int cmd_perturb(const std::string& schema_path, int case_id, double rate, const std::string& in,
                const std::string& out) {
  const auto schema = sir::load_schema(schema_path);
  const auto ds = sir::load_dataset(in, schema);
  sir::PerturbationCase pc{case_id};
  pc.rate = rate;
  const auto perturbed = sir::apply_case(ds, schema, pc);
  sir::save_dataset(perturbed, schema, out);
  write_json(out + ".meta.json", {{"provenance", provenance(0, {{"schema", schema.fingerprint()},
                                                                {"data", sir::dataset_fingerprint(ds, schema)}})},
                                  {"case", case_id},
                                  {"rate", rate},
                                  {"dataset_fingerprint", sir::dataset_fingerprint(perturbed, schema)}});
  std::cout << "wrote case " << case_id << " perturbation of " << perturbed.size() << " queries to " << out << "\n";
  return kOk;
}

int cmd_experiment(bool do_generate, std::size_t queries, const std::string& schema_path,
                   const std::string& data_path, const std::string& out_dir, const TrainFlags& flags,
                   const std::string& losses_text, std::uint64_t seed) {
  sir::FeatureSchema schema;
  sir::Dataset ds;
  std::optional<sir::HiddenUtility> utility;
  json inputs;
  if (do_generate) {
    sir::GeneratorConfig gc;
    gc.num_queries = queries ? queries : gc.num_queries;
    gc.seed = seed;
    auto data = sir::generate(gc);
    schema = std::move(data.schema);
    ds = std::move(data.dataset);
    utility = data.utility;
    inputs["generator_config"] = gc;
  } else {
    if (schema_path.empty() || data_path.empty()) {
      throw CLI::ValidationError("--schema/--data", "experiment needs --generate or both --schema and --data");
    }
    schema = sir::load_schema(schema_path);
    ds = sir::load_dataset(data_path, schema);
  }
  inputs["schema"] = schema.fingerprint();
  inputs["data"] = sir::dataset_fingerprint(ds, schema);

  sir::ExperimentConfig ec;
  ec.train = flags.config(seed);
  if (!losses_text.empty()) {
    ec.losses.clear();
    std::stringstream ss(losses_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) ec.losses.push_back(sir::parse_loss(tok));
  }
  auto report = sir::run_experiment(ds, schema, ec, utility ? &*utility : nullptr);
  report.provenance = provenance(seed, inputs);

  std::filesystem::create_directories(out_dir);
  const auto base = std::filesystem::path(out_dir);
  write_json((base / "report.json").string(), sir::report_to_json(report));
  write_file((base / "report.csv").string(), sir::render_csv(report));
  const auto text = sir::render_text(report);
  write_file((base / "report.txt").string(), text);
  std::cout << text;
  if (!report.all_cells_ok()) {
    std::cerr << "error: one or more experiment cells failed; see the report\n";
    return kTraining;
  }
  return kOk;
}

int cmd_report(const std::string& in, bool csv) {
  std::ifstream f(in);
  if (!f) throw sir::ParseError("cannot open report '" + in + "'");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw sir::ParseError("report '" + in + "': " + e.what());
  }
  const auto report = sir::report_from_json(j);
  std::cout << (csv ? sir::render_csv(report) : sir::render_text(report));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-invariant learning-to-rank: training, evaluation and perturbation experiments"};
  app.require_subcommand(1);
  std::uint64_t seed = kDefaultSeed;
  auto* seed_opt = app.add_option("--seed", seed, "global seed")->capture_default_str();
  (void)seed_opt;

  std::string schema_path, data_path, out, model_path, cases, config_path, in_path, losses;
  std::size_t queries = 0;
  int case_id = 0;
  double rate = sir::kHighExchangeRate;
  bool do_generate = false, csv = false;
  TrainFlags train_flags, exp_flags;

  auto* gen = app.add_subcommand("generate", "write a synthetic schema and JSON-Lines dataset");
  gen->add_option("--config", config_path, "generator config JSON");
  gen->add_option("--queries", queries, "number of queries (overrides the config)");
  auto* gen_seed = gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--schema", schema_path, "schema output path")->required();
  gen->add_option("--out", out, "dataset output path")->required();

  auto* tr = app.add_subcommand("train", "train one model on a 63/7/30 hold-out split");
  tr->add_option("--schema", schema_path, "schema JSON")->required()->check(CLI::ExistingFile);
  tr->add_option("--data", data_path, "JSON-Lines dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", out, "checkpoint output path")->required();
  tr->add_option("--seed", seed, "split, initialization and shuffle seed");
  train_flags.attach(tr, true);

  auto* ev = app.add_subcommand("evaluate", "mean NDCG of a checkpoint, optionally under Cases 1-4");
  ev->add_option("--schema", schema_path, "schema JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--model", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", data_path, "JSON-Lines dataset")->required()->check(CLI::ExistingFile);
  ev->add_option("--cases", cases, "comma-separated perturbation cases, e.g. 1,2,3,4");
  ev->add_option("--out", out, "result JSON path");

  auto* pe = app.add_subcommand("perturb", "rescale price/discount per Case 1-4");
  pe->add_option("--schema", schema_path, "schema JSON")->required()->check(CLI::ExistingFile);
  pe->add_option("--case", case_id, "1: nights, 2: exchange rate, 3: both, 4: fixed rate")
      ->required()
      ->check(CLI::Range(1, 4));
  pe->add_option("--rate", rate, "Case 4 multiplier")->capture_default_str();
  pe->add_option("--in", in_path, "input dataset")->required()->check(CLI::ExistingFile);
  pe->add_option("--out", out, "output dataset")->required();

  auto* ex = app.add_subcommand("experiment", "train every loss x {deep_only, sir} and report Cases 1-4");
  ex->add_flag("--generate", do_generate, "use a freshly generated synthetic dataset");
  ex->add_option("--queries", queries, "queries to generate (default 2000)");
  ex->add_option("--schema", schema_path, "schema JSON (without --generate)");
  ex->add_option("--data", data_path, "JSON-Lines dataset (without --generate)");
  ex->add_option("--out", out, "output directory for report.json/.csv/.txt")->required();
  ex->add_option("--losses", losses, "comma-separated subset of losses (default: all five)");
  ex->add_option("--seed", seed, "global seed");
  exp_flags.attach(ex, false);

  auto* rp = app.add_subcommand("report", "render a saved experiment report");
  rp->add_option("--in", in_path, "report.json")->required()->check(CLI::ExistingFile);
  rp->add_flag("--csv", csv, "emit CSV instead of the aligned table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_generate(config_path, queries, seed, gen_seed->count() > 0, schema_path, out);
    if (*tr) return cmd_train(schema_path, data_path, out, train_flags, seed);
    if (*ev) return cmd_evaluate(schema_path, model_path, data_path, cases, out);
    if (*pe) return cmd_perturb(schema_path, case_id, rate, in_path, out);
    if (*ex) return cmd_experiment(do_generate, queries, schema_path, data_path, out, exp_flags, losses, seed);
    if (*rp) return cmd_report(in_path, csv);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const sir::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const sir::TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kTraining;
  } catch (const sir::Error& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
