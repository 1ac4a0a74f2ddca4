#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "sir/dataset.hpp"
#include "sir/perturbation.hpp"
#include "sir/schema.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / "sir_cli_test";
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ASSERT_EQ(run("generate --queries 120 --seed 5 --schema " + p("schema.json") + " --out " + p("data.jsonl")), 0);
    ASSERT_EQ(run("train --schema " + p("schema.json") + " --data " + p("data.jsonl") + " --out " + p("model.json") +
                  " --epochs 3 --patience 1 --widths 8 --L 2"),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string p(const std::string& name) { return (dir_ / name).string(); }

  static int run(const std::string& args) {
    std::string cmd = std::string(SIR_RANK_EXE) + " " + args + " > " + p("stdout.txt") + " 2> " + p("stderr.txt");
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, GenerateIsDeterministic) {
  ASSERT_EQ(run("generate --queries 120 --seed 5 --schema " + p("s2.json") + " --out " + p("d2.jsonl")), 0);
  EXPECT_EQ(slurp(p("d2.jsonl")), slurp(p("data.jsonl")));
  EXPECT_EQ(slurp(p("d2.jsonl.meta.json")), slurp(p("data.jsonl.meta.json")));
  auto meta = json::parse(slurp(p("data.jsonl.meta.json")));
  EXPECT_EQ(meta["provenance"]["tool"], "sir-rank");
  EXPECT_EQ(meta["provenance"]["seed"], 5);
  ASSERT_EQ(run("generate --queries 120 --seed 6 --schema " + p("s3.json") + " --out " + p("d3.jsonl")), 0);
  EXPECT_NE(slurp(p("d3.jsonl")), slurp(p("data.jsonl")));
}

TEST_F(Cli, TrainWritesHistoryWithProvenance) {
  auto hist = json::parse(slurp(p("model.json.history.json")));
  EXPECT_TRUE(hist["provenance"].contains("inputs"));
  EXPECT_LE(hist["history"]["validation_ndcg"].size(), 3u);
  auto ck = json::parse(slurp(p("model.json")));
  EXPECT_TRUE(ck.contains("provenance"));
  EXPECT_EQ(ck["schema_fingerprint"], sir::load_schema(p("schema.json")).fingerprint());
}

TEST_F(Cli, EvaluateTwiceIsIdenticalAndCasesAgree) {
  const std::string base = "evaluate --schema " + p("schema.json") + " --model " + p("model.json") + " --data " +
                           p("data.jsonl") + " --cases 1,2,3,4 --out ";
  ASSERT_EQ(run(base + p("eval1.json")), 0);
  ASSERT_EQ(run(base + p("eval2.json")), 0);
  EXPECT_EQ(slurp(p("eval1.json")), slurp(p("eval2.json")));
  auto r = json::parse(slurp(p("eval1.json")));
  double clean = r["clean"]["mean_ndcg"];
  for (int c = 1; c <= 4; ++c) EXPECT_NEAR(r["case" + std::to_string(c)]["mean_ndcg"].get<double>(), clean, 1e-9);
}

TEST_F(Cli, PerturbMatchesLibrary) {
  ASSERT_EQ(run("perturb --schema " + p("schema.json") + " --case 3 --in " + p("data.jsonl") + " --out " +
                p("case3.jsonl")),
            0);
  auto schema = sir::load_schema(p("schema.json"));
  auto ds = sir::load_dataset(p("data.jsonl"), schema);
  sir::PerturbationCase pc;
  pc.id = 3;
  EXPECT_EQ(sir::load_dataset(p("case3.jsonl"), schema), sir::apply_case(ds, schema, pc));
  EXPECT_TRUE(fs::exists(p("case3.jsonl.meta.json")));
}

TEST_F(Cli, SchemaMismatchRefused) {
  std::ofstream(p("gen.json")) << R"({"fixed": 5})";
  ASSERT_EQ(run("generate --config " + p("gen.json") + " --queries 20 --schema " + p("other.json") + " --out " +
                p("other.jsonl")),
            0);
  EXPECT_EQ(run("evaluate --schema " + p("other.json") + " --model " + p("model.json") + " --data " +
                p("other.jsonl")),
            3);
  std::string err = slurp(p("stderr.txt"));
  EXPECT_NE(err.find(sir::load_schema(p("other.json")).fingerprint()), std::string::npos) << err;
  EXPECT_NE(err.find(sir::load_schema(p("schema.json")).fingerprint()), std::string::npos) << err;
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("generate --queries 10"), 2);
  EXPECT_EQ(run("perturb --schema " + p("schema.json") + " --case 5 --in " + p("data.jsonl") + " --out " + p("x")), 2);
  EXPECT_EQ(run("train --schema " + p("schema.json") + " --data " + p("data.jsonl") + " --out " + p("m2.json") +
                " --loss adarank"),
            2);
  EXPECT_EQ(run("experiment --out " + p("exp_none")), 2);
  std::ofstream(p("bad.jsonl")) << "{\"query_id\": \"q\"\n";
  EXPECT_EQ(run("evaluate --schema " + p("schema.json") + " --model " + p("model.json") + " --data " + p("bad.jsonl")),
            3);
  EXPECT_NE(slurp(p("stderr.txt")).find("line 1"), std::string::npos);
  EXPECT_EQ(run("train --schema " + p("schema.json") + " --data " + p("data.jsonl") + " --out " + p("m3.json") +
                " --epochs 2 --patience 1 --widths 8 --L 2 --lr 1e12"),
            4);
}

TEST_F(Cli, ExperimentIsReproducible) {
  const std::string args = "experiment --generate --queries 80 --losses ranknet,listmle --epochs 3 --patience 1 "
                           "--widths 8 --L 2 --seed 3 --out ";
  ASSERT_EQ(run(args + p("exp_a")), 0);
  ASSERT_EQ(run(args + p("exp_b")), 0);
  for (const char* f : {"report.json", "report.csv", "report.txt"})
    EXPECT_EQ(slurp(p(std::string("exp_a/") + f)), slurp(p(std::string("exp_b/") + f))) << f;
  auto report = json::parse(slurp(p("exp_a/report.json")));
  EXPECT_EQ(report["rows"].size(), 4u);
  ASSERT_EQ(run("report --in " + p("exp_a/report.json")), 0);
  EXPECT_EQ(slurp(p("stdout.txt")), slurp(p("exp_a/report.txt")));
  ASSERT_EQ(run("report --csv --in " + p("exp_a/report.json")), 0);
  EXPECT_EQ(slurp(p("stdout.txt")), slurp(p("exp_a/report.csv")));
}
