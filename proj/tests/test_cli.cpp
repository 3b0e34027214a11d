#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "support.hpp"

#ifndef MZSEL_CLI_PATH
#define MZSEL_CLI_PATH ""
#endif

using namespace mzsel;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    if (std::string(MZSEL_CLI_PATH).empty()) GTEST_SKIP() << "CLI not built";
  }

  CliRun run(const std::string& args) {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = std::string("'") + MZSEL_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string path(const std::string& name) { return (dir / name).string(); }

  test::TempDir dir{"cli"};
};

EmbeddingSet features(std::uint64_t seed) {
  return test::random_set(EmbeddingKind::Features, 30, 6, 3, seed);
}

}  // namespace

TEST_F(Cli, ScoreLfcMatchesLibrary) {
  const auto set = features(1);
  save_embeddings(set, path("x.mze"));
  const auto r = run("score --method lfc --embeddings " + path("x.mze") + " --task t");
  ASSERT_EQ(r.code, 0) << r.err;

  const BenchmarkConfig config;
  nlohmann::json want = nlohmann::json::array();
  want.push_back(score_entry_json("t", {"x", Method::LFC, lfc_score(set)}, score_params_json(config, 0)));
  EXPECT_EQ(r.out, json_text(want));
  EXPECT_EQ(nlohmann::json::parse(r.out).size(), 1u);
}

TEST_F(Cli, ScoreWritesOutFileAndCsv) {
  const auto set = features(2);
  save_embeddings(set, path("x.mze"));
  const auto r = run("score --method featmet --embeddings " + path("x.mze") + " --model m --format csv --out " +
                     path("s.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::vector<ScoreEntry> e{{"m", Method::FeatMet, feature_metrics_score(set)}};
  EXPECT_EQ(slurp(path("s.csv")), scores_csv("cli", e));
  EXPECT_NE(r.out.find("featmet m"), std::string::npos);
}

TEST_F(Cli, ScoreLgcAndLeepMatchLibrary) {
  auto g = features(3);
  g.kind = EmbeddingKind::Gradients;
  save_embeddings(g, path("g.mze"));
  auto r = run("score --method lgc --gradients " + path("g.mze") + " --k 4 --seed 9");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)[0]["score"].get<double>(), lgc_score(g, 4, 9));

  const auto p = test::random_probs(30, 4, 3, 4);
  save_embeddings(p, path("p.mze"));
  r = run("score --method leep --probs " + path("p.mze"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)[0]["score"].get<double>(), leep_score(p));
}

TEST_F(Cli, UnknownMethodIsUsageError) {
  const auto r = run("score --method foo --embeddings x.mze");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--method"), std::string::npos);
}

TEST_F(Cli, MissingRequiredInputIsUsageError) {
  const auto r = run("score --method rsa --embeddings " + path("x.mze"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--probe"), std::string::npos);
}

TEST_F(Cli, InvalidNumericsDoNotTouchOutputs) {
  save_embeddings(features(5), path("x.mze"));
  for (const std::string& args : {"project --in " + path("x.mze") + " --out " + path("o.mze") + " --k 0",
                                 "subsample --in " + path("x.mze") + " --out " + path("o.mze") + " --per-class-cap -3",
                                 "subsample --in " + path("x.mze") + " --out " + path("o.mze") + " --per-class-cap 2x",
                                 "simulate --gradients " + path("x.mze") + " --out " + path("o.mze") + " --eta -1",
                                 "score --method lgc --gradients " + path("x.mze") + " --out " + path("o.mze") + " --k abc"}) {
    fs::remove(path("o.mze"));
    const auto r = run(args);
    EXPECT_EQ(r.code, 1) << args;
    EXPECT_FALSE(fs::exists(path("o.mze"))) << args;
  }
}

TEST_F(Cli, LibraryErrorsExitOne) {
  std::ofstream(path("bad.mze")) << "garbage!";
  const auto r = run("score --method lfc --embeddings " + path("bad.mze"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BadMagic"), std::string::npos);
}

TEST_F(Cli, RankMatchesLibrary) {
  nlohmann::json scores = nlohmann::json::array();
  const std::vector<ScoreEntry> e{{"a", Method::LFC, 0.2}, {"b", Method::LFC, 0.9}, {"c", Method::LFC, 0.5}};
  for (const auto& s : e) scores.push_back(score_entry_json("t", s, {}));
  std::ofstream(path("s.json")) << scores.dump();
  std::ofstream(path("acc.json")) << R"({"a": 0.7, "b": 0.8, "c": 0.75})";
  const auto r = run("rank --scores " + path("s.json") + " --accuracies " + path("acc.json") +
                     " --baseline a --topk 1,2 --out " + path("r.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const std::vector<std::size_t> topk{1, 2};
  const AccuracyMap acc{{"a", 0.7}, {"b", 0.8}, {"c", 0.75}};
  EXPECT_EQ(slurp(path("r.json")), json_text(ranking_json(e, acc, topk, std::string("a"))));
  EXPECT_EQ(r.out, "1. b\n2. c\n3. a\n");
}

TEST_F(Cli, EvalMatchesLibrary) {
  SynthConfig cfg;
  cfg.alignment_spectrum = {0.2, 0.5, 0.9};
  cfg.per_class = 12;
  cfg.dim = 12;
  cfg.grad_dim = 16;
  cfg.probe_dim = 8;
  cfg.seed = 5;
  const auto manifest = gen_synthetic_zoo(cfg, dir / "zoo");
  const auto r = run("eval --manifest " + path("zoo/manifest.json") + " --k 32 --jobs 2 --out " + path("rep.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  BenchmarkConfig config;
  config.projection_dim = 32;
  config.jobs = 1;
  const std::vector<BenchmarkResult> results{run_benchmark(load_manifest(dir / "zoo/manifest.json"), config)};
  EXPECT_EQ(slurp(path("rep.json")), json_text(benchmark_report_json(results, config)));
  EXPECT_NE(r.out.find("lfc: spearman="), std::string::npos);
}

TEST_F(Cli, EvalMissingProbeFilesIsPartial) {
  SynthConfig cfg;
  cfg.alignment_spectrum = {0.2, 0.5, 0.9};
  cfg.per_class = 12;
  cfg.dim = 12;
  cfg.seed = 6;
  gen_synthetic_zoo(cfg, dir / "zoo");
  fs::remove(dir / "zoo" / "probe.mze");
  for (const char* m : {"model_00", "model_01", "model_02"}) fs::remove(dir / "zoo" / (std::string(m) + ".probs.mze"));
  const auto r = run("eval --manifest " + path("zoo/manifest.json") + " --k 32 --out " + path("rep.json"));
  EXPECT_EQ(r.code, 2) << r.err;
  const auto j = nlohmann::json::parse(slurp(path("rep.json")));
  const auto& warnings = j["tasks"][0]["warnings"];
  ASSERT_EQ(warnings.size(), 2u);
  EXPECT_NE(warnings.dump().find("leep"), std::string::npos);
  EXPECT_NE(warnings.dump().find("rsa"), std::string::npos);
  EXPECT_EQ(j["tasks"][0]["reports"].size(), 5u);
}

TEST_F(Cli, SimulateMatchesLibrary) {
  const auto jac = test::random_set(EmbeddingKind::Gradients, 6, 10, 2, 7);
  save_embeddings(jac, path("j.mze"));
  const auto r = run("simulate --gradients " + path("j.mze") + " --t-max 2 --points 5 --oracle-step 0.01 --out " +
                     path("traj.csv") + " --summary " + path("sum.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  SimulateOptions opts;
  opts.t_max = 2;
  opts.points = 5;
  opts.oracle_step = 0.01;
  const auto want = simulate(jac, nullptr, opts);
  EXPECT_EQ(slurp(path("traj.csv")), want.csv);
  EXPECT_EQ(slurp(path("sum.json")), json_text(want.summary_json));
}

TEST_F(Cli, ProjectAndSubsampleMatchLibrary) {
  const auto set = features(8);
  save_embeddings(set, path("x.mze"));
  ASSERT_EQ(run("project --in " + path("x.mze") + " --out " + path("p.mze") + " --k 4 --seed 3").code, 0);
  EXPECT_EQ(load_embeddings(path("p.mze")), random_projection(set, 4, 3));
  ASSERT_EQ(run("subsample --in " + path("x.mze") + " --out " + path("s.mze") + " --per-class-cap 4 --seed 2").code, 0);
  EXPECT_EQ(slurp(path("s.mze")), [&] {
    const auto b = serialize_embeddings(stratified_subsample(set, 4, 2));
    return std::string(b.begin(), b.end());
  }());
  ASSERT_EQ(run("subsample --in " + path("x.mze") + " --out " + path("u.mze") + " --per-class-cap inf").code, 0);
  EXPECT_EQ(load_embeddings(path("u.mze")), set);
}

TEST_F(Cli, SynthMatchesLibrary) {
  const auto r = run("synth --out-dir " + path("cli_zoo") + " --models 3 --per-class 6 --dim 12 --seed 4");
  ASSERT_EQ(r.code, 0) << r.err;
  SynthConfig cfg;
  cfg.alignment_spectrum = default_alignment_spectrum(3);
  cfg.per_class = 6;
  cfg.dim = 12;
  cfg.seed = 4;
  gen_synthetic_zoo(cfg, dir / "lib_zoo");
  for (const auto& entry : fs::directory_iterator(dir / "lib_zoo")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(slurp(dir / "cli_zoo" / name), slurp(entry.path())) << name;
  }
}

TEST_F(Cli, InspectReportsSummaryAndTruncation) {
  const auto p = test::random_probs(9, 4, 3, 1);
  save_embeddings(p, path("p.mze"));
  auto r = run("inspect " + path("p.mze") + " --out " + path("i.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("i.json")), json_text(inspect_file(path("p.mze"))));
  EXPECT_NE(r.out.find("row_sum_deviation"), std::string::npos);
  EXPECT_NE(r.out.find("n: 9"), std::string::npos);

  auto bytes = serialize_embeddings(p);
  bytes.resize(bytes.size() - 3);
  detail::write_file(path("t.mze"), bytes);
  r = run("inspect " + path("t.mze"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("TruncatedFile"), std::string::npos);
  EXPECT_NE(r.err.find(std::to_string(bytes.size())), std::string::npos);
}
