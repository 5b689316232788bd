#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "ggsa/ggsa.hpp"

using namespace ggsa;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ggsa");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ggsa_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Config, TextRoundTripsAndKeepsKeyOrder) {
  ModelConfig cfg;
  cfg.embed_dim = 12;
  cfg.heads = 3;
  cfg.offsets = {0, 1, 2};
  cfg.scale = 2.5;
  cfg.keep_prob = 0.123456789012345;
  cfg.variant = Variant::kIggsa;
  cfg.composition = Composition::kAttention;
  cfg.precision = Precision::kDouble;
  EXPECT_EQ(parse_config(to_text(cfg)), cfg);
  EXPECT_EQ(to_text(parse_config(to_text(cfg))), to_text(cfg));
  EXPECT_EQ(to_text(cfg).rfind("embed_dim=12\n", 0), 0u);
}

TEST(Config, ParsingSkipsCommentsAndRejectsUnknownKeys) {
  const ModelConfig cfg = parse_config("# comment\n\nheads=2\nvariant=global\n");
  EXPECT_EQ(cfg.heads, 2u);
  EXPECT_EQ(cfg.variant, Variant::kGlobal);
  EXPECT_THROW(parse_config("colour=blue\n"), ConfigError);
  EXPECT_THROW(parse_config("heads=two\n"), ConfigError);
  EXPECT_THROW(parse_config("heads\n"), ConfigError);
  EXPECT_THROW(parse_variant("bert"), ConfigError);
}

TEST(Config, ValidationInvariants) {
  ModelConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  auto bad = cfg;
  bad.heads = 5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.keep_prob = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.keep_prob = 1.5;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.blocks = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = cfg;
  bad.offsets = {0, 1, 2, 4};
  EXPECT_THROW(bad.validate(), ConfigError);
  bad.offsets = {0, 1};
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Config, DefaultOffsetsSplitHeads) {
  ModelConfig cfg;
  cfg.heads = 6;
  cfg.embed_dim = 60;
  cfg.group_size = 10;
  EXPECT_EQ(cfg.resolved_offsets(), (std::vector<std::size_t>{0, 0, 0, 5, 5, 5}));
  EXPECT_EQ(cfg.resolved_ffn_width(), 240u);
}

TEST(Cli, HelpExitsZero) {
  for (const char* sub : {"bench", "train", "gen-data", "eval", "gradcheck"}) {
    const auto r = run_cli({sub, "--help"});
    EXPECT_EQ(r.code, cli::kExitOk) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run_cli({"transmogrify"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"bench", "--frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"train"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"train", "--data", "x", "--variant", "lstm"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
}

TEST(Cli, RuntimeFailuresExitOneWithCategory) {
  const auto r = run_cli({"eval", "--checkpoint", "/nonexistent/model.ckpt", "--data", "/nonexistent"});
  EXPECT_EQ(r.code, cli::kExitRuntime);
  EXPECT_NE(r.err.find("error["), std::string::npos);
}

TEST(Cli, GradcheckExitCodeFollowsTolerance) {
  const auto ok = run_cli({"gradcheck"});
  EXPECT_EQ(ok.code, cli::kExitOk) << ok.out << ok.err;
  EXPECT_NE(ok.out.find("passed=1"), std::string::npos);
  const auto strict = run_cli({"gradcheck", "--tolerance", "1e-30"});
  EXPECT_EQ(strict.code, cli::kExitGradcheckFailed);
  EXPECT_NE(strict.out.find("passed=0"), std::string::npos);
}

TEST(Cli, GenerateTrainEvaluateRoundTrip) {
  const fs::path dir = scratch("pipeline");
  const fs::path data = dir / "data", model = dir / "model";
  auto gen = run_cli({"gen-data", "--out", data.string(), "--train", "40", "--dev", "20", "--test", "20", "--vocab",
                      "60", "--spec", "topics=4", "--spec", "topic_block=3"});
  ASSERT_EQ(gen.code, 0) << gen.err;
  EXPECT_TRUE(fs::exists(data / "train.tsv"));
  {
    std::ofstream cfg(dir / "model.cfg");
    cfg << "embed_dim=8\nheads=2\ngroup_size=2\nvocab_size=60\n";
  }
  auto tr = run_cli({"train", "--data", data.string(), "--out", model.string(), "--config",
                     (dir / "model.cfg").string(), "--epochs", "2", "--batch-size", "8", "--lr", "1e-3"});
  ASSERT_EQ(tr.code, 0) << tr.err;
  EXPECT_NE(tr.out.find("epoch=2 "), std::string::npos);
  EXPECT_TRUE(fs::exists(model / "model.ckpt"));
  EXPECT_TRUE(fs::exists(model / "train_log.txt"));
  auto ev = run_cli({"eval", "--checkpoint", (model / "model.ckpt").string(), "--data", data.string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_NE(ev.out.find("p_at_1="), std::string::npos);
  EXPECT_NE(ev.out.find("mrr="), std::string::npos);
}

TEST(Cli, BenchWritesCsvAndRecords) {
  const fs::path dir = scratch("bench");
  auto r = run_cli({"bench", "--lengths", "20,40", "--dim", "8", "--heads", "2", "--group-size", "4", "--reps", "5",
                    "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream csv(dir / "bench.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, kBenchCsvHeader);
  std::ifstream records(dir / "bench_records.txt");
  std::string line;
  std::size_t n = 0;
  while (std::getline(records, line)) {
    EXPECT_NO_THROW(parse_record(line));
    ++n;
  }
  EXPECT_EQ(n, 6u);
}
