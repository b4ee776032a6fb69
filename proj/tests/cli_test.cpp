#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>

#include "oracles.hpp"
#include "support.hpp"
#include "treepref/io.hpp"
#include "treepref/orchestrator.hpp"

using namespace treepref;
using namespace treepref::testing;
namespace fs = std::filesystem;

namespace {

struct Proc {
  int status = 0;
  std::string out;
};

Proc run(const std::string& args) {
  const std::string cmd = std::string(TREEPREF_CLI) + " " + args + " 2>&1";
  Proc p;
  FILE* pipe = popen(cmd.c_str(), "r");
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) p.out += buf.data();
  p.status = pclose(pipe);
  return p;
}

const char* kSmall = R"([run]
num_train_prompts = 20
num_eval_prompts = 20

[mcts]
num_simulations = 24

[train]
sft_epochs = 3
batch_size_dpo = 16
checkpoint_every = 2
)";

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "treepref_cli_test" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string small_config_file() {
  const fs::path p = fs::temp_directory_path() / "treepref_cli_test" / "small.toml";
  fs::create_directories(p.parent_path());
  write_file(p.string(), kSmall);
  return p.string();
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST(Cli, RunIsDeterministic) {
  const std::string cfg = small_config_file();
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  ASSERT_EQ(run("run --config " + cfg + " --out " + a.string()).status, 0);
  ASSERT_EQ(run("run --config " + cfg + " --out " + b.string()).status, 0);
  for (const char* f : {"result.json", "buffer.jsonl", "trees.jsonl", "policy.json",
                        "schedule_epoch_1.csv", "schedule_epoch_2.csv", "train_report.csv",
                        "config.toml"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
}

TEST(Cli, StagedPipelineMatchesRun) {
  const std::string cfg = small_config_file();
  const fs::path whole = fresh_dir("whole"), staged = fresh_dir("staged");
  ASSERT_EQ(run("run --config " + cfg + " --out " + whole.string()).status, 0);
  for (const char* stage : {"synth", "search", "extract", "schedule", "train"}) {
    const std::string args = std::string(stage) + " --out " + staged.string() +
                             (std::string(stage) == "synth" ? " --config " + cfg : "");
    const Proc p = run(args);
    ASSERT_EQ(p.status, 0) << stage << ": " << p.out;
  }
  for (const char* f : {"prompts.jsonl", "eval_prompts.jsonl", "trees.jsonl", "buffer.jsonl",
                        "sft_policy.json", "policy.json", "schedule_epoch_1.csv",
                        "train_report.csv", "result.json"}) {
    EXPECT_EQ(slurp(whole / f), slurp(staged / f)) << f;
  }
  const Proc e = run("eval --out " + staged.string());
  ASSERT_EQ(e.status, 0);
  const RunResult r = result_from_json(slurp(staged / "result.json"));
  EXPECT_EQ(e.out, "accuracy " + format_double(r.epoch_accuracy.back()) + "\n");
}

TEST(Cli, ExtractMatchesBruteForce) {
  const std::string cfg = small_config_file();
  const fs::path d = fresh_dir("extract");
  ASSERT_EQ(run("synth --config " + cfg + " --out " + d.string()).status, 0);
  ASSERT_EQ(run("search --out " + d.string()).status, 0);
  ASSERT_EQ(run("extract --variant complete_only --tau 0.2 --out " + d.string()).status, 0);
  const auto trees = trees_from_jsonl(slurp(d / "trees.jsonl"));
  EXPECT_EQ(buffer_keys(buffer_from_jsonl(slurp(d / "buffer.jsonl"))),
            brute_force_pairs(trees, 0.2, BufferMode::complete_only));
  const RunConfig echoed = load_config((d / "config.toml").string());
  EXPECT_EQ(echoed.variant, Variant::complete_only);
  EXPECT_EQ(echoed.pairs.tau, 0.2);
  ASSERT_EQ(run("extract --variant cpl --tau 0.2 --out " + d.string()).status, 0);
  EXPECT_EQ(buffer_keys(buffer_from_jsonl(slurp(d / "buffer.jsonl"))),
            brute_force_pairs(trees, 0.2, BufferMode::both));
}

TEST(Cli, CompareRanksResults) {
  const std::string cfg = small_config_file();
  const fs::path cpl = fresh_dir("cmp_cpl"), sft = fresh_dir("cmp_sft"), out = fresh_dir("cmp_out");
  ASSERT_EQ(run("run --config " + cfg + " --out " + cpl.string()).status, 0);
  ASSERT_EQ(run("run --variant sft_only --config " + cfg + " --out " + sft.string()).status, 0);
  const Proc p = run("compare " + (cpl / "result.json").string() + " " +
                     (sft / "result.json").string() + " --out " + out.string());
  ASSERT_EQ(p.status, 0) << p.out;
  EXPECT_NE(p.out.find("cmp_cpl"), std::string::npos);
  EXPECT_NE(p.out.find("cmp_sft"), std::string::npos);
  const std::string table = slurp(out / "comparison.csv");
  EXPECT_EQ(table.rfind("rank,label", 0), 0u);
  EXPECT_TRUE(fs::exists(out / "series.csv"));
}

TEST(Cli, ErrorsExitNonzero) {
  const fs::path d = fresh_dir("errors");
  Proc p = run("search --out " + d.string());
  EXPECT_NE(p.status, 0);
  EXPECT_NE(p.out.find("prompts.jsonl"), std::string::npos);

  const fs::path bad = d / "bad.toml";
  write_file(bad.string(), "[train]\nlearning_rate = 1\n");
  p = run("synth --config " + bad.string() + " --out " + (d / "x").string());
  EXPECT_NE(p.status, 0);
  EXPECT_NE(p.out.find("train.learning_rate"), std::string::npos);

  const std::string cfg = small_config_file();
  const fs::path s = fresh_dir("seed_conflict");
  ASSERT_EQ(run("synth --config " + cfg + " --out " + s.string()).status, 0);
  p = run("search --seed 9 --out " + s.string());
  EXPECT_NE(p.status, 0);
  EXPECT_NE(p.out.find("seed conflict"), std::string::npos);

  EXPECT_NE(run("frobnicate").status, 0);
  EXPECT_NE(run("compare " + (d / "nope.json").string()).status, 0);
}
