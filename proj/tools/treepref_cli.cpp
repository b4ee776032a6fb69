// treepref: stage-by-stage driver for the search/preference-learning loop.
//
//   treepref synth    --out DIR     prompts.jsonl, eval_prompts.jsonl
//   treepref search   --out DIR     trees.jsonl
//   treepref extract  --out DIR     buffer.jsonl
//   treepref schedule --out DIR     sft_policy.json, schedule_epoch_1.csv
//   treepref train    --out DIR     policies, schedules, train_report.csv, result.json
//   treepref eval     --out DIR     prints greedy accuracy of a policy
//   treepref run      --out DIR     all of the above
//   treepref compare  A.json B.json ... [--out DIR]
//
// Every stage echoes the resolved config into DIR/config.toml; later stages
// read it back unless --config is given.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treepref/config.hpp"
#include "treepref/io.hpp"
#include "treepref/orchestrator.hpp"

namespace fs = std::filesystem;
using namespace treepref;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<int> epochs;
  std::optional<double> tau;
  std::optional<double> alpha;
  std::string policy;
  std::vector<std::string> inputs;
};

std::string path_in(const Options& o, const std::string& name) {
  return (fs::path(o.out) / name).string();
}

std::string read_input(const Options& o, const std::string& name) {
  const std::string p = path_in(o, name);
  if (!fs::exists(p)) throw Error("missing input " + p);
  return read_file(p);
}

RunConfig resolve_config(const Options& o) {
  const std::string echoed = path_in(o, "config.toml");
  RunConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else if (fs::exists(echoed)) {
    c = load_config(echoed);
  }
  if (o.seed) c.seed = *o.seed;
  if (o.variant) c.variant = parse_variant(*o.variant);
  if (o.epochs) c.epochs = *o.epochs;
  if (o.tau) c.pairs.tau = *o.tau;
  if (o.alpha) c.cpl.alpha = *o.alpha;
  validate(c);

  if (fs::exists(echoed)) {
    const RunConfig previous = load_config(echoed);
    if (previous.seed != c.seed) {
      throw ConfigError("seed conflict: " + echoed + " has run.seed = " +
                        std::to_string(previous.seed) + " but this invocation uses " +
                        std::to_string(c.seed));
    }
  }
  fs::create_directories(o.out);
  write_file(echoed, to_toml(c));
  return c;
}

RunPrompts load_prompts(const Options& o) {
  return RunPrompts{prompts_from_jsonl(read_input(o, "prompts.jsonl")),
                    prompts_from_jsonl(read_input(o, "eval_prompts.jsonl"))};
}

void write_prompts(const Options& o, const RunPrompts& p) {
  write_file(path_in(o, "prompts.jsonl"), prompts_to_jsonl(p.train));
  write_file(path_in(o, "eval_prompts.jsonl"), prompts_to_jsonl(p.eval));
}

void require_pairs(Variant v) {
  if (v == Variant::sft_only) throw Error("variant sft_only trains on no pairs");
}

void write_training(const Options& o, const SharedStage& shared, const VariantRun& run) {
  write_file(path_in(o, "sft_policy.json"), policy_to_json(shared.sft_policy));
  write_file(path_in(o, "policy.json"), policy_to_json(run.final_policy));
  for (std::size_t k = 0; k < run.schedules.size(); ++k) {
    write_file(path_in(o, "schedule_epoch_" + std::to_string(k + 1) + ".csv"),
               schedule_csv(run.buffer, run.schedules[k], run.weights[k]));
  }
  write_file(path_in(o, "train_report.csv"), train_report_csv(run.report));
  write_file(path_in(o, "result.json"), result_to_json(run.result));
}

void print_result(const RunResult& r, double seconds) {
  std::printf("%s seed %llu: base %.3f sft %.3f epochs", to_string(r.variant).c_str(),
              static_cast<unsigned long long>(r.seed), r.base_accuracy, r.sft_accuracy);
  for (double a : r.epoch_accuracy) std::printf(" %.3f", a);
  std::printf(" best %.3f (%.2fs)\n", r.best_checkpoint_accuracy, seconds);
}

void cmd_synth(const Options& o) {
  const RunConfig c = resolve_config(o);
  const RunPrompts p = synthesize_run_prompts(c);
  write_prompts(o, p);
  std::printf("synthesized %zu train and %zu eval prompts\n", p.train.size(), p.eval.size());
}

void cmd_search(const Options& o) {
  const RunConfig c = resolve_config(o);
  const auto prompts = prompts_from_jsonl(read_input(o, "prompts.jsonl"));
  const auto trees = search_prompts(c, prompts);
  write_file(path_in(o, "trees.jsonl"), trees_to_jsonl(trees));
  std::size_t nodes = 0;
  for (const auto& t : trees) nodes += t.nodes.size();
  std::printf("searched %zu prompts (%zu nodes)\n", trees.size(), nodes);
}

void cmd_extract(const Options& o) {
  const RunConfig c = resolve_config(o);
  require_pairs(c.variant);
  const auto trees = trees_from_jsonl(read_input(o, "trees.jsonl"));
  const BufferMode mode = c.pairs.mode.value_or(buffer_mode_for(c.variant));
  const PairBuffer buffer = build_buffer(trees, c.pairs.tau, mode);
  write_file(path_in(o, "buffer.jsonl"), buffer_to_jsonl(buffer));
  std::printf("extracted %zu pairs (%zu stepwise, %zu complete, %zu depthwise)\n", buffer.size(),
              buffer.count(PairKind::stepwise), buffer.count(PairKind::complete),
              buffer.count(PairKind::depthwise));
}

void cmd_schedule(const Options& o) {
  const RunConfig c = resolve_config(o);
  require_pairs(c.variant);
  const SharedStage shared = prepare_from(c, load_prompts(o), trees_from_jsonl(read_input(o, "trees.jsonl")));
  const PairBuffer buffer = buffer_from_jsonl(read_input(o, "buffer.jsonl"));
  if (buffer.empty()) throw EmptyBufferError("buffer.jsonl holds no pairs");
  EpochPlan plan;
  if (c.variant == Variant::cpl) {
    plan = schedule_epoch(buffer, shared.prompt_table, shared.sft_policy, shared.value, c.cpl, 0);
  } else {
    plan.schedule = shuffle_schedule(buffer, epoch_shuffle_seed(c, 0), 0);
  }
  write_file(path_in(o, "sft_policy.json"), policy_to_json(shared.sft_policy));
  write_file(path_in(o, "schedule_epoch_1.csv"), schedule_csv(buffer, plan.schedule, plan.weights));
  std::printf("scheduled %zu pairs for epoch 1 (sft accuracy %.3f)\n", plan.schedule.order.size(),
              shared.sft_accuracy);
}

void cmd_train(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  const RunConfig c = resolve_config(o);
  const SharedStage shared = prepare_from(c, load_prompts(o), trees_from_jsonl(read_input(o, "trees.jsonl")));
  PairBuffer buffer;
  if (c.variant != Variant::sft_only) buffer = buffer_from_jsonl(read_input(o, "buffer.jsonl"));
  const VariantRun run = run_variant(shared, c, c.variant, std::move(buffer));
  write_training(o, shared, run);
  print_result(run.result,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
}

void cmd_eval(const Options& o) {
  const std::string policy_path = o.policy.empty() ? path_in(o, "policy.json") : o.policy;
  if (!fs::exists(policy_path)) throw Error("missing input " + policy_path);
  const PolicyParams policy = policy_from_json(read_file(policy_path));
  const auto prompts = prompts_from_jsonl(read_input(o, "eval_prompts.jsonl"));
  std::printf("accuracy %s\n", format_double(evaluate_policy(policy, prompts)).c_str());
}

void cmd_run(const Options& o) {
  const auto started = std::chrono::steady_clock::now();
  const RunConfig c = resolve_config(o);
  RunPrompts prompts = synthesize_run_prompts(c);
  write_prompts(o, prompts);
  auto trees = search_prompts(c, prompts.train);
  write_file(path_in(o, "trees.jsonl"), trees_to_jsonl(trees));
  const SharedStage shared = prepare_from(c, std::move(prompts), std::move(trees));
  const VariantRun run = run_variant(shared, c, c.variant);
  write_file(path_in(o, "buffer.jsonl"), buffer_to_jsonl(run.buffer));
  write_training(o, shared, run);
  print_result(run.result,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
}

std::string result_label(const fs::path& p) {
  if (p.filename() == "result.json" && p.has_parent_path()) {
    return fs::absolute(p).parent_path().filename().string();
  }
  return p.stem().string();
}

void cmd_compare(const Options& o) {
  std::vector<std::pair<std::string, RunResult>> results;
  for (const std::string& in : o.inputs) {
    if (!fs::exists(in)) throw Error("missing input " + in);
    try {
      results.emplace_back(result_label(in), result_from_json(read_file(in)));
    } catch (const SchemaError& e) {
      throw SchemaError(in + ": " + e.what());
    }
  }
  const Comparison cmp = compare(std::move(results));
  std::cout << cmp.table();
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_file(path_in(o, "comparison.csv"), cmp.table_csv());
    write_file(path_in(o, "series.csv"), cmp.series_csv());
  }
}

void add_run_flags(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "Run config (TOML)")->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "Run directory")->capture_default_str();
  sub->add_option("--seed", o.seed, "Master seed");
  sub->add_option("--variant", o.variant,
                  "cpl, shuffle, complete_only, depthwise_q, or sft_only");
  sub->add_option("--epochs", o.epochs, "Offline preference-learning epochs");
  sub->add_option("--tau", o.tau, "Minimum value gap for a pair");
  sub->add_option("--alpha", o.alpha, "Weight of the policy prediction gap");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-search preference learning on a reach-target puzzle"};
  app.require_subcommand(1);
  Options o;

  struct Stage {
    const char* name;
    const char* help;
    void (*fn)(const Options&);
  };
  const Stage stages[] = {
      {"synth", "Synthesize train and eval prompts", cmd_synth},
      {"search", "Run one tree search per train prompt", cmd_search},
      {"extract", "Extract preference pairs from the trees", cmd_extract},
      {"schedule", "Fine-tune on best trajectories and order the buffer for epoch 1", cmd_schedule},
      {"train", "Fine-tune, then preference-train over the buffer", cmd_train},
      {"eval", "Greedy accuracy of a policy on the eval prompts", cmd_eval},
      {"run", "All stages end to end", cmd_run},
  };
  void (*chosen)(const Options&) = nullptr;
  for (const Stage& s : stages) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_run_flags(sub, o);
    if (std::string(s.name) == "eval") {
      sub->add_option("--policy", o.policy, "Policy file (default: DIR/policy.json)");
    }
    sub->callback([&chosen, fn = s.fn] { chosen = fn; });
  }
  CLI::App* cmp = app.add_subcommand("compare", "Rank result.json files and emit plot data");
  cmp->add_option("results", o.inputs, "result.json files")->required();
  cmp->add_option("--out", o.out, "Directory for comparison.csv and series.csv")
      ->capture_default_str();
  cmp->callback([&chosen] { chosen = cmd_compare; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    chosen(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
