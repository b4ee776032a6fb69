#include "treepref/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "treepref/io.hpp"
#include "treepref/parallel.hpp"

namespace treepref {

using Json = nlohmann::ordered_json;

double evaluate_with(const StepChooser& choose, std::span<const Prompt> prompts, Exec exec) {
  if (prompts.empty()) throw PreconditionError("no evaluation prompts");
  std::vector<char> solved(prompts.size(), 0);
  parallel_for(prompts.size(), exec, [&](std::size_t i) {
    const Prompt& p = prompts[i];
    EnvState s = initial_state(p);
    while (!is_terminal(p, s)) s = apply_step(p, s, choose(p, s));
    solved[i] = s.current == p.target ? 1 : 0;
  });
  const auto hits = std::count(solved.begin(), solved.end(), 1);
  return static_cast<double>(hits) / static_cast<double>(prompts.size());
}

double evaluate_policy(const PolicyParams& policy, std::span<const Prompt> prompts, Exec exec) {
  return evaluate_with(
      [&](const Prompt& p, const EnvState& s) { return greedy_action(policy, p, s); }, prompts,
      exec);
}

RunPrompts synthesize_run_prompts(const RunConfig& config) {
  validate(config);
  RunPrompts out;
  out.train = synthesize_prompts(config.num_train_prompts, config.env,
                                 derive_seed(config.seed, "train_prompts"), 0);
  out.eval = synthesize_prompts(config.num_eval_prompts, config.env,
                                derive_seed(config.seed, "eval_prompts"),
                                static_cast<std::int64_t>(config.num_train_prompts));
  return out;
}

ValueConfig run_value_config(const RunConfig& config) {
  ValueConfig v = config.value;
  v.seed = derive_seed(config.seed, "value");
  return v;
}

std::vector<SearchTree> search_prompts(const RunConfig& config, std::span<const Prompt> prompts,
                                       Exec exec) {
  validate(config);
  MctsConfig mcts = config.mcts;
  mcts.seed = derive_seed(config.seed, "mcts");
  return run_search_batch(prompts, PolicyParams::zeros(config.env.op_vocab.size()),
                          run_value_config(config), mcts, exec);
}

SharedStage prepare_from(const RunConfig& config, RunPrompts prompts,
                         std::vector<SearchTree> trees, Exec exec) {
  validate(config);
  SharedStage s;
  s.train_prompts = std::move(prompts.train);
  s.eval_prompts = std::move(prompts.eval);
  s.prompt_table = index_prompts(s.train_prompts);
  s.value = run_value_config(config);
  s.trees = std::move(trees);
  for (const SearchTree& t : s.trees) {
    lookup(s.prompt_table, t.prompt_id);
    try {
      s.sft_targets.push_back(best_trajectory(t));
    } catch (const NoTrajectoryError&) {
      // No finished trajectory for this prompt; it contributes pairs only.
    }
  }

  s.base_policy = PolicyParams::zeros(config.env.op_vocab.size());
  s.base_accuracy = evaluate_policy(s.base_policy, s.eval_prompts, exec);
  s.sft_policy = s.base_policy;
  if (config.train.sft_epochs > 0) {
    if (s.sft_targets.empty()) throw Error("search produced no trajectories to fine-tune on");
    for (int e = 0; e < config.train.sft_epochs; ++e) {
      s.sft_reports.push_back(sft_epoch(s.sft_policy, s.sft_targets, s.prompt_table,
                                        config.train.lr_sft, config.train.batch_size_sft, exec));
    }
  }
  s.sft_accuracy = evaluate_policy(s.sft_policy, s.eval_prompts, exec);

  s.checksums["prompts"] = checksum_hex(prompts_to_jsonl(s.train_prompts));
  s.checksums["eval_prompts"] = checksum_hex(prompts_to_jsonl(s.eval_prompts));
  s.checksums["trees"] = checksum_hex(trees_to_jsonl(s.trees));
  s.checksums["sft_policy"] = policy_checksum(s.sft_policy);
  return s;
}

SharedStage prepare(const RunConfig& config, Exec exec) {
  RunPrompts prompts = synthesize_run_prompts(config);
  std::vector<SearchTree> trees = search_prompts(config, prompts.train, exec);
  return prepare_from(config, std::move(prompts), std::move(trees), exec);
}

std::uint64_t epoch_shuffle_seed(const RunConfig& config, int epoch) {
  const std::uint64_t base = config.shuffle_seed.value_or(derive_seed(config.seed, "shuffle"));
  return derive_seed(base, static_cast<std::uint64_t>(epoch));
}

PairBuffer variant_buffer(const SharedStage& shared, const RunConfig& config, Variant variant) {
  const BufferMode mode = config.pairs.mode.value_or(buffer_mode_for(variant));
  return build_buffer(shared.trees, config.pairs.tau, mode);
}

VariantRun run_variant(const SharedStage& shared, const RunConfig& config, Variant variant,
                       Exec exec) {
  PairBuffer buffer;
  if (variant != Variant::sft_only) buffer = variant_buffer(shared, config, variant);
  return run_variant(shared, config, variant, std::move(buffer), exec);
}

VariantRun run_variant(const SharedStage& shared, const RunConfig& config, Variant variant,
                       PairBuffer buffer, Exec exec) {
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  VariantRun run;
  RunResult& r = run.result;
  r.variant = variant;
  r.seed = config.seed;
  r.tau = config.pairs.tau;
  r.alpha = config.cpl.alpha;
  r.metric = config.cpl.metric;
  r.epochs = config.epochs;
  r.base_accuracy = shared.base_accuracy;
  r.sft_accuracy = shared.sft_accuracy;
  r.checksums = shared.checksums;
  run.final_policy = shared.sft_policy;

  if (variant == Variant::sft_only) {
    r.epoch_accuracy.assign(static_cast<std::size_t>(config.epochs), shared.sft_accuracy);
    r.best_checkpoint_accuracy = shared.sft_accuracy;
  } else {
    run.buffer = std::move(buffer);
    if (run.buffer.empty()) {
      throw EmptyBufferError("no preference pair cleared the margin tau=" +
                             format_double(config.pairs.tau) + "; try a smaller tau");
    }
    for (PairKind k : {PairKind::stepwise, PairKind::complete, PairKind::depthwise}) {
      r.pair_counts[to_string(k)] = run.buffer.count(k);
    }

    const FrozenPolicy ref = snapshot(shared.sft_policy);
    PolicyParams& policy = run.final_policy;
    CurriculumScheduler scheduler(run.buffer, shared.prompt_table, shared.value, config.cpl, exec);
    const Evaluator evaluate = [&](const PolicyParams& p) {
      return evaluate_policy(p, shared.eval_prompts, exec);
    };

    for (int k = 0; k < config.epochs; ++k) {
      if (variant == Variant::cpl) {
        EpochPlan plan = scheduler.schedule_epoch(policy, k);
        run.schedules.push_back(std::move(plan.schedule));
        run.weights.push_back(std::move(plan.weights));
      } else {
        run.schedules.push_back(shuffle_schedule(run.buffer, epoch_shuffle_seed(config, k), k));
        run.weights.emplace_back();
      }
      run_dpo_epoch(policy, ref, run.buffer, run.schedules.back(), shared.prompt_table,
                    config.train.dpo, k, config.train.checkpoint_every, evaluate, run.report,
                    exec);
      r.epoch_accuracy.push_back(evaluate(policy));
    }

    r.checkpoints = run.report.checkpoints();
    r.best_checkpoint_accuracy =
        *std::max_element(r.epoch_accuracy.begin(), r.epoch_accuracy.end());
    for (const auto& [step, acc] : r.checkpoints) {
      r.best_checkpoint_accuracy = std::max(r.best_checkpoint_accuracy, acc);
    }
  }

  r.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return run;
}

RunResult self_improve(const RunConfig& config, Exec exec) {
  return run_baseline(config, config.variant, exec);
}

RunResult run_baseline(const RunConfig& config, Variant variant, Exec exec) {
  const auto started = std::chrono::steady_clock::now();
  const SharedStage shared = prepare(config, exec);
  RunResult r = run_variant(shared, config, variant, exec).result;
  r.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

std::string result_to_json(const RunResult& r) {
  Json j;
  j["variant"] = to_string(r.variant);
  j["seed"] = r.seed;
  j["tau"] = r.tau;
  j["alpha"] = r.alpha;
  j["metric"] = to_string(r.metric);
  j["epochs"] = r.epochs;
  j["base_accuracy"] = r.base_accuracy;
  j["sft_accuracy"] = r.sft_accuracy;
  j["epoch_accuracy"] = r.epoch_accuracy;
  Json cps = Json::array();
  for (const auto& [step, acc] : r.checkpoints) cps.push_back(Json::array({step, acc}));
  j["checkpoints"] = std::move(cps);
  j["best_checkpoint_accuracy"] = r.best_checkpoint_accuracy;
  Json counts = Json::object();
  for (const auto& [k, v] : r.pair_counts) counts[k] = v;
  j["pair_counts"] = std::move(counts);
  Json sums = Json::object();
  for (const auto& [k, v] : r.checksums) sums[k] = v;
  j["checksums"] = std::move(sums);
  return j.dump(2) + "\n";
}

RunResult result_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("result: malformed JSON (") + e.what() + ")");
  }
  static const std::vector<std::string> keys = {
      "variant",        "seed",        "tau",      "alpha",       "metric",
      "epochs",         "base_accuracy", "sft_accuracy", "epoch_accuracy", "checkpoints",
      "best_checkpoint_accuracy", "pair_counts", "checksums"};
  if (!j.is_object()) throw SchemaError("result: expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw SchemaError("result: unknown field '" + k + "'");
    }
  }
  RunResult r;
  try {
    r.variant = parse_variant(j.at("variant").get<std::string>());
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tau = j.at("tau").get<double>();
    r.alpha = j.at("alpha").get<double>();
    r.metric = parse_curriculum_metric(j.at("metric").get<std::string>());
    r.epochs = j.at("epochs").get<int>();
    r.base_accuracy = j.at("base_accuracy").get<double>();
    r.sft_accuracy = j.at("sft_accuracy").get<double>();
    r.epoch_accuracy = j.at("epoch_accuracy").get<std::vector<double>>();
    for (const Json& cp : j.at("checkpoints")) {
      r.checkpoints.emplace_back(cp.at(0).get<int>(), cp.at(1).get<double>());
    }
    r.best_checkpoint_accuracy = j.at("best_checkpoint_accuracy").get<double>();
    r.pair_counts = j.at("pair_counts").get<std::map<std::string, std::size_t>>();
    r.checksums = j.at("checksums").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("result: ") + e.what());
  } catch (const Error& e) {
    throw SchemaError(std::string("result: ") + e.what());
  }
  return r;
}

Comparison compare(std::vector<std::pair<std::string, RunResult>> results) {
  std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
    if (a.second.best_checkpoint_accuracy != b.second.best_checkpoint_accuracy) {
      return a.second.best_checkpoint_accuracy > b.second.best_checkpoint_accuracy;
    }
    return a.first < b.first;
  });
  return Comparison{std::move(results)};
}

std::string Comparison::table() const {
  std::size_t epochs = 0;
  std::size_t label_width = 5;
  for (const auto& [label, r] : ranked) {
    epochs = std::max(epochs, r.epoch_accuracy.size());
    label_width = std::max(label_width, label.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(5) << "rank" << std::setw(static_cast<int>(label_width) + 2)
     << "label" << std::setw(15) << "variant" << std::setw(8) << "alpha" << std::setw(8)
     << "base" << std::setw(8) << "sft";
  for (std::size_t e = 0; e < epochs; ++e) os << std::setw(8) << ("ep" + std::to_string(e + 1));
  os << "best\n";
  os << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& [label, r] = ranked[i];
    const std::string alpha =
        r.metric == CurriculumMetric::pg_only ? "pg" : format_double(r.alpha);
    os << std::setw(5) << (i + 1) << std::setw(static_cast<int>(label_width) + 2) << label
       << std::setw(15) << to_string(r.variant) << std::setw(8) << alpha << std::setw(8)
       << r.base_accuracy << std::setw(8) << r.sft_accuracy;
    for (std::size_t e = 0; e < epochs; ++e) {
      if (e < r.epoch_accuracy.size()) {
        os << std::setw(8) << r.epoch_accuracy[e];
      } else {
        os << std::setw(8) << "-";
      }
    }
    os << r.best_checkpoint_accuracy << "\n";
  }
  return os.str();
}

std::string Comparison::series_csv() const {
  std::ostringstream os;
  os << "label,step,accuracy\n";
  for (const auto& [label, r] : ranked) {
    for (const auto& [step, acc] : r.checkpoints) {
      os << label << ',' << step << ',' << format_double(acc) << '\n';
    }
  }
  return os.str();
}

std::string Comparison::table_csv() const {
  std::ostringstream os;
  os << "rank,label,variant,alpha,metric,base_accuracy,sft_accuracy,epoch_accuracy,best\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& [label, r] = ranked[i];
    os << (i + 1) << ',' << label << ',' << to_string(r.variant) << ',' << format_double(r.alpha)
       << ',' << to_string(r.metric) << ',' << format_double(r.base_accuracy) << ','
       << format_double(r.sft_accuracy) << ',';
    for (std::size_t e = 0; e < r.epoch_accuracy.size(); ++e) {
      os << (e ? ";" : "") << format_double(r.epoch_accuracy[e]);
    }
    os << ',' << format_double(r.best_checkpoint_accuracy) << '\n';
  }
  return os.str();
}

}  // namespace treepref
