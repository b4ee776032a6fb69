#pragma once

// The offline self-improvement loop and its baselines.
//
//   synthesize prompts -> search every prompt once with the base policy ->
//   SFT on each tree's best trajectory -> build the pair buffer ->
//   for each offline epoch: order the buffer (curriculum or shuffle), run
//   DPO against the frozen post-SFT reference, evaluate.
//
// Everything up to and including SFT is shared by all variants (see
// SharedStage), so variant comparisons isolate pair extraction and
// ordering.

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treepref/config.hpp"
#include "treepref/curriculum.hpp"
#include "treepref/mcts.hpp"
#include "treepref/pairs.hpp"
#include "treepref/policy.hpp"
#include "treepref/train.hpp"

namespace treepref {

class EmptyBufferError : public Error {
 public:
  using Error::Error;
};

/// Greedy decoding step rule used by evaluation.
using StepChooser = std::function<Action(const Prompt&, const EnvState&)>;

/// Fraction of prompts solved by following `choose` until termination.
double evaluate_with(const StepChooser& choose, std::span<const Prompt> prompts,
                     Exec exec = Exec::parallel);

/// Greedy (argmax, ties to the lowest op index) decoding accuracy.
double evaluate_policy(const PolicyParams& policy, std::span<const Prompt> prompts,
                       Exec exec = Exec::parallel);

struct SharedStage {
  std::vector<Prompt> train_prompts;
  std::vector<Prompt> eval_prompts;
  PromptTable prompt_table;  // train prompts
  ValueConfig value;         // with the derived noise seed
  std::vector<SearchTree> trees;
  std::vector<Trajectory> sft_targets;
  PolicyParams base_policy;
  PolicyParams sft_policy;
  double base_accuracy = 0.0;
  double sft_accuracy = 0.0;
  std::vector<SftEpochReport> sft_reports;
  /// Checksums of the serialized prompts, trees, and SFT policy.
  std::map<std::string, std::string> checksums;
};

struct RunPrompts {
  std::vector<Prompt> train;
  std::vector<Prompt> eval;  // ids continue after the train prompts
};

RunPrompts synthesize_run_prompts(const RunConfig& config);

/// config.value with the noise seed derived from the master seed.
ValueConfig run_value_config(const RunConfig& config);

/// One search per prompt with the base (uniform) policy.
std::vector<SearchTree> search_prompts(const RunConfig& config, std::span<const Prompt> prompts,
                                       Exec exec = Exec::parallel);

/// SFT and base/SFT evaluation on existing prompts and trees.
SharedStage prepare_from(const RunConfig& config, RunPrompts prompts,
                         std::vector<SearchTree> trees, Exec exec = Exec::parallel);

/// Synthesis, search, and SFT.
SharedStage prepare(const RunConfig& config, Exec exec = Exec::parallel);

/// Seed of the shuffled order for a 0-based epoch.
std::uint64_t epoch_shuffle_seed(const RunConfig& config, int epoch);

/// The pair buffer a variant trains on (pairs.mode overrides the variant's mode).
PairBuffer variant_buffer(const SharedStage& shared, const RunConfig& config, Variant variant);

struct RunResult {
  Variant variant = Variant::cpl;
  std::uint64_t seed = 0;
  double tau = 0.0;
  double alpha = 0.0;
  CurriculumMetric metric = CurriculumMetric::combined;
  int epochs = 0;
  double base_accuracy = 0.0;
  double sft_accuracy = 0.0;
  /// Accuracy of the policy at the end of each offline epoch.
  std::vector<double> epoch_accuracy;
  /// (global step, accuracy) at every checkpoint.
  std::vector<std::pair<int, double>> checkpoints;
  /// Best of the checkpoint and end-of-epoch evaluations.
  double best_checkpoint_accuracy = 0.0;
  std::map<std::string, std::size_t> pair_counts;  // by kind
  std::map<std::string, std::string> checksums;
  /// Not serialized: it would break byte-identical reruns.
  double wall_time_seconds = 0.0;
};

struct VariantRun {
  RunResult result;
  PairBuffer buffer;
  std::vector<Schedule> schedules;
  std::vector<std::vector<PairWeights>> weights;  // empty for shuffled epochs
  TrainReport report;
  PolicyParams final_policy;
};

/// Pair extraction, scheduling, and DPO for one variant on a prepared stage.
/// Throws EmptyBufferError when no pair clears the margin.
VariantRun run_variant(const SharedStage& shared, const RunConfig& config, Variant variant,
                       Exec exec = Exec::parallel);

/// As above, training on a given buffer instead of extracting one.
VariantRun run_variant(const SharedStage& shared, const RunConfig& config, Variant variant,
                       PairBuffer buffer, Exec exec = Exec::parallel);

/// prepare + run_variant(config.variant).
RunResult self_improve(const RunConfig& config, Exec exec = Exec::parallel);

/// prepare + run_variant(variant).
RunResult run_baseline(const RunConfig& config, Variant variant, Exec exec = Exec::parallel);

std::string result_to_json(const RunResult& result);
RunResult result_from_json(std::string_view text);

/// Ranked comparison table (best accuracy descending, ties by label) and
/// accuracy-vs-step series.
struct Comparison {
  std::vector<std::pair<std::string, RunResult>> ranked;
  std::string table() const;
  /// CSV: label,step,accuracy.
  std::string series_csv() const;
  /// CSV: rank,label,variant,alpha,metric,base,sft,epoch accuracies...,best
  std::string table_csv() const;
};

Comparison compare(std::vector<std::pair<std::string, RunResult>> results);

}  // namespace treepref
