#pragma once

// Curriculum ordering of a preference-pair buffer for one offline epoch.
//
// Each pair gets a static reward gap r_g (summed step rewards of the winner
// minus the loser) and a dynamic prediction gap p_g (winner log-likelihood
// minus loser log-likelihood under the current policy). Both are min-max
// normalized over the whole buffer and blended as w_g = r_g' + alpha * p_g'.
// Pairs are sorted by w_g within each prompt and emitted round-robin over
// prompts in ascending id order.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treepref/pairs.hpp"
#include "treepref/policy.hpp"
#include "treepref/value.hpp"

namespace treepref {

using PromptTable = std::map<std::int64_t, Prompt>;

PromptTable index_prompts(std::span<const Prompt> prompts);

/// Throws PreconditionError when the id is unknown.
const Prompt& lookup(const PromptTable& prompts, std::int64_t id);

double reward_gap(const TrajectoryPair& pair, const Prompt& prompt, const ValueConfig& value);

double prediction_gap(const TrajectoryPair& pair, const Prompt& prompt,
                      const PolicyParams& policy);

/// (v - min) / (max - min) rounded to a multiple of 2^-40; every entry is
/// 0.5 when max == min. Throws PreconditionError on an empty list.
std::vector<double> minmax_normalize(std::span<const double> values);

inline double combined_weight(double reward_gap_norm, double prediction_gap_norm, double alpha) {
  return reward_gap_norm + alpha * prediction_gap_norm;
}

enum class SortDirection { descending, ascending };
/// `pg_only` ranks by the normalized prediction gap alone (ablation).
enum class CurriculumMetric { combined, pg_only };

std::string to_string(SortDirection d);
SortDirection parse_sort_direction(std::string_view text);
std::string to_string(CurriculumMetric m);
CurriculumMetric parse_curriculum_metric(std::string_view text);

struct CurriculumConfig {
  double alpha = 0.5;
  SortDirection sort_direction = SortDirection::descending;
  CurriculumMetric metric = CurriculumMetric::combined;
};

struct PairWeights {
  std::size_t pair_index = 0;
  double r_g = 0.0;
  double p_g = 0.0;
  double r_g_norm = 0.0;
  double p_g_norm = 0.0;
  double w_g = 0.0;
};

struct Schedule {
  std::vector<std::size_t> order;
  int epoch = 0;
};

/// Within-prompt sort by w_g (ties to the lower pair index), then
/// round-robin over prompts. `weights` is indexed by pair index.
Schedule round_robin(const PairBuffer& buffer, std::span<const PairWeights> weights,
                     SortDirection direction, int epoch);

/// Seeded uniform permutation of all pair indices.
Schedule shuffle_schedule(const PairBuffer& buffer, std::uint64_t seed, int epoch = 0);

struct EpochPlan {
  Schedule schedule;
  std::vector<PairWeights> weights;  // by pair index
};

/// Holds the buffer's reward gaps across epochs; prediction gaps are
/// recomputed on every call.
class CurriculumScheduler {
 public:
  CurriculumScheduler(const PairBuffer& buffer, const PromptTable& prompts, ValueConfig value,
                      CurriculumConfig config, Exec exec = Exec::parallel);

  EpochPlan schedule_epoch(const PolicyParams& policy, int epoch);

  /// Reward gaps in pair-index order; computed on first use.
  const std::vector<double>& reward_gaps();

  /// Prediction gaps in pair-index order under `policy`.
  std::vector<double> prediction_gaps(const PolicyParams& policy) const;

 private:
  const PairBuffer& buffer_;
  const PromptTable& prompts_;
  ValueConfig value_;
  CurriculumConfig config_;
  Exec exec_;
  std::optional<std::vector<double>> reward_gaps_;
};

/// One-shot scheduling without caching.
EpochPlan schedule_epoch(const PairBuffer& buffer, const PromptTable& prompts,
                         const PolicyParams& policy, const ValueConfig& value,
                         const CurriculumConfig& config, int epoch, Exec exec = Exec::parallel);

/// CSV with columns pair_index,prompt_id,r_g,p_g,r_g_norm,p_g_norm,w_g,emit_position,
/// one row per pair in emission order. Shuffled schedules have no weights;
/// pass an empty span and those columns are left blank.
std::string schedule_csv(const PairBuffer& buffer, const Schedule& schedule,
                         std::span<const PairWeights> weights);

}  // namespace treepref
