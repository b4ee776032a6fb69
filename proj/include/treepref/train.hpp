#pragma once

// Plain gradient-descent optimizers for the step policy:
//  - SFT: minimize the mean negative log-likelihood of chosen trajectories.
//  - DPO: minimize mean softplus(-beta * delta) with
//      delta = (log pi(y_w) - log ref(y_w)) - (log pi(y_l) - log ref(y_l)).
// Batch gradients are computed per item (OpenMP) and summed in item order,
// so serial and parallel runs agree bit for bit.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "treepref/curriculum.hpp"
#include "treepref/pairs.hpp"
#include "treepref/policy.hpp"

namespace treepref {

struct DpoConfig {
  double beta = 0.1;
  std::size_t batch_size = 64;
  std::vector<double> lr_by_epoch{1.0, 0.1};
  /// Global-norm clip; no clipping when unset.
  std::optional<double> max_grad_norm;
};

void validate(const DpoConfig& config);

using PairBatch = std::span<const TrajectoryPair* const>;

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

double softplus(double x);

/// Mean DPO loss over the batch.
double dpo_loss(const PolicyParams& policy, const FrozenPolicy& ref, PairBatch batch,
                const PromptTable& prompts, double beta);

LossAndGrad dpo_loss_and_grad(const PolicyParams& policy, const FrozenPolicy& ref,
                              PairBatch batch, const PromptTable& prompts, double beta,
                              Exec exec = Exec::parallel);

/// One descent step with lr_by_epoch[epoch]. Returns the batch loss before
/// the update. Throws NumericError (with the offending pair) on a
/// non-finite gradient; the policy is left untouched in that case.
double dpo_gradient_step(PolicyParams& policy, const FrozenPolicy& ref, PairBatch batch,
                         const PromptTable& prompts, const DpoConfig& config, int epoch,
                         Exec exec = Exec::parallel);

/// Mean negative log-likelihood.
double sft_loss(const PolicyParams& policy, std::span<const Trajectory> trajectories,
                const PromptTable& prompts);

LossAndGrad sft_loss_and_grad(const PolicyParams& policy,
                              std::span<const Trajectory* const> batch,
                              const PromptTable& prompts, Exec exec = Exec::parallel);

struct SftEpochReport {
  std::vector<double> batch_losses;
  double mean_nll_before = 0.0;
  double mean_nll_after = 0.0;
};

/// One pass of mini-batch descent over the trajectories in ascending
/// prompt_id order.
SftEpochReport sft_epoch(PolicyParams& policy, std::span<const Trajectory> trajectories,
                         const PromptTable& prompts, double lr, std::size_t batch_size,
                         Exec exec = Exec::parallel);

struct StepRecord {
  int step = 0;  // 1-based, counted across epochs
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> eval_accuracy;
};

struct TrainReport {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_mean_loss;
  int steps_completed = 0;

  /// Checkpoint evaluations in step order.
  std::vector<std::pair<int, double>> checkpoints() const;
};

/// CSV: step,epoch,loss,eval_accuracy (blank when not a checkpoint step).
std::string train_report_csv(const TrainReport& report);

using Evaluator = std::function<double(const PolicyParams&)>;

/// DPO over the schedule in consecutive batches of config.batch_size,
/// appending to `report`. The evaluator runs after every
/// `checkpoint_every`-th global step.
void run_dpo_epoch(PolicyParams& policy, const FrozenPolicy& ref, const PairBuffer& buffer,
                   const Schedule& schedule, const PromptTable& prompts, const DpoConfig& config,
                   int epoch, int checkpoint_every, const Evaluator& evaluate,
                   TrainReport& report, Exec exec = Exec::parallel);

}  // namespace treepref
