#include "treepref/train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "treepref/parallel.hpp"

namespace treepref {

void validate(const DpoConfig& config) {
  if (!(config.beta > 0.0)) throw PreconditionError("beta must be > 0");
  if (config.batch_size < 1) throw PreconditionError("batch_size must be >= 1");
  if (config.lr_by_epoch.empty()) throw PreconditionError("lr_by_epoch is empty");
  for (double lr : config.lr_by_epoch) {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw PreconditionError("learning rates must be >= 0");
  }
  if (config.max_grad_norm && !(*config.max_grad_norm > 0.0)) {
    throw PreconditionError("max_grad_norm must be > 0");
  }
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace {

// 1 / (1 + exp(x)) without overflow.
double sigmoid_neg(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

struct DpoTerms {
  double delta = 0.0;
  double loss = 0.0;
};

// Loss of one pair; when `grad` is nonempty, adds d loss / d theta into it.
DpoTerms dpo_pair(const PolicyParams& policy, const PolicyParams& ref, const TrajectoryPair& pair,
                  const Prompt& prompt, double beta, std::span<double> grad) {
  const double ref_w = trajectory_logprob(ref, prompt, pair.winner.steps);
  const double ref_l = trajectory_logprob(ref, prompt, pair.loser.steps);
  const double pol_w = trajectory_logprob(policy, prompt, pair.winner.steps);
  const double pol_l = trajectory_logprob(policy, prompt, pair.loser.steps);
  DpoTerms t;
  t.delta = (pol_w - ref_w) - (pol_l - ref_l);
  t.loss = softplus(-beta * t.delta);
  if (!grad.empty()) {
    // d softplus(-beta delta) / d delta = -beta * sigmoid(-beta delta)
    const double coeff = -beta * sigmoid_neg(beta * t.delta);
    accumulate_logprob_grad(policy, prompt, pair.winner.steps, coeff, grad);
    accumulate_logprob_grad(policy, prompt, pair.loser.steps, -coeff, grad);
  }
  return t;
}

// Sums per-item rows in index order and scales by 1/n.
void reduce_rows(const std::vector<double>& rows, std::size_t n, std::size_t dim,
                 std::vector<double>& out) {
  out.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = rows.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) out[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& g : out) g *= inv;
}

void require_finite(std::span<const double> xs, const std::string& what) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) {
      throw NumericError(what + ": non-finite entry at index " + std::to_string(i));
    }
  }
}

void descend(PolicyParams& policy, std::vector<double>& grad, double lr,
             std::optional<double> max_grad_norm) {
  if (max_grad_norm) {
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (norm > *max_grad_norm) {
      const double scale = *max_grad_norm / norm;
      for (double& g : grad) g *= scale;
    }
  }
  auto theta = policy.theta();
  for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * grad[j];
}

}  // namespace

double dpo_loss(const PolicyParams& policy, const FrozenPolicy& ref, PairBatch batch,
                const PromptTable& prompts, double beta) {
  if (batch.empty()) throw PreconditionError("empty DPO batch");
  double total = 0.0;
  for (const TrajectoryPair* p : batch) {
    total += dpo_pair(policy, ref.params(), *p, lookup(prompts, p->prompt_id), beta, {}).loss;
  }
  const double loss = total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) throw NumericError("DPO loss is not finite");
  return loss;
}

LossAndGrad dpo_loss_and_grad(const PolicyParams& policy, const FrozenPolicy& ref,
                              PairBatch batch, const PromptTable& prompts, double beta,
                              Exec exec) {
  if (batch.empty()) throw PreconditionError("empty DPO batch");
  const std::size_t n = batch.size();
  const std::size_t dim = policy.size();
  std::vector<double> rows(n * dim, 0.0);
  std::vector<double> losses(n, 0.0);
  parallel_for(n, exec, [&](std::size_t i) {
    const TrajectoryPair& p = *batch[i];
    losses[i] = dpo_pair(policy, ref.params(), p, lookup(prompts, p.prompt_id), beta,
                         std::span<double>(rows).subspan(i * dim, dim))
                    .loss;
  });
  LossAndGrad out;
  for (double l : losses) out.loss += l;
  out.loss /= static_cast<double>(n);
  reduce_rows(rows, n, dim, out.grad);
  return out;
}

double dpo_gradient_step(PolicyParams& policy, const FrozenPolicy& ref, PairBatch batch,
                         const PromptTable& prompts, const DpoConfig& config, int epoch,
                         Exec exec) {
  validate(config);
  if (epoch < 0 || static_cast<std::size_t>(epoch) >= config.lr_by_epoch.size()) {
    throw PreconditionError("no learning rate for epoch " + std::to_string(epoch));
  }
  LossAndGrad lg = dpo_loss_and_grad(policy, ref, batch, prompts, config.beta, exec);
  if (!std::isfinite(lg.loss)) throw NumericError("DPO loss is not finite");
  try {
    require_finite(lg.grad, "DPO gradient");
  } catch (const NumericError& e) {
    std::ostringstream os;
    os << e.what() << " (epoch " << epoch << ", batch of " << batch.size()
       << " pairs starting at prompt " << batch.front()->prompt_id << ")";
    throw NumericError(os.str());
  }
  descend(policy, lg.grad, config.lr_by_epoch[static_cast<std::size_t>(epoch)],
          config.max_grad_norm);
  return lg.loss;
}

double sft_loss(const PolicyParams& policy, std::span<const Trajectory> trajectories,
                const PromptTable& prompts) {
  if (trajectories.empty()) throw PreconditionError("empty SFT trajectory set");
  double total = 0.0;
  for (const Trajectory& t : trajectories) {
    total -= trajectory_logprob(policy, lookup(prompts, t.prompt_id), t.steps);
  }
  return total / static_cast<double>(trajectories.size());
}

LossAndGrad sft_loss_and_grad(const PolicyParams& policy,
                              std::span<const Trajectory* const> batch,
                              const PromptTable& prompts, Exec exec) {
  if (batch.empty()) throw PreconditionError("empty SFT batch");
  const std::size_t n = batch.size();
  const std::size_t dim = policy.size();
  std::vector<double> rows(n * dim, 0.0);
  std::vector<double> losses(n, 0.0);
  parallel_for(n, exec, [&](std::size_t i) {
    const Trajectory& t = *batch[i];
    losses[i] = -accumulate_logprob_grad(policy, lookup(prompts, t.prompt_id), t.steps, -1.0,
                                         std::span<double>(rows).subspan(i * dim, dim));
  });
  LossAndGrad out;
  for (double l : losses) out.loss += l;
  out.loss /= static_cast<double>(n);
  reduce_rows(rows, n, dim, out.grad);
  return out;
}

SftEpochReport sft_epoch(PolicyParams& policy, std::span<const Trajectory> trajectories,
                         const PromptTable& prompts, double lr, std::size_t batch_size,
                         Exec exec) {
  if (trajectories.empty()) throw PreconditionError("empty SFT trajectory set");
  if (batch_size < 1) throw PreconditionError("batch_size must be >= 1");
  std::vector<const Trajectory*> order;
  order.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const Trajectory* a, const Trajectory* b) {
    return a->prompt_id < b->prompt_id;
  });

  SftEpochReport report;
  report.mean_nll_before = sft_loss(policy, trajectories, prompts);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - start);
    LossAndGrad lg = sft_loss_and_grad(
        policy, std::span<const Trajectory* const>(order).subspan(start, len), prompts, exec);
    require_finite(lg.grad, "SFT gradient");
    descend(policy, lg.grad, lr, std::nullopt);
    report.batch_losses.push_back(lg.loss);
  }
  report.mean_nll_after = sft_loss(policy, trajectories, prompts);
  return report;
}

std::vector<std::pair<int, double>> TrainReport::checkpoints() const {
  std::vector<std::pair<int, double>> out;
  for (const auto& s : steps) {
    if (s.eval_accuracy) out.emplace_back(s.step, *s.eval_accuracy);
  }
  return out;
}

std::string train_report_csv(const TrainReport& report) {
  std::ostringstream os;
  os << "step,epoch,loss,eval_accuracy\n";
  for (const auto& s : report.steps) {
    os << s.step << ',' << s.epoch << ',' << format_double(s.loss) << ',';
    if (s.eval_accuracy) os << format_double(*s.eval_accuracy);
    os << '\n';
  }
  return os.str();
}

void run_dpo_epoch(PolicyParams& policy, const FrozenPolicy& ref, const PairBuffer& buffer,
                   const Schedule& schedule, const PromptTable& prompts, const DpoConfig& config,
                   int epoch, int checkpoint_every, const Evaluator& evaluate,
                   TrainReport& report, Exec exec) {
  validate(config);
  if (checkpoint_every < 1) throw PreconditionError("checkpoint_every must be >= 1");
  std::vector<const TrajectoryPair*> ordered;
  ordered.reserve(schedule.order.size());
  for (std::size_t i : schedule.order) ordered.push_back(&buffer[i]);

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t start = 0; start < ordered.size(); start += config.batch_size) {
    const std::size_t len = std::min(config.batch_size, ordered.size() - start);
    const PairBatch batch = PairBatch(ordered).subspan(start, len);
    StepRecord rec;
    rec.loss = dpo_gradient_step(policy, ref, batch, prompts, config, epoch, exec);
    rec.step = ++report.steps_completed;
    rec.epoch = epoch;
    if (evaluate && rec.step % checkpoint_every == 0) rec.eval_accuracy = evaluate(policy);
    report.steps.push_back(rec);
    loss_sum += rec.loss;
    ++batches;
  }
  report.epoch_mean_loss.push_back(batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0);
}

}  // namespace treepref
