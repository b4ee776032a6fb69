#include "treepref/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace treepref {

namespace {

std::size_t diff_bucket(std::int64_t diff) {
  if (diff < 0) return 0;
  if (diff <= 3) return static_cast<std::size_t>(diff);  // diff == 0 is terminal
  if (diff <= 6) return 4;
  if (diff <= 12) return 5;
  return 6;
}

std::size_t ratio_bucket(double r) {
  if (r < 1.0) return 0;
  if (r < 2.0) return 1;
  if (r < 3.0) return 2;
  if (r < 4.0) return 3;
  if (r < 6.0) return 4;
  if (r < 9.0) return 5;
  return 6;
}

bool divides(std::int64_t d, std::int64_t x) { return d != 0 && x % d == 0; }

}  // namespace

// Layout: [0] bias, [1] squashed signed difference, [2..8] difference
// buckets, [9..15] ratio buckets, [16..18] divisibility of the target by
// current, 2*current, 3*current, [19..22] remaining budget 1/2/3/4+,
// [23..25] parity of current, target, and difference.
FeatureVector features(const Prompt& prompt, const EnvState& state) {
  FeatureVector f{};
  const std::int64_t diff = prompt.target - state.current;
  f[0] = 1.0;
  f[1] = std::tanh(static_cast<double>(diff) / 8.0);
  f[2 + diff_bucket(diff)] = 1.0;
  if (state.current > 0) {
    const double r = static_cast<double>(prompt.target) / static_cast<double>(state.current);
    f[9 + ratio_bucket(r)] = 1.0;
    f[16] = divides(state.current, prompt.target) ? 1.0 : 0.0;
    f[17] = divides(2 * state.current, prompt.target) ? 1.0 : 0.0;
    f[18] = divides(3 * state.current, prompt.target) ? 1.0 : 0.0;
  }
  const int remaining = prompt.budget - state.steps_taken;
  f[19 + static_cast<std::size_t>(std::clamp(remaining, 1, 4) - 1)] = 1.0;
  f[23] = state.current % 2 == 0 ? 1.0 : 0.0;
  f[24] = prompt.target % 2 == 0 ? 1.0 : 0.0;
  f[25] = diff % 2 == 0 ? 1.0 : 0.0;
  return f;
}

PolicyParams::PolicyParams(std::size_t feature_dim, std::size_t vocab_size,
                           std::vector<double> theta)
    : feature_dim_(feature_dim), vocab_size_(vocab_size), theta_(std::move(theta)) {
  if (feature_dim_ != kFeatureDim) {
    throw PreconditionError("feature_dim " + std::to_string(feature_dim_) +
                            " does not match the feature map (" + std::to_string(kFeatureDim) +
                            ")");
  }
  if (vocab_size_ == 0) throw PreconditionError("vocab_size must be >= 1");
  if (theta_.size() != feature_dim_ * vocab_size_) {
    throw PreconditionError("theta has " + std::to_string(theta_.size()) + " entries, expected " +
                            std::to_string(feature_dim_ * vocab_size_));
  }
}

PolicyParams PolicyParams::zeros(std::size_t vocab_size) {
  return PolicyParams(kFeatureDim, vocab_size, std::vector<double>(kFeatureDim * vocab_size, 0.0));
}

void PolicyParams::require_finite() const {
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    if (!std::isfinite(theta_[i])) {
      throw NumericError("non-finite policy parameter at index " + std::to_string(i));
    }
  }
}

namespace {

void check_vocab(const PolicyParams& params, const Prompt& prompt) {
  if (params.vocab_size() != prompt.op_vocab.size()) {
    throw PreconditionError("policy vocab size " + std::to_string(params.vocab_size()) +
                            " != prompt vocab size " + std::to_string(prompt.op_vocab.size()));
  }
}

// Fills `probs` with the softmax of the action scores at `f`.
void softmax_into(const PolicyParams& params, const FeatureVector& f, std::vector<double>& probs) {
  const std::size_t k = params.vocab_size();
  probs.resize(k);
  double max_score = -INFINITY;
  for (std::size_t a = 0; a < k; ++a) {
    const auto w = params.weights(static_cast<Action>(a));
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatureDim; ++j) s += w[j] * f[j];
    probs[a] = s;
    max_score = std::max(max_score, s);
  }
  double total = 0.0;
  for (double& p : probs) {
    p = std::exp(p - max_score);
    total += p;
  }
  for (double& p : probs) p /= total;
}

}  // namespace

StepDistribution step_distribution(const PolicyParams& params, const Prompt& prompt,
                                   const EnvState& state) {
  check_vocab(params, prompt);
  params.require_finite();
  if (is_terminal(prompt, state)) throw PreconditionError("step distribution at terminal state");
  StepDistribution d;
  softmax_into(params, features(prompt, state), d.probs);
  return d;
}

double accumulate_logprob_grad(const PolicyParams& params, const Prompt& prompt,
                               std::span<const Action> steps, double scale,
                               std::span<double> grad) {
  check_vocab(params, prompt);
  params.require_finite();
  const std::size_t k = params.vocab_size();
  std::vector<double> probs;
  EnvState state = initial_state(prompt);
  double logprob = 0.0;
  for (Action a : steps) {
    const FeatureVector f = features(prompt, state);
    state = apply_step(prompt, state, a);  // validates a
    softmax_into(params, f, probs);
    logprob += std::log(probs[static_cast<std::size_t>(a)]);
    if (!grad.empty()) {
      for (std::size_t b = 0; b < k; ++b) {
        const double coeff = scale * ((static_cast<std::size_t>(a) == b ? 1.0 : 0.0) - probs[b]);
        if (coeff == 0.0) continue;
        double* row = grad.data() + b * kFeatureDim;
        for (std::size_t j = 0; j < kFeatureDim; ++j) row[j] += coeff * f[j];
      }
    }
  }
  if (!std::isfinite(logprob)) throw NumericError("trajectory log-probability is not finite");
  return logprob;
}

double trajectory_logprob(const PolicyParams& params, const Prompt& prompt,
                          std::span<const Action> steps) {
  return accumulate_logprob_grad(params, prompt, steps, 0.0, {});
}

std::vector<double> grad_trajectory_logprob(const PolicyParams& params, const Prompt& prompt,
                                            std::span<const Action> steps) {
  std::vector<double> grad(params.size(), 0.0);
  accumulate_logprob_grad(params, prompt, steps, 1.0, grad);
  return grad;
}

Trajectory sample_trajectory(const PolicyParams& params, const Prompt& prompt, Rng& rng) {
  Trajectory t;
  t.prompt_id = prompt.id;
  EnvState state = initial_state(prompt);
  while (!is_terminal(prompt, state)) {
    const auto d = step_distribution(params, prompt, state);
    std::discrete_distribution<Action> pick(d.probs.begin(), d.probs.end());
    const Action a = pick(rng);
    t.steps.push_back(a);
    state = apply_step(prompt, state, a);
  }
  t.complete = true;
  t.value = state.current == prompt.target ? 1.0 : 0.0;
  return t;
}

Action greedy_action(const PolicyParams& params, const Prompt& prompt, const EnvState& state) {
  const auto d = step_distribution(params, prompt, state);
  // max_element returns the first maximum, which is the lowest index.
  return static_cast<Action>(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin());
}

}  // namespace treepref
