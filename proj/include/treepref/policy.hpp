#pragma once

// Linear-softmax step policy over the op vocabulary.
//
// score(a | s) = theta[a] . phi(s), pi(a | s) = softmax(score)(a), where phi
// is a fixed bounded feature map of (current, target, remaining budget).
// A trajectory's log-probability is the sum of its per-step log-probabilities.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "treepref/common.hpp"
#include "treepref/env.hpp"
#include "treepref/trajectory.hpp"

namespace treepref {

inline constexpr std::size_t kFeatureDim = 26;

using FeatureVector = std::array<double, kFeatureDim>;

/// Features of a state; every entry lies in [-1, 1].
FeatureVector features(const Prompt& prompt, const EnvState& state);

class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(std::size_t feature_dim, std::size_t vocab_size, std::vector<double> theta);

  static PolicyParams zeros(std::size_t vocab_size);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t size() const { return theta_.size(); }

  std::span<const double> theta() const { return theta_; }
  std::span<double> theta() { return theta_; }

  /// Row of weights for one action.
  std::span<const double> weights(Action a) const {
    return std::span<const double>(theta_).subspan(static_cast<std::size_t>(a) * feature_dim_,
                                                   feature_dim_);
  }

  /// Throws NumericError when any entry is NaN or infinite.
  void require_finite() const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  std::size_t feature_dim_ = kFeatureDim;
  std::size_t vocab_size_ = 0;
  std::vector<double> theta_;
};

/// Immutable copy used as the DPO reference policy.
class FrozenPolicy {
 public:
  explicit FrozenPolicy(PolicyParams params)
      : params_(std::make_shared<const PolicyParams>(std::move(params))) {}
  const PolicyParams& params() const { return *params_; }

 private:
  std::shared_ptr<const PolicyParams> params_;
};

inline FrozenPolicy snapshot(const PolicyParams& params) { return FrozenPolicy(params); }

struct StepDistribution {
  std::vector<double> probs;
};

/// Softmax over linear scores, computed with max-subtraction.
StepDistribution step_distribution(const PolicyParams& params, const Prompt& prompt,
                                   const EnvState& state);

/// Sum over steps of log pi(step | state so far).
double trajectory_logprob(const PolicyParams& params, const Prompt& prompt,
                          std::span<const Action> steps);

/// d trajectory_logprob / d theta, as a vector of params.size().
std::vector<double> grad_trajectory_logprob(const PolicyParams& params, const Prompt& prompt,
                                            std::span<const Action> steps);

/// Accumulates scale * d logprob / d theta into `grad` and returns the
/// log-probability itself; the training kernels build on this.
double accumulate_logprob_grad(const PolicyParams& params, const Prompt& prompt,
                               std::span<const Action> steps, double scale,
                               std::span<double> grad);

/// Autoregressive sampling until the state is terminal. The returned
/// trajectory is complete and carries value 1 when it reaches the target,
/// 0 otherwise.
Trajectory sample_trajectory(const PolicyParams& params, const Prompt& prompt, Rng& rng);

/// Argmax action, ties to the lowest index.
Action greedy_action(const PolicyParams& params, const Prompt& prompt, const EnvState& state);

}  // namespace treepref
