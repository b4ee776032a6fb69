#include "treepref/value.hpp"

#include <algorithm>
#include <cmath>

namespace treepref {

std::string to_string(RewardMode mode) {
  return mode == RewardMode::post_state ? "post_state" : "potential_diff";
}

RewardMode parse_reward_mode(std::string_view text) {
  if (text == "post_state") return RewardMode::post_state;
  if (text == "potential_diff") return RewardMode::potential_diff;
  throw PreconditionError("unknown reward_mode '" + std::string(text) + "'");
}

void validate(const ValueConfig& config) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) {
    throw PreconditionError("gamma must lie in (0, 1]");
  }
  if (!(config.noise_std >= 0.0) || !std::isfinite(config.noise_std)) {
    throw PreconditionError("noise_std must be a finite value >= 0");
  }
}

double state_value(const Prompt& prompt, const EnvState& state, const ValueConfig& config) {
  const Reachability r = oracle_distance(prompt, state);
  double v = r.reachable ? std::pow(config.gamma, *r.min_steps) : 0.0;
  if (config.noise_std > 0.0) {
    std::uint64_t key = derive_seed(config.seed, static_cast<std::uint64_t>(state.prompt_id));
    key = derive_seed(key, static_cast<std::uint64_t>(state.current));
    key = derive_seed(key, static_cast<std::uint64_t>(state.steps_taken));
    Rng rng(key);
    std::normal_distribution<double> noise(0.0, config.noise_std);
    v += noise(rng);
  }
  return std::clamp(v, 0.0, 1.0);
}

double step_reward(const Prompt& prompt, const EnvState& before, const EnvState& after,
                   const ValueConfig& config) {
  const double post = state_value(prompt, after, config);
  if (config.reward_mode == RewardMode::post_state) return post;
  return post - state_value(prompt, before, config);
}

}  // namespace treepref
