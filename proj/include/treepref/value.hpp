#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "treepref/env.hpp"

namespace treepref {

enum class RewardMode { post_state, potential_diff };

std::string to_string(RewardMode mode);
RewardMode parse_reward_mode(std::string_view text);

struct ValueConfig {
  double gamma = 0.9;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  RewardMode reward_mode = RewardMode::post_state;
};

void validate(const ValueConfig& config);

/// gamma^min_steps when the target is reachable within the remaining budget,
/// else 0; plus zero-mean Gaussian noise drawn from a stream keyed on
/// (state, seed), clipped to [0, 1].
double state_value(const Prompt& prompt, const EnvState& state, const ValueConfig& config);

/// Per-step reward. post_state: V(after). potential_diff: V(after) - V(before).
double step_reward(const Prompt& prompt, const EnvState& before, const EnvState& after,
                   const ValueConfig& config);

}  // namespace treepref
