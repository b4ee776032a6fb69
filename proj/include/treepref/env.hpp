#pragma once

// Reach-target puzzles: start from an integer, apply ops from a small
// vocabulary, and hit the target within a step budget.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treepref/common.hpp"

namespace treepref {

class SynthesisError : public Error {
 public:
  using Error::Error;
};

struct Op {
  enum class Kind { add, mul };
  Kind kind = Kind::add;
  std::int64_t operand = 1;

  /// Returns nullopt on int64 overflow.
  std::optional<std::int64_t> try_apply(std::int64_t x) const;

  /// "+3", "-1", "*2".
  std::string to_string() const;
  static Op parse(std::string_view text);

  friend bool operator==(const Op&, const Op&) = default;
};

using OpVocab = std::vector<Op>;

/// {+1, +2, +3, *2, *3}
OpVocab default_vocab();

struct Prompt {
  std::int64_t id = 0;
  std::int64_t start = 0;
  std::int64_t target = 0;
  int budget = 1;
  OpVocab op_vocab;
};

/// Throws PreconditionError unless budget >= 1 and the vocab is nonempty and
/// duplicate-free.
void validate(const Prompt& prompt);

struct EnvState {
  std::int64_t prompt_id = 0;
  std::int64_t current = 0;
  int steps_taken = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

EnvState initial_state(const Prompt& prompt);

bool is_terminal(const Prompt& prompt, const EnvState& state);

/// Throws PreconditionError for an out-of-vocab action or a terminal state.
EnvState apply_step(const Prompt& prompt, const EnvState& state, Action action);

/// Replays `steps` from the start state and returns the final state.
EnvState replay(const Prompt& prompt, std::span<const Action> steps);

struct Outcome {
  bool correct = false;
  int steps_used = 0;
};

/// Replays the steps; correct iff the final value equals the target.
/// Throws PreconditionError for |steps| > budget or an invalid action.
Outcome check_answer(const Prompt& prompt, std::span<const Action> steps);

struct Reachability {
  bool reachable = false;
  /// Set only when reachable.
  std::optional<int> min_steps;
};

/// Exact breadth-first search within the state's remaining budget.
Reachability oracle_distance(const Prompt& prompt, const EnvState& state);

struct SynthesisConfig {
  std::int64_t start_min = 1;
  std::int64_t start_max = 5;
  std::int64_t target_min = 6;
  std::int64_t target_max = 30;
  int budget = 4;
  OpVocab op_vocab = default_vocab();
};

inline constexpr int kMaxSynthesisAttempts = 1000;

/// Rejection-samples `count` solvable prompts with ids first_id,
/// first_id+1, ... Deterministic in `seed`. Throws SynthesisError when a
/// prompt cannot be found in kMaxSynthesisAttempts draws.
std::vector<Prompt> synthesize_prompts(std::size_t count,
                                       const SynthesisConfig& config,
                                       std::uint64_t seed,
                                       std::int64_t first_id = 0);

}  // namespace treepref
