#include "treepref/env.hpp"

#include <charconv>
#include <unordered_set>

namespace treepref {

std::optional<std::int64_t> Op::try_apply(std::int64_t x) const {
  std::int64_t out = 0;
  const bool overflow = kind == Kind::add
                            ? __builtin_add_overflow(x, operand, &out)
                            : __builtin_mul_overflow(x, operand, &out);
  if (overflow) return std::nullopt;
  return out;
}

std::string Op::to_string() const {
  if (kind == Kind::mul) return "*" + std::to_string(operand);
  return (operand < 0 ? "" : "+") + std::to_string(operand);
}

Op Op::parse(std::string_view text) {
  if (text.size() < 2) throw PreconditionError("bad op '" + std::string(text) + "'");
  Op op;
  std::string_view digits = text.substr(1);
  switch (text.front()) {
    case '+': op.kind = Kind::add; break;
    case '*': op.kind = Kind::mul; break;
    case '-': op.kind = Kind::add; digits = text; break;
    default: throw PreconditionError("bad op '" + std::string(text) + "'");
  }
  const auto* end = digits.data() + digits.size();
  auto [ptr, ec] = std::from_chars(digits.data(), end, op.operand);
  if (ec != std::errc() || ptr != end) {
    throw PreconditionError("bad op '" + std::string(text) + "'");
  }
  // Canonical spelling only, so serialization round-trips byte for byte.
  if (op.to_string() != text) {
    throw PreconditionError("non-canonical op '" + std::string(text) + "'");
  }
  return op;
}

OpVocab default_vocab() {
  using K = Op::Kind;
  return {{K::add, 1}, {K::add, 2}, {K::add, 3}, {K::mul, 2}, {K::mul, 3}};
}

void validate(const Prompt& prompt) {
  if (prompt.budget < 1) throw PreconditionError("prompt budget must be >= 1");
  if (prompt.op_vocab.empty()) throw PreconditionError("op vocabulary is empty");
  for (std::size_t i = 0; i < prompt.op_vocab.size(); ++i) {
    for (std::size_t j = i + 1; j < prompt.op_vocab.size(); ++j) {
      if (prompt.op_vocab[i] == prompt.op_vocab[j]) {
        throw PreconditionError("duplicate op " + prompt.op_vocab[i].to_string());
      }
    }
  }
}

EnvState initial_state(const Prompt& prompt) {
  return {prompt.id, prompt.start, 0};
}

bool is_terminal(const Prompt& prompt, const EnvState& state) {
  return state.current == prompt.target || state.steps_taken >= prompt.budget;
}

EnvState apply_step(const Prompt& prompt, const EnvState& state, Action action) {
  if (action < 0 || static_cast<std::size_t>(action) >= prompt.op_vocab.size()) {
    throw PreconditionError("action " + std::to_string(action) + " outside vocab of size " +
                            std::to_string(prompt.op_vocab.size()));
  }
  if (is_terminal(prompt, state)) {
    throw PreconditionError("step applied to a terminal state");
  }
  auto next = prompt.op_vocab[static_cast<std::size_t>(action)].try_apply(state.current);
  if (!next) throw NumericError("integer overflow applying op");
  return {state.prompt_id, *next, state.steps_taken + 1};
}

EnvState replay(const Prompt& prompt, std::span<const Action> steps) {
  EnvState s = initial_state(prompt);
  for (Action a : steps) s = apply_step(prompt, s, a);
  return s;
}

Outcome check_answer(const Prompt& prompt, std::span<const Action> steps) {
  if (steps.size() > static_cast<std::size_t>(prompt.budget)) {
    throw PreconditionError("more steps than the budget allows");
  }
  const EnvState s = replay(prompt, steps);
  return {s.current == prompt.target, s.steps_taken};
}

Reachability oracle_distance(const Prompt& prompt, const EnvState& state) {
  if (state.current == prompt.target) return {true, 0};
  const int remaining = prompt.budget - state.steps_taken;
  std::vector<std::int64_t> frontier{state.current};
  std::unordered_set<std::int64_t> seen{state.current};
  for (int depth = 1; depth <= remaining && !frontier.empty(); ++depth) {
    std::vector<std::int64_t> next;
    for (std::int64_t x : frontier) {
      for (const Op& op : prompt.op_vocab) {
        auto y = op.try_apply(x);
        if (!y) continue;
        if (*y == prompt.target) return {true, depth};
        if (seen.insert(*y).second) next.push_back(*y);
      }
    }
    frontier = std::move(next);
  }
  return {false, std::nullopt};
}

std::vector<Prompt> synthesize_prompts(std::size_t count, const SynthesisConfig& config,
                                       std::uint64_t seed, std::int64_t first_id) {
  if (count == 0) throw PreconditionError("prompt count must be >= 1");
  if (config.start_min > config.start_max || config.target_min > config.target_max) {
    throw PreconditionError("empty start or target range");
  }
  if (config.budget < 1) throw PreconditionError("budget must be >= 1");

  Rng rng(seed);
  std::uniform_int_distribution<std::int64_t> start_dist(config.start_min, config.start_max);
  std::uniform_int_distribution<std::int64_t> target_dist(config.target_min, config.target_max);

  std::vector<Prompt> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Prompt p;
    p.id = first_id + static_cast<std::int64_t>(i);
    p.budget = config.budget;
    p.op_vocab = config.op_vocab;
    validate(p);
    bool found = false;
    for (int attempt = 0; attempt < kMaxSynthesisAttempts && !found; ++attempt) {
      p.start = start_dist(rng);
      p.target = target_dist(rng);
      found = oracle_distance(p, initial_state(p)).reachable;
    }
    if (!found) {
      throw SynthesisError("no solvable prompt found in " +
                           std::to_string(kMaxSynthesisAttempts) +
                           " draws; widen the ranges or raise the budget");
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace treepref
