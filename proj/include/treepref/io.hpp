#pragma once

// JSONL artifact formats. Every reader is strict: a record with a missing,
// mistyped, or unknown field is rejected with the line number. Writers emit
// a canonical form, so read-then-write reproduces a written file exactly.

#include <string>
#include <string_view>
#include <vector>

#include "treepref/env.hpp"
#include "treepref/mcts.hpp"
#include "treepref/pairs.hpp"
#include "treepref/policy.hpp"

namespace treepref {

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// {id, start, target, budget, op_vocab} per line.
std::string prompts_to_jsonl(std::span<const Prompt> prompts);
std::vector<Prompt> prompts_from_jsonl(std::string_view text);

/// Per tree: a header line {prompt_id, config} followed by one line per
/// node {id, parent, action, current, steps_taken, n, w, v_est, terminal}.
std::string trees_to_jsonl(std::span<const SearchTree> trees);
std::vector<SearchTree> trees_from_jsonl(std::string_view text);

/// {prompt_id, kind, gap, winner_steps, loser_steps, winner_value,
/// loser_value} per line. Read-back trajectories are marked complete only
/// for complete pairs.
std::string buffer_to_jsonl(const PairBuffer& buffer);
PairBuffer buffer_from_jsonl(std::string_view text);

/// {feature_dim, vocab_size, checksum, theta} with 17 significant digits
/// per entry, so parameters round-trip bit for bit. The checksum covers the
/// IEEE-754 bit patterns of theta.
std::string policy_to_json(const PolicyParams& params);
PolicyParams policy_from_json(std::string_view text);
std::string policy_checksum(const PolicyParams& params);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace treepref
