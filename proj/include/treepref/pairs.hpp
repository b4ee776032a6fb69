#pragma once

// Preference-pair mining from search trees.
//
// Only visited nodes (n >= 1) take part: an unvisited child has no backed-up
// value yet. Node quality is the backed-up mean w, and every margin test is
// strict (gap > tau).

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treepref/mcts.hpp"
#include "treepref/trajectory.hpp"

namespace treepref {

enum class PairKind { stepwise, complete, depthwise };

std::string to_string(PairKind kind);
PairKind parse_pair_kind(std::string_view text);

struct TrajectoryPair {
  std::int64_t prompt_id = 0;
  Trajectory winner;
  Trajectory loser;
  PairKind kind = PairKind::stepwise;
  double gap = 0.0;

  friend bool operator==(const TrajectoryPair&, const TrajectoryPair&) = default;
};

/// both = stepwise + complete, complete_only = complete pairs alone,
/// depthwise = per-depth max/min pairs.
enum class BufferMode { both, complete_only, depthwise };

std::string to_string(BufferMode mode);
BufferMode parse_buffer_mode(std::string_view text);

/// Ordered pair list with a per-prompt index. A (winner steps, loser steps)
/// combination appears at most once per prompt; the first insertion wins.
class PairBuffer {
 public:
  /// Returns false (and drops the pair) when it duplicates an earlier one.
  bool add(TrajectoryPair pair);

  const std::vector<TrajectoryPair>& pairs() const { return pairs_; }
  const TrajectoryPair& operator[](std::size_t i) const { return pairs_[i]; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }

  /// Pair indices grouped by prompt, prompts ascending, indices in insertion
  /// order.
  const std::map<std::int64_t, std::vector<std::size_t>>& by_prompt() const { return by_prompt_; }

  std::size_t count(PairKind kind) const;

 private:
  std::vector<TrajectoryPair> pairs_;
  std::map<std::int64_t, std::vector<std::size_t>> by_prompt_;
  std::map<std::int64_t, std::map<std::pair<StepList, StepList>, std::size_t>> seen_;
};

/// For every internal node, each unordered pair of visited children whose w
/// differ by more than tau. Children are compared in child-list order.
std::vector<TrajectoryPair> extract_stepwise_pairs(const SearchTree& tree, double tau);

/// Each unordered pair of visited terminal leaves whose w differ by more
/// than tau; leaves are enumerated in node-id order.
std::vector<TrajectoryPair> extract_complete_pairs(const SearchTree& tree, double tau);

/// For each depth >= 1, the max-w node against the min-w node (ties to the
/// lowest id); depths with fewer than two visited nodes or a zero gap are
/// skipped.
std::vector<TrajectoryPair> extract_depthwise_pairs(const SearchTree& tree);

PairBuffer build_buffer(std::span<const SearchTree> trees, double tau, BufferMode mode);

}  // namespace treepref
