#pragma once

// Per-prompt Monte Carlo tree search guided by the value model only: UCB
// selection, policy-sampled expansion, value-model evaluation at the new
// node, and running-mean backpropagation. There is no rollout phase.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treepref/env.hpp"
#include "treepref/policy.hpp"
#include "treepref/trajectory.hpp"
#include "treepref/value.hpp"

namespace treepref {

class NoTrajectoryError : public Error {
 public:
  using Error::Error;
};

/// `paper`: w + C * sqrt(2 ln(N / n)).  `uct`: w + C * sqrt(ln N / n).
enum class UcbVariant { paper, uct };

std::string to_string(UcbVariant v);
UcbVariant parse_ucb_variant(std::string_view text);

struct MctsConfig {
  double c_explore = 1.0;
  int num_simulations = 64;
  int max_children = 4;
  std::uint64_t seed = 0;
  UcbVariant ucb_variant = UcbVariant::paper;

  friend bool operator==(const MctsConfig&, const MctsConfig&) = default;
};

void validate(const MctsConfig& config);

using NodeId = std::int32_t;

struct TreeNode {
  NodeId id = 0;
  std::optional<NodeId> parent;
  std::optional<Action> action;
  EnvState state;
  std::int64_t n = 0;
  /// Running mean of backed-up values; meaningful once n >= 1.
  double w = 0.0;
  double v_est = 0.0;
  std::vector<NodeId> children;
  bool terminal = false;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Nodes are stored by id; node 0 is the root.
struct SearchTree {
  std::int64_t prompt_id = 0;
  MctsConfig config;
  std::vector<TreeNode> nodes;

  const TreeNode& node(NodeId id) const { return nodes.at(static_cast<std::size_t>(id)); }
  TreeNode& node(NodeId id) { return nodes.at(static_cast<std::size_t>(id)); }

  /// Actions along the root-to-node path.
  StepList path_to(NodeId id) const;
  /// Root-to-node trajectory carrying the node's w and terminal flag.
  Trajectory trajectory_to(NodeId id) const;

  friend bool operator==(const SearchTree&, const SearchTree&) = default;
};

/// +infinity when n == 0 (unvisited children are expanded first).
double ucb_score(double w, std::int64_t n, std::int64_t parent_visits, double c_explore,
                 UcbVariant variant = UcbVariant::paper);

/// For the leaf and each ancestor: w <- (w n + value) / (n + 1), n <- n + 1.
void backpropagate(SearchTree& tree, NodeId leaf, double value);

/// Runs exactly config.num_simulations select/expand/evaluate/backprop
/// iterations. The root receives one initial evaluation before the first
/// simulation, so afterwards every internal node has n == 1 + sum(child n).
/// A terminal root yields a single-node tree.
SearchTree run_search(const Prompt& prompt, const PolicyParams& policy, const ValueConfig& value,
                      const MctsConfig& config);

/// Searches every prompt with seed derive_seed(config.seed, prompt.id).
/// The parallel path fans out across prompts with OpenMP.
std::vector<SearchTree> run_search_batch(std::span<const Prompt> prompts,
                                         const PolicyParams& policy, const ValueConfig& value,
                                         const MctsConfig& config, Exec exec = Exec::parallel);

/// Root-to-leaf path to the visited terminal leaf with the largest w, ties to
/// the lowest node id. Throws NoTrajectoryError when no terminal leaf has
/// been visited.
Trajectory best_trajectory(const SearchTree& tree);

}  // namespace treepref
