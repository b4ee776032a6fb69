#include "treepref/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "treepref/parallel.hpp"

namespace treepref {

std::string to_string(UcbVariant v) { return v == UcbVariant::paper ? "paper" : "uct"; }

UcbVariant parse_ucb_variant(std::string_view text) {
  if (text == "paper") return UcbVariant::paper;
  if (text == "uct") return UcbVariant::uct;
  throw PreconditionError("unknown ucb_variant '" + std::string(text) + "'");
}

void validate(const MctsConfig& config) {
  if (!(config.c_explore >= 0.0) || !std::isfinite(config.c_explore)) {
    throw PreconditionError("c_explore must be a finite value >= 0");
  }
  if (config.num_simulations < 1) throw PreconditionError("num_simulations must be >= 1");
  if (config.max_children < 1) throw PreconditionError("max_children must be >= 1");
}

StepList SearchTree::path_to(NodeId id) const {
  StepList steps;
  for (const TreeNode* n = &node(id); n->parent; n = &node(*n->parent)) {
    steps.push_back(*n->action);
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

Trajectory SearchTree::trajectory_to(NodeId id) const {
  const TreeNode& n = node(id);
  return {prompt_id, path_to(id), n.terminal, n.w};
}

double ucb_score(double w, std::int64_t n, std::int64_t parent_visits, double c_explore,
                 UcbVariant variant) {
  if (n == 0) return std::numeric_limits<double>::infinity();
  if (parent_visits < n) throw PreconditionError("parent visits below child visits");
  const double big_n = static_cast<double>(parent_visits);
  const double small_n = static_cast<double>(n);
  if (variant == UcbVariant::paper) {
    return w + c_explore * std::sqrt(2.0 * std::log(big_n / small_n));
  }
  return w + c_explore * std::sqrt(std::log(big_n) / small_n);
}

void backpropagate(SearchTree& tree, NodeId leaf, double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw PreconditionError("backpropagated value outside [0,1]");
  std::optional<NodeId> id = leaf;
  while (id) {
    TreeNode& node = tree.node(*id);
    node.w = (node.w * static_cast<double>(node.n) + value) / static_cast<double>(node.n + 1);
    ++node.n;
    id = node.parent;
  }
}

namespace {

class Searcher {
 public:
  Searcher(const Prompt& prompt, const PolicyParams& policy, const ValueConfig& value,
           const MctsConfig& config)
      : prompt_(prompt), policy_(policy), value_(value), config_(config), rng_(config.seed) {
    tree_.prompt_id = prompt.id;
    tree_.config = config;
  }

  SearchTree run() {
    const NodeId root = add_node(std::nullopt, std::nullopt, initial_state(prompt_));
    backpropagate(tree_, root, tree_.node(root).v_est);
    if (tree_.node(root).terminal) return std::move(tree_);
    for (int sim = 0; sim < config_.num_simulations; ++sim) simulate();
    return std::move(tree_);
  }

 private:
  NodeId add_node(std::optional<NodeId> parent, std::optional<Action> action, EnvState state) {
    TreeNode node;
    node.id = static_cast<NodeId>(tree_.nodes.size());
    node.parent = parent;
    node.action = action;
    node.state = state;
    node.v_est = state_value(prompt_, state, value_);
    node.terminal = is_terminal(prompt_, state);
    tree_.nodes.push_back(std::move(node));
    return tree_.nodes.back().id;
  }

  NodeId select_child(NodeId id) const {
    const TreeNode& parent = tree_.node(id);
    NodeId best = parent.children.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (NodeId c : parent.children) {
      const TreeNode& child = tree_.node(c);
      const double s =
          ucb_score(child.w, child.n, parent.n, config_.c_explore, config_.ucb_variant);
      if (s > best_score) {  // strict: ties keep the lowest child index
        best_score = s;
        best = c;
      }
    }
    return best;
  }

  void expand(NodeId id) {
    const EnvState state = tree_.node(id).state;
    const StepDistribution dist = step_distribution(policy_, prompt_, state);
    std::discrete_distribution<Action> pick(dist.probs.begin(), dist.probs.end());
    StepList chosen;
    for (int slot = 0; slot < config_.max_children; ++slot) {
      Action a = pick(rng_);
      for (int retry = 0; retry < kDuplicateRetries && contains(chosen, a); ++retry) a = pick(rng_);
      if (!contains(chosen, a)) chosen.push_back(a);
    }
    for (Action a : chosen) {
      const NodeId child = add_node(id, a, apply_step(prompt_, state, a));
      tree_.node(id).children.push_back(child);
    }
  }

  void simulate() {
    NodeId id = 0;
    while (!tree_.node(id).children.empty()) id = select_child(id);
    const TreeNode& leaf = tree_.node(id);
    if (leaf.n > 0 && !leaf.terminal) {
      expand(id);
      id = tree_.node(id).children.front();
    }
    backpropagate(tree_, id, tree_.node(id).v_est);
  }

  static bool contains(const StepList& xs, Action a) {
    return std::find(xs.begin(), xs.end(), a) != xs.end();
  }

  static constexpr int kDuplicateRetries = 10;

  const Prompt& prompt_;
  const PolicyParams& policy_;
  const ValueConfig& value_;
  const MctsConfig& config_;
  Rng rng_;
  SearchTree tree_;
};

}  // namespace

SearchTree run_search(const Prompt& prompt, const PolicyParams& policy, const ValueConfig& value,
                      const MctsConfig& config) {
  validate(prompt);
  validate(value);
  validate(config);
  return Searcher(prompt, policy, value, config).run();
}

std::vector<SearchTree> run_search_batch(std::span<const Prompt> prompts,
                                         const PolicyParams& policy, const ValueConfig& value,
                                         const MctsConfig& config, Exec exec) {
  std::vector<SearchTree> trees(prompts.size());
  parallel_for(prompts.size(), exec, [&](std::size_t i) {
    MctsConfig per_prompt = config;
    per_prompt.seed = derive_seed(config.seed, static_cast<std::uint64_t>(prompts[i].id));
    trees[i] = run_search(prompts[i], policy, value, per_prompt);
  });
  return trees;
}

Trajectory best_trajectory(const SearchTree& tree) {
  std::optional<NodeId> best;
  for (const TreeNode& n : tree.nodes) {
    if (!n.terminal || n.n == 0) continue;
    if (!best || n.w > tree.node(*best).w) best = n.id;
  }
  if (!best) {
    throw NoTrajectoryError("search tree for prompt " + std::to_string(tree.prompt_id) +
                            " has no visited terminal leaf");
  }
  return tree.trajectory_to(*best);
}

}  // namespace treepref
