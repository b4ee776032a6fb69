#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "treepref/env.hpp"
#include "treepref/mcts.hpp"

namespace treepref::testing {

inline Prompt make_prompt(std::int64_t start, std::int64_t target, int budget,
                          OpVocab vocab = default_vocab(), std::int64_t id = 0) {
  Prompt p;
  p.id = id;
  p.start = start;
  p.target = target;
  p.budget = budget;
  p.op_vocab = std::move(vocab);
  return p;
}

inline OpVocab vocab(std::initializer_list<const char*> ops) {
  OpVocab v;
  for (const char* o : ops) v.push_back(Op::parse(o));
  return v;
}

/// Tree with arbitrary shape and statistics, not produced by a search.
/// Depth <= max_depth, branching <= max_branch; w values lie on a 0.05 grid
/// so gaps sit exactly on typical margins; some nodes stay unvisited and
/// some leaves are terminal.
inline SearchTree random_tree(std::mt19937_64& rng, std::int64_t prompt_id, int max_depth = 5,
                              int max_branch = 4) {
  std::uniform_int_distribution<int> branch(0, max_branch);
  std::uniform_int_distribution<int> grid(0, 20);
  std::uniform_int_distribution<int> coin(0, 3);
  SearchTree t;
  t.prompt_id = prompt_id;
  TreeNode root;
  root.n = 1;
  root.w = grid(rng) * 0.05;
  t.nodes.push_back(root);
  std::vector<NodeId> frontier{0};
  while (!frontier.empty()) {
    const NodeId id = frontier.back();
    frontier.pop_back();
    const int depth = t.node(id).state.steps_taken;
    const int kids = depth >= max_depth || t.node(id).n == 0 ? 0 : branch(rng);
    for (int k = 0; k < kids; ++k) {
      TreeNode c;
      c.id = static_cast<NodeId>(t.nodes.size());
      c.parent = id;
      c.action = k;
      c.state.prompt_id = prompt_id;
      c.state.steps_taken = depth + 1;
      c.state.current = c.id;
      c.n = coin(rng) == 0 ? 0 : 1 + coin(rng);
      c.w = grid(rng) * 0.05;
      c.v_est = c.w;
      t.node(id).children.push_back(c.id);
      t.nodes.push_back(c);
      frontier.push_back(c.id);
    }
  }
  for (TreeNode& n : t.nodes) {
    if (n.children.empty() && n.id != 0) n.terminal = coin(rng) != 0;
  }
  return t;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)});
}

}  // namespace treepref::testing
