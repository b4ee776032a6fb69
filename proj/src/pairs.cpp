#include "treepref/pairs.hpp"

#include <cmath>

namespace treepref {

std::string to_string(PairKind kind) {
  switch (kind) {
    case PairKind::stepwise: return "stepwise";
    case PairKind::complete: return "complete";
    case PairKind::depthwise: return "depthwise";
  }
  return "?";
}

PairKind parse_pair_kind(std::string_view text) {
  if (text == "stepwise") return PairKind::stepwise;
  if (text == "complete") return PairKind::complete;
  if (text == "depthwise") return PairKind::depthwise;
  throw PreconditionError("unknown pair kind '" + std::string(text) + "'");
}

std::string to_string(BufferMode mode) {
  switch (mode) {
    case BufferMode::both: return "both";
    case BufferMode::complete_only: return "complete_only";
    case BufferMode::depthwise: return "depthwise";
  }
  return "?";
}

BufferMode parse_buffer_mode(std::string_view text) {
  if (text == "both") return BufferMode::both;
  if (text == "complete_only") return BufferMode::complete_only;
  if (text == "depthwise") return BufferMode::depthwise;
  throw PreconditionError("unknown buffer mode '" + std::string(text) + "'");
}

bool PairBuffer::add(TrajectoryPair pair) {
  auto& seen = seen_[pair.prompt_id];
  auto key = std::make_pair(pair.winner.steps, pair.loser.steps);
  if (seen.contains(key)) return false;
  const std::size_t index = pairs_.size();
  seen.emplace(std::move(key), index);
  by_prompt_[pair.prompt_id].push_back(index);
  pairs_.push_back(std::move(pair));
  return true;
}

std::size_t PairBuffer::count(PairKind kind) const {
  std::size_t c = 0;
  for (const auto& p : pairs_) c += p.kind == kind ? 1 : 0;
  return c;
}

namespace {

TrajectoryPair make_pair(const SearchTree& tree, NodeId a, NodeId b, PairKind kind) {
  if (tree.node(a).w < tree.node(b).w) std::swap(a, b);
  TrajectoryPair p;
  p.prompt_id = tree.prompt_id;
  p.winner = tree.trajectory_to(a);
  p.loser = tree.trajectory_to(b);
  p.kind = kind;
  p.gap = p.winner.value - p.loser.value;
  return p;
}

void check_tau(double tau) {
  if (!(tau > 0.0)) throw PreconditionError("tau must be > 0");
}

}  // namespace

std::vector<TrajectoryPair> extract_stepwise_pairs(const SearchTree& tree, double tau) {
  check_tau(tau);
  std::vector<TrajectoryPair> out;
  for (const TreeNode& parent : tree.nodes) {
    const auto& kids = parent.children;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const TreeNode& a = tree.node(kids[i]);
      if (a.n == 0) continue;
      for (std::size_t j = i + 1; j < kids.size(); ++j) {
        const TreeNode& b = tree.node(kids[j]);
        if (b.n == 0) continue;
        if (std::abs(a.w - b.w) > tau) {
          out.push_back(make_pair(tree, a.id, b.id, PairKind::stepwise));
        }
      }
    }
  }
  return out;
}

std::vector<TrajectoryPair> extract_complete_pairs(const SearchTree& tree, double tau) {
  check_tau(tau);
  std::vector<NodeId> leaves;
  for (const TreeNode& n : tree.nodes) {
    if (n.terminal && n.n > 0) leaves.push_back(n.id);
  }
  std::vector<TrajectoryPair> out;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      if (std::abs(tree.node(leaves[i]).w - tree.node(leaves[j]).w) > tau) {
        out.push_back(make_pair(tree, leaves[i], leaves[j], PairKind::complete));
      }
    }
  }
  return out;
}

std::vector<TrajectoryPair> extract_depthwise_pairs(const SearchTree& tree) {
  struct Extremes {
    std::optional<NodeId> hi, lo;
    int count = 0;
  };
  std::map<int, Extremes> by_depth;
  for (const TreeNode& n : tree.nodes) {
    const int depth = n.state.steps_taken;
    if (depth < 1 || n.n == 0) continue;
    Extremes& e = by_depth[depth];
    ++e.count;
    if (!e.hi || n.w > tree.node(*e.hi).w) e.hi = n.id;
    if (!e.lo || n.w < tree.node(*e.lo).w) e.lo = n.id;
  }
  std::vector<TrajectoryPair> out;
  for (const auto& [depth, e] : by_depth) {
    if (e.count < 2) continue;
    if (!(tree.node(*e.hi).w > tree.node(*e.lo).w)) continue;
    out.push_back(make_pair(tree, *e.hi, *e.lo, PairKind::depthwise));
  }
  return out;
}

PairBuffer build_buffer(std::span<const SearchTree> trees, double tau, BufferMode mode) {
  check_tau(tau);
  PairBuffer buffer;
  for (const SearchTree& tree : trees) {
    std::vector<TrajectoryPair> extracted;
    switch (mode) {
      case BufferMode::both:
        extracted = extract_stepwise_pairs(tree, tau);
        for (auto& p : extract_complete_pairs(tree, tau)) extracted.push_back(std::move(p));
        break;
      case BufferMode::complete_only:
        extracted = extract_complete_pairs(tree, tau);
        break;
      case BufferMode::depthwise:
        extracted = extract_depthwise_pairs(tree);
        break;
    }
    for (auto& p : extracted) buffer.add(std::move(p));
  }
  return buffer;
}

}  // namespace treepref
