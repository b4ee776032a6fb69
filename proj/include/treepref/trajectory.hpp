#pragma once

#include <cstdint>

#include "treepref/common.hpp"

namespace treepref {

/// A step sequence for one prompt. Partial trajectories (complete == false)
/// come from interior search-tree nodes.
struct Trajectory {
  std::int64_t prompt_id = 0;
  StepList steps;
  bool complete = false;
  /// Backed-up mean value of the node the trajectory ends at.
  double value = 0.0;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

}  // namespace treepref
