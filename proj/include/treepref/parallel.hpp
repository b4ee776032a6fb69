#pragma once

#include <cstddef>
#include <exception>

#include "treepref/common.hpp"

namespace treepref {

/// Runs fn(i) for i in [0, n). The parallel path is an OpenMP loop; the
/// serial path is the reference. fn must only write to slot i of its
/// outputs. If any iteration throws, the exception from the lowest index is
/// rethrown, which is what the serial loop would have thrown.
template <class Fn>
void parallel_for(std::size_t n, Exec exec, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::size_t first_index = n;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(treepref_parallel_for_error)
      {
        if (static_cast<std::size_t>(i) < first_index) {
          first_index = static_cast<std::size_t>(i);
          first_error = std::current_exception();
        }
      }
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace treepref
