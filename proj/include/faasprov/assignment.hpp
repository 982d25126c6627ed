#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace faasprov {

struct Assignment {
  std::vector<std::size_t> row_to_col;
  double cost = 0.0;
};

// Minimum-cost perfect assignment on a square n x n cost matrix (row-major),
// Kuhn-Munkres with potentials, O(n^3). Deterministic for a fixed matrix.
Assignment solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace faasprov
