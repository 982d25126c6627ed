#include "faasprov/assignment.hpp"

#include <limits>

#include "faasprov/error.hpp"

namespace faasprov {

Assignment solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment matrix is not n x n");
  }
  Assignment out;
  if (n == 0) return out;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  auto at = [&](std::size_t r, std::size_t c) { return cost[(r - 1) * n + (c - 1)]; };

  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<bool> used(n + 1, false);
    do {
      used[col0] = true;
      const std::size_t r0 = match[col0];
      double delta = kInf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = at(r0, c) - u[r0] - v[c];
        if (reduced < minv[c]) {
          minv[c] = reduced;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    // Augment along the alternating path.
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  out.row_to_col.assign(n, 0);
  for (std::size_t c = 1; c <= n; ++c) out.row_to_col[match[c] - 1] = c - 1;
  // Sum the chosen entries directly rather than trusting the potentials, so
  // integer-valued matrices give exact integer costs.
  for (std::size_t r = 0; r < n; ++r) out.cost += cost[r * n + out.row_to_col[r]];
  return out;
}

}  // namespace faasprov
