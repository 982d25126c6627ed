#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "faasprov/assignment.hpp"

using namespace faasprov;

namespace {

double brute_force(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += cost[i * n + perm[i]];
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("assignment on a hand-checked 3x3 matrix") {
  // rows pick columns 1, 0, 2: 1 + 2 + 2 = 5
  const std::vector<double> cost{4, 1, 3,
                                 2, 0, 5,
                                 3, 2, 2};
  const auto a = solve_assignment(cost, 3);
  CHECK(a.cost == doctest::Approx(5));
  CHECK(a.row_to_col == std::vector<std::size_t>{1, 0, 2});
}

TEST_CASE("assignment of size zero and one") {
  CHECK(solve_assignment({}, 0).cost == 0.0);
  const std::vector<double> one{3.5};
  const auto a = solve_assignment(one, 1);
  CHECK(a.cost == 3.5);
  CHECK(a.row_to_col == std::vector<std::size_t>{0});
}

TEST_CASE("assignment matches exhaustive search on random matrices") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> small(0, 6);
  std::uniform_real_distribution<double> real(0.0, 10.0);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + t % 6;
    std::vector<double> cost(n * n);
    // integer costs make ties common
    for (auto& c : cost) c = (t % 2) ? small(rng) : real(rng);
    const auto a = solve_assignment(cost, n);
    CHECK(a.cost == doctest::Approx(brute_force(cost, n)).epsilon(1e-12));

    std::vector<std::size_t> cols = a.row_to_col;
    std::sort(cols.begin(), cols.end());
    for (std::size_t i = 0; i < n; ++i) CHECK(cols[i] == i);
    double check = 0.0;
    for (std::size_t i = 0; i < n; ++i) check += cost[i * n + a.row_to_col[i]];
    CHECK(check == doctest::Approx(a.cost));
  }
}

TEST_CASE("assignment is deterministic") {
  const std::vector<double> cost{1, 1, 1, 1, 1, 1, 1, 1, 1};
  const auto a = solve_assignment(cost, 3);
  const auto b = solve_assignment(cost, 3);
  CHECK(a.row_to_col == b.row_to_col);
  CHECK(a.cost == 3);
}
