#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <random>
#include <vector>

#include "h2h/mapper.hpp"

using namespace h2h;

namespace {

KnapsackItem it(std::uint64_t w, double v) {
  KnapsackItem k;
  k.weight = w;
  k.value = v;
  return k;
}

// Reference solver: best value, ties broken toward the lexicographically
// largest inclusion vector (item 0 most significant), i.e. earlier items in.
KnapsackResult brute_force(const std::vector<KnapsackItem>& items, std::uint64_t capacity) {
  const std::size_t n = items.size();
  REQUIRE(n <= 20);
  KnapsackResult best;
  bool found = false;
  std::vector<char> best_in, in(n, 0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::uint64_t w = 0;
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      in[i] = (mask >> i) & 1u;
      if (in[i]) {
        w += items[i].weight;
        v += items[i].value;
      }
    }
    if (w > capacity) continue;
    bool better = !found || v > best.total_value;
    if (found && v == best.total_value) {
      for (std::size_t i = 0; i < n; ++i) {
        if (in[i] != best_in[i]) {
          better = in[i];
          break;
        }
      }
    }
    if (better) {
      found = true;
      best.total_value = v;
      best.total_weight = w;
      best_in = in;
    }
  }
  best.chosen.clear();
  for (std::size_t i = 0; i < n; ++i)
    if (best_in[i]) best.chosen.push_back(i);
  return best;
}

void check_same(const KnapsackResult& got, const KnapsackResult& want) {
  CHECK(got.chosen == want.chosen);
  CHECK(got.total_value == want.total_value);
  CHECK(got.total_weight == want.total_weight);
}

}  // namespace

TEST_CASE("textbook instance") {
  std::vector<KnapsackItem> items = {it(3, 3.0), it(4, 4.0), it(5, 5.0)};
  KnapsackResult r = solve_knapsack(items, 7);
  CHECK(r.chosen == std::vector<std::size_t>{0, 1});
  CHECK(r.total_value == 7.0);
  CHECK(r.total_weight == 7);
}

TEST_CASE("ties go to the earlier item") {
  std::vector<KnapsackItem> items = {it(2, 2.0), it(2, 2.0)};
  KnapsackResult r = solve_knapsack(items, 2);
  CHECK(r.chosen == std::vector<std::size_t>{0});
}

TEST_CASE("degenerate inputs") {
  CHECK(solve_knapsack({}, 10).chosen.empty());

  std::vector<KnapsackItem> items = {it(1, 1.0), it(2, 5.0)};
  KnapsackResult r = solve_knapsack(items, 0);
  CHECK(r.chosen.empty());
  CHECK(r.total_value == 0.0);

  // plenty of room: everything goes in
  r = solve_knapsack(items, 1000);
  CHECK(r.chosen == std::vector<std::size_t>{0, 1});
  CHECK(r.total_weight == 3);
}

TEST_CASE("forced items are kept while they fit") {
  std::vector<KnapsackItem> items = {it(5, 1.0), it(5, 10.0), it(5, 1.0)};

  SUBCASE("mandatory set fits, rest optimized") {
    KnapsackResult r = solve_knapsack_forced(items, 10, {0, 1, 0});
    CHECK(r.total_weight == 10);
    bool has1 = false;
    for (std::size_t i : r.chosen) has1 |= (i == 1);
    CHECK(has1);
    CHECK(r.chosen.size() == 2);
  }

  SUBCASE("overflow evicts the lowest value, later index first") {
    KnapsackResult r = solve_knapsack_forced(items, 10, {1, 1, 1});
    CHECK(r.chosen == std::vector<std::size_t>{0, 1});
    CHECK(r.total_weight == 10);
  }

  SUBCASE("a single oversized mandatory item is dropped") {
    KnapsackResult r = solve_knapsack_forced({it(100, 3.0)}, 10, {1});
    CHECK(r.chosen.empty());
  }

  SUBCASE("no mandatory flags behaves like the plain solver") {
    KnapsackResult a = solve_knapsack_forced(items, 10, {0, 0, 0});
    KnapsackResult b = solve_knapsack(items, 10);
    check_same(a, b);
  }
}

TEST_CASE("matches brute force on small random instances") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<KnapsackItem> items;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t w = rng() % 50;           // zero weights included
      double v = 0.25 * double(rng() % 40);   // exact quarter values, zeros included
      items.push_back(it(w, v));
      total += w;
    }
    const std::uint64_t cap = rng() % (total + 2);
    check_same(solve_knapsack(items, cap), brute_force(items, cap));
  }
}

TEST_CASE("matches brute force when weights are too big for a table") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<KnapsackItem> items;
    for (std::size_t i = 0; i < n; ++i) {
      // ragged 12-digit weights: no useful gcd, table would be enormous
      std::uint64_t w = 1'000'000'000'000ull + rng() % 999'999'999'937ull;
      items.push_back(it(w, 0.25 * double(rng() % 40)));
    }
    const std::uint64_t cap = (1 + rng() % n) * 1'500'000'000'000ull;
    check_same(solve_knapsack(items, cap), brute_force(items, cap));
  }
}

TEST_CASE("oversize instances stay capacity-safe") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<KnapsackItem> items;
    for (std::size_t i = 0; i < 40; ++i) {
      std::uint64_t w = 1'000'000'000'000ull + rng() % 999'999'999'937ull;
      items.push_back(it(w, 1.0 + double(rng() % 10)));
    }
    const std::uint64_t cap = 20'000'000'000'000ull;
    KnapsackResult r = solve_knapsack(items, cap);
    CHECK(r.total_weight <= cap);
    CHECK(!r.chosen.empty());  // ~13 items fit even in the worst case
    std::uint64_t w = 0;
    double v = 0.0;
    for (std::size_t i = 0; i < r.chosen.size(); ++i) {
      if (i > 0) CHECK(r.chosen[i - 1] < r.chosen[i]);
      w += items[r.chosen[i]].weight;
      v += items[r.chosen[i]].value;
    }
    CHECK(w == r.total_weight);
    CHECK(v == doctest::Approx(r.total_value));
  }
}

TEST_CASE("solver is deterministic") {
  std::mt19937_64 rng(5);
  std::vector<KnapsackItem> items;
  for (std::size_t i = 0; i < 18; ++i) items.push_back(it(rng() % 100, double(rng() % 20)));
  KnapsackResult a = solve_knapsack(items, 300);
  KnapsackResult b = solve_knapsack(items, 300);
  check_same(a, b);
}
