#pragma once

#include <cstdint>

#include "h2h/mapper.hpp"

namespace h2h {

inline constexpr std::uint64_t kDefaultOracleBudget = 1'000'000;

struct OracleResult {
  MappingState state;
  Schedule sched;
  std::uint64_t candidates = 0;
};

// Number of assignments in which every layer sits on a supporting
// accelerator, times the number of commitment orders when those are
// enumerated too. Counting stops early once past `cap`; any value above the
// cap means "at least this many".
std::uint64_t oracle_space(const ModelGraph& g, const SystemSpec& sys,
                           bool enumerate_orderings = false,
                           std::uint64_t cap = kDefaultOracleBudget);

// Evaluates every feasible assignment and keeps the lowest-latency one
// (first in enumeration order on ties, which is the lexicographically
// smallest assignment vector). With locality, each candidate goes through
// weight pinning and fusion first, the same pipeline the heuristic uses.
// Commitment order is the canonical one unless orderings are enumerated.
// Refuses up front when the space exceeds the budget.
OracleResult exhaustive_map(const ModelGraph& g, const SystemSpec& sys,
                            bool with_locality = true,
                            std::uint64_t budget = kDefaultOracleBudget,
                            bool enumerate_orderings = false);

// Single-threaded reference; produces the identical result.
OracleResult exhaustive_map_serial(const ModelGraph& g, const SystemSpec& sys,
                                   bool with_locality = true,
                                   std::uint64_t budget = kDefaultOracleBudget,
                                   bool enumerate_orderings = false);

}  // namespace h2h
