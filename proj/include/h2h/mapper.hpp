#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "h2h/scheduler.hpp"

namespace h2h {

// 0/1 knapsack. Values are seconds saved, weights are DRAM bytes.
struct KnapsackItem {
  std::size_t layer = 0;
  std::uint64_t weight = 0;
  double value = 0.0;
};

struct KnapsackResult {
  std::vector<std::size_t> chosen;  // indices into the item list, ascending
  double total_value = 0.0;
  std::uint64_t total_weight = 0;
};

// Exact when the instance is small enough (gcd-scaled table, or
// branch-and-bound up to 26 items); otherwise weights are rounded up onto a
// 2^20-unit grid, which stays capacity-safe. Ties prefer including
// earlier items.
KnapsackResult solve_knapsack(const std::vector<KnapsackItem>& items, std::uint64_t capacity);

// Variant with mandatory items. If the mandatory set alone overflows the
// capacity, lowest-value mandatory items are evicted until it fits; the
// remaining capacity is optimized over the free items.
KnapsackResult solve_knapsack_forced(const std::vector<KnapsackItem>& items,
                                     std::uint64_t capacity,
                                     const std::vector<char>& mandatory);

// Commitment order used everywhere: frontier groups in sequence, ids
// ascending inside each group. Depends on the graph only.
std::vector<std::uint32_t> canonical_commit_seq(const ModelGraph& g);

struct MapConstraints {
  // Layers whose placement is not negotiable (incremental remapping).
  // fixed[l] implies seed_assignment[l] names a valid accelerator.
  std::vector<char> fixed;
  std::vector<std::size_t> seed_assignment;
  // Layers whose weights must stay resident where they are.
  std::vector<char> must_pin;

  bool empty() const { return fixed.empty() && must_pin.empty(); }
  bool is_fixed(std::size_t l) const { return !fixed.empty() && fixed[l]; }
  bool is_must_pin(std::size_t l) const { return !must_pin.empty() && must_pin[l]; }
};

// Step 1: commit frontier groups in order, jointly enumerating placements of
// up to 4096 combinations per chunk and keeping the one with the smallest
// resulting makespan. No weights pinned, no fusion.
MappingState computation_prioritized_mapping(const ModelGraph& g, const SystemSpec& sys,
                                             const MapConstraints& cons = {});

// Step 2: per accelerator, pin the weight set that saves the most transfer
// time subject to DRAM capacity.
void weight_locality_opt(const ModelGraph& g, const SystemSpec& sys, MappingState& m,
                         const MapConstraints& cons = {});

// Step 3: fuse producer/consumer edges that landed on one accelerator,
// reserving the activation in DRAM, while capacity allows.
void activation_transfer_opt(const ModelGraph& g, const SystemSpec& sys, MappingState& m);

// Rebuild a full state from a bare assignment and rerun steps 2 and 3.
std::pair<MappingState, Schedule> candidate_pipeline(const ModelGraph& g, const SystemSpec& sys,
                                                     const std::vector<std::size_t>& assignment,
                                                     const MapConstraints& cons = {});

// Same, reusing a precomputed commitment order.
std::pair<MappingState, Schedule> candidate_pipeline(const ModelGraph& g, const SystemSpec& sys,
                                                     const std::vector<std::size_t>& assignment,
                                                     const std::vector<std::uint32_t>& commit_seq,
                                                     const MapConstraints& cons = {});

struct RemapRecord {
  std::size_t layer = 0;
  std::size_t from_acc = 0;
  std::size_t to_acc = 0;
  double latency_before = 0.0;
  double latency_after = 0.0;
};

// Step 4: try moving each layer next to a graph neighbour, keeping a move
// only when the end-to-end latency strictly improves. Repeats until a full
// sweep changes nothing.
std::vector<RemapRecord> data_locality_remapping(const ModelGraph& g, const SystemSpec& sys,
                                                 MappingState& m, Schedule& sched,
                                                 const MapConstraints& cons = {});

struct StepSnapshot {
  std::string name;
  MappingState state;
  Schedule sched;
};

struct H2HResult {
  MappingState state;
  Schedule sched;
  std::vector<StepSnapshot> steps;
  std::vector<RemapRecord> remaps;
  double search_seconds = 0.0;
};

// Runs steps 1..steps (1 to 4) and snapshots after each.
H2HResult run_h2h(const ModelGraph& g, const SystemSpec& sys, int steps = 4,
                  const MapConstraints& cons = {});

// Stops after weight locality; the reference point for improvement numbers.
H2HResult run_baseline(const ModelGraph& g, const SystemSpec& sys);

// Remap after the model changed. Layers surviving from the previous graph
// keep their accelerator; their pinned weights stay resident and are treated
// as mandatory when capacity is re-optimized. A surviving id whose
// definition changed is an error.
H2HResult remap_incremental(const H2HResult& prev, const ModelGraph& g_prev,
                            const ModelGraph& g_new, const SystemSpec& sys, int steps = 4);

}  // namespace h2h
