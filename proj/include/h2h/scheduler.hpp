#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2h/model_graph.hpp"
#include "h2h/system_model.hpp"

namespace h2h {

// Layer-to-accelerator assignment plus the bookkeeping the optimization
// steps mutate. acc_order lists are kept sorted by commit_seq; that order is
// what the scheduler executes, it never reorders.
struct MappingState {
  static constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  static constexpr std::uint32_t kNoSeq = std::numeric_limits<std::uint32_t>::max();

  std::vector<std::size_t> assignment;            // per layer: accelerator index
  std::vector<std::vector<std::size_t>> acc_order;  // per accelerator: layer indices
  std::vector<std::uint32_t> commit_seq;          // per layer: global commitment order
  std::vector<char> pinned;                       // per layer: weights resident in local DRAM
  std::vector<char> fused;                        // per edge: activation transfer elided
  std::vector<std::uint64_t> dram_used;           // per accelerator: bytes committed

  static MappingState empty_for(const ModelGraph& g, const SystemSpec& sys);

  bool assigned(std::size_t layer) const { return assignment[layer] != kUnassigned; }
  bool complete() const;
  std::size_t assigned_count() const;

  // Appends `layer` to `acc` with the next commit sequence number.
  void commit(std::size_t layer, std::size_t acc, std::uint32_t seq);
  // Moves `layer` to `acc`, keeping every list sorted by commit_seq.
  void move(std::size_t layer, std::size_t acc);
  // Drops all pins, fusions and DRAM reservations; assignment survives.
  void clear_locality();
};

// Empty list = all invariants hold.
std::vector<std::string> check_mapping_invariants(const ModelGraph& g, const SystemSpec& sys,
                                                  const MappingState& m);

struct Schedule {
  std::vector<char> scheduled;       // per layer
  std::vector<double> start, finish; // seconds; meaningful where scheduled
  std::vector<CostBreakdown> cost;
  double sys_latency = 0.0;
  double sys_energy = 0.0;
  double comm_seconds = 0.0;
  double compute_seconds = 0.0;
};

// Fusion-derived byte reductions for one layer under m. The producer side
// only drops when every consumer edge is fused and the layer is not an exit;
// the host copy is all or nothing.
std::uint64_t fused_input_bytes(const ModelGraph& g, const MappingState& m, std::size_t layer);
std::uint64_t fused_output_bytes(const ModelGraph& g, const MappingState& m, std::size_t layer);
CostBreakdown layer_cost_in_state(const ModelGraph& g, const SystemSpec& sys,
                                  const MappingState& m, std::size_t layer);

// List scheduling over the assigned subset, which must be closed under
// predecessors. Start = max(accelerator free time, producers' finish).
Schedule schedule_assigned(const ModelGraph& g, const SystemSpec& sys, const MappingState& m);

// schedule_assigned with a completeness check.
Schedule full_schedule(const ModelGraph& g, const SystemSpec& sys, const MappingState& m);

// Recomputes only `changed` layers (costs re-derived from m) and whatever
// their time shifts reach via graph or accelerator-order succession. The
// mapping structure must be the one `prev` was computed from; result is
// bit-identical to full_schedule.
Schedule incremental_reschedule(const ModelGraph& g, const SystemSpec& sys,
                                const MappingState& m, const Schedule& prev,
                                const std::vector<std::size_t>& changed);

double system_energy(const ModelGraph& g, const SystemSpec& sys, const MappingState& m,
                     const Schedule& sched);

// Independent checker: dependency ordering over all edges and per-accelerator
// non-overlap in acc_order sequence. Empty list = valid.
std::vector<std::string> validate_schedule(const ModelGraph& g, const SystemSpec& sys,
                                           const MappingState& m, const Schedule& sched);

nlohmann::json gantt_json(const ModelGraph& g, const SystemSpec& sys, const MappingState& m,
                          const Schedule& sched);
nlohmann::json mapping_json(const ModelGraph& g, const SystemSpec& sys, const MappingState& m);

}  // namespace h2h
