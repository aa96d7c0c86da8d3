#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "h2h/model_graph.hpp"
#include "h2h/system_model.hpp"

// Shipped inputs. All numbers here are synthetic: sized to behave like the
// published workload class they are named after, not measurements of any
// real accelerator or network.
namespace h2h::fixtures {

// Six-layer two-branch graph on a two-accelerator system; small enough to
// brute-force, and built so the remapping step fires.
ModelGraph toy_two_branch();
SystemSpec toy_system();

struct NamedModel {
  std::string name;
  ModelGraph graph;
  std::string modality_prefix;  // subgraph used in modality add/remove runs
};

// Six multi-backbone graphs with cross-talk edges; parameter totals sit
// within 2x of {192M, 13.2M, 365M, 25M, 16M, 8M}.
const std::vector<NamedModel>& mmmt_suite();

// Twelve accelerators: seven Conv-only, two Conv/FC/LSTM, one FC/LSTM, two
// LSTM-only. DRAM 512 MB to 8 GB, host links default to 1.25 GB/s.
SystemSpec system_12();

ModelGraph random_dag(std::uint64_t seed, std::size_t min_nodes, std::size_t max_nodes);
SystemSpec random_system(std::uint64_t seed, std::size_t min_accs, std::size_t max_accs);

// Drops every layer whose id starts with `prefix`, with its edges.
ModelGraph remove_modality(const ModelGraph& g, const std::string& prefix);

}  // namespace h2h::fixtures
