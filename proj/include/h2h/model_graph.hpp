#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "h2h/errors.hpp"

namespace h2h {

enum class LayerKind { Conv, FC, LSTM };

const char* to_string(LayerKind k);
LayerKind layer_kind_from_string(const std::string& s);

struct ConvParams {
  std::uint64_t out_channels = 1;
  std::uint64_t in_channels = 1;
  std::uint64_t out_h = 1;
  std::uint64_t out_w = 1;
  std::uint64_t kernel = 1;
  std::uint64_t stride = 1;
  bool operator==(const ConvParams&) const = default;
};

struct FcParams {
  std::uint64_t in_features = 1;
  std::uint64_t out_features = 1;
  bool operator==(const FcParams&) const = default;
};

struct LstmParams {
  std::uint64_t input_size = 1;
  std::uint64_t hidden_size = 1;
  std::uint64_t num_layers = 1;
  bool operator==(const LstmParams&) const = default;
};

using LayerParams = std::variant<ConvParams, FcParams, LstmParams>;

LayerKind kind_of(const LayerParams& p);

// Derived sizes in bytes. Conv input uses the full receptive field per
// spatial dim; stacked LSTM layers take the hidden size as their input size.
std::uint64_t weight_bytes_of(const LayerParams& p, std::uint64_t dtype_bytes);
std::uint64_t ifm_bytes_of(const LayerParams& p, std::uint64_t dtype_bytes);
std::uint64_t ofm_bytes_of(const LayerParams& p, std::uint64_t dtype_bytes);

struct LayerNode {
  std::string id;
  LayerParams params;
  std::uint64_t dtype_bytes = 4;

  // Derived on graph construction.
  std::uint64_t weight_bytes = 0;
  std::uint64_t ifm_bytes = 0;
  std::uint64_t ofm_bytes = 0;

  LayerKind kind() const { return kind_of(params); }
};

// Immutable layer-dependency DAG. Nodes are kept sorted by id, edges by
// (src,dst); all indices below refer to those sorted orders.
class ModelGraph {
 public:
  ModelGraph() = default;
  ModelGraph(std::string name, std::vector<LayerNode> nodes,
             std::vector<std::pair<std::string, std::string>> edges);

  const std::string& name() const { return name_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const LayerNode& node(std::size_t i) const { return nodes_[i]; }
  const std::vector<LayerNode>& nodes() const { return nodes_; }
  bool has_node(const std::string& id) const { return index_.count(id) != 0; }
  std::size_t index_of(const std::string& id) const;

  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  const std::vector<std::size_t>& preds(std::size_t i) const { return preds_[i]; }
  const std::vector<std::size_t>& succs(std::size_t i) const { return succs_[i]; }
  const std::vector<std::size_t>& in_edges(std::size_t i) const { return in_edges_[i]; }
  const std::vector<std::size_t>& out_edges(std::size_t i) const { return out_edges_[i]; }

  const std::vector<std::size_t>& entry_nodes() const { return entries_; }
  const std::vector<std::size_t>& exit_nodes() const { return exits_; }
  bool is_exit(std::size_t i) const { return succs_[i].empty(); }

 private:
  std::string name_;
  std::vector<LayerNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
  std::vector<std::vector<std::size_t>> preds_, succs_;
  std::vector<std::vector<std::size_t>> in_edges_, out_edges_;
  std::vector<std::size_t> entries_, exits_;

  void validate_acyclic() const;
};

ModelGraph parse_model(const std::string& text);
ModelGraph load_model(const std::string& path);
std::string serialize_model(const ModelGraph& g);
void save_model(const ModelGraph& g, const std::string& path);

// All nodes not in `done` whose predecessors are all in `done`, ascending by
// id. `done` must be dependency-closed.
std::vector<std::string> frontier(const ModelGraph& g, const std::vector<std::string>& done);

// Kahn's algorithm with the frontier kept sorted by id.
std::vector<std::string> topo_order(const ModelGraph& g);
std::vector<std::size_t> topo_order_indices(const ModelGraph& g);

// Kahn level sets: group k holds the nodes whose predecessors all sit in
// groups < k, each group ascending by id. Concatenated, this is the global
// commitment order the mapper and the oracle share.
std::vector<std::vector<std::size_t>> frontier_groups(const ModelGraph& g);

}  // namespace h2h
