#include "h2h/model_graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace h2h {

using nlohmann::json;

const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "Conv";
    case LayerKind::FC: return "FC";
    case LayerKind::LSTM: return "LSTM";
  }
  return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
  if (s == "Conv") return LayerKind::Conv;
  if (s == "FC") return LayerKind::FC;
  if (s == "LSTM") return LayerKind::LSTM;
  throw ParseError("unknown layer kind \"" + s + "\" (expected Conv, FC or LSTM)");
}

LayerKind kind_of(const LayerParams& p) {
  switch (p.index()) {
    case 0: return LayerKind::Conv;
    case 1: return LayerKind::FC;
    default: return LayerKind::LSTM;
  }
}

std::uint64_t weight_bytes_of(const LayerParams& p, std::uint64_t dtype_bytes) {
  if (const auto* c = std::get_if<ConvParams>(&p)) {
    return dtype_bytes * c->out_channels * c->in_channels * c->kernel * c->kernel;
  }
  if (const auto* f = std::get_if<FcParams>(&p)) {
    return dtype_bytes * f->in_features * f->out_features;
  }
  const auto& l = std::get<LstmParams>(p);
  // 4 gate matrices per layer; stacked layers feed on the hidden state.
  const std::uint64_t h = l.hidden_size;
  std::uint64_t total = 4 * (l.input_size * h + h * h + 2 * h);
  if (l.num_layers > 1) total += (l.num_layers - 1) * 4 * (h * h + h * h + 2 * h);
  return dtype_bytes * total;
}

std::uint64_t ifm_bytes_of(const LayerParams& p, std::uint64_t dtype_bytes) {
  if (const auto* c = std::get_if<ConvParams>(&p)) {
    const std::uint64_t ih = (c->out_h - 1) * c->stride + c->kernel;
    const std::uint64_t iw = (c->out_w - 1) * c->stride + c->kernel;
    return dtype_bytes * c->in_channels * ih * iw;
  }
  if (const auto* f = std::get_if<FcParams>(&p)) {
    return dtype_bytes * f->in_features;
  }
  return dtype_bytes * std::get<LstmParams>(p).input_size;
}

std::uint64_t ofm_bytes_of(const LayerParams& p, std::uint64_t dtype_bytes) {
  if (const auto* c = std::get_if<ConvParams>(&p)) {
    return dtype_bytes * c->out_channels * c->out_h * c->out_w;
  }
  if (const auto* f = std::get_if<FcParams>(&p)) {
    return dtype_bytes * f->out_features;
  }
  return dtype_bytes * std::get<LstmParams>(p).hidden_size;
}

namespace {

void check_positive(std::uint64_t v, const std::string& where) {
  if (v == 0) throw ParseError(where + ": must be >= 1");
}

void validate_params(const LayerNode& n) {
  const std::string base = "layer \"" + n.id + "\"";
  check_positive(n.dtype_bytes, base + ".dtype_bytes");
  if (const auto* c = std::get_if<ConvParams>(&n.params)) {
    check_positive(c->out_channels, base + ".params.out_channels");
    check_positive(c->in_channels, base + ".params.in_channels");
    check_positive(c->out_h, base + ".params.out_h");
    check_positive(c->out_w, base + ".params.out_w");
    check_positive(c->kernel, base + ".params.kernel");
    check_positive(c->stride, base + ".params.stride");
  } else if (const auto* f = std::get_if<FcParams>(&n.params)) {
    check_positive(f->in_features, base + ".params.in_features");
    check_positive(f->out_features, base + ".params.out_features");
  } else {
    const auto& l = std::get<LstmParams>(n.params);
    check_positive(l.input_size, base + ".params.input_size");
    check_positive(l.hidden_size, base + ".params.hidden_size");
    check_positive(l.num_layers, base + ".params.num_layers");
  }
}

}  // namespace

ModelGraph::ModelGraph(std::string name, std::vector<LayerNode> nodes,
                       std::vector<std::pair<std::string, std::string>> edges)
    : name_(std::move(name)), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ParseError("model \"" + name_ + "\" has no layers");

  std::sort(nodes_.begin(), nodes_.end(),
            [](const LayerNode& a, const LayerNode& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& n = nodes_[i];
    if (n.id.empty()) throw ParseError("layer with empty id");
    if (!index_.emplace(n.id, i).second) throw ParseError("duplicate layer id \"" + n.id + "\"");
    validate_params(n);
    n.weight_bytes = weight_bytes_of(n.params, n.dtype_bytes);
    n.ifm_bytes = ifm_bytes_of(n.params, n.dtype_bytes);
    n.ofm_bytes = ofm_bytes_of(n.params, n.dtype_bytes);
  }

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [src, dst] : edges) {
    auto si = index_.find(src);
    if (si == index_.end()) throw ParseError("edge references unknown layer \"" + src + "\"");
    auto di = index_.find(dst);
    if (di == index_.end()) throw ParseError("edge references unknown layer \"" + dst + "\"");
    if (si->second == di->second) throw ParseError("self-loop on layer \"" + src + "\"");
    if (!seen.emplace(si->second, di->second).second)
      throw ParseError("duplicate edge " + src + " -> " + dst);
  }
  edges_.assign(seen.begin(), seen.end());

  preds_.resize(nodes_.size());
  succs_.resize(nodes_.size());
  in_edges_.resize(nodes_.size());
  out_edges_.resize(nodes_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    auto [u, v] = edges_[e];
    succs_[u].push_back(v);
    preds_[v].push_back(u);
    out_edges_[u].push_back(e);
    in_edges_[v].push_back(e);
  }

  validate_acyclic();

  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (preds_[i].empty()) entries_.push_back(i);
    if (succs_[i].empty()) exits_.push_back(i);
  }
}

void ModelGraph::validate_acyclic() const {
  std::vector<std::size_t> indeg(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) indeg[i] = preds_[i].size();
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (indeg[i] == 0) q.push(i);
  std::size_t visited = 0;
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    ++visited;
    for (std::size_t v : succs_[u])
      if (--indeg[v] == 0) q.push(v);
  }
  if (visited == nodes_.size()) return;

  // Extract one concrete cycle from the leftover nodes for the diagnostic.
  std::vector<char> leftover(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (indeg[i] > 0) leftover[i] = 1;
  std::size_t cur = 0;
  while (!leftover[cur]) ++cur;
  std::vector<std::size_t> path;
  std::vector<std::size_t> pos(nodes_.size(), SIZE_MAX);
  while (pos[cur] == SIZE_MAX) {
    pos[cur] = path.size();
    path.push_back(cur);
    for (std::size_t v : succs_[cur])
      if (leftover[v]) {
        cur = v;
        break;
      }
  }
  std::ostringstream os;
  os << "cycle detected: ";
  for (std::size_t i = pos[cur]; i < path.size(); ++i) os << nodes_[path[i]].id << " -> ";
  os << nodes_[cur].id;
  throw ParseError(os.str());
}

std::size_t ModelGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw ParseError("unknown layer id \"" + id + "\"");
  return it->second;
}

namespace {

LayerParams params_from_json(const json& j, LayerKind kind, const std::string& where) {
  auto field = [&](const char* name) -> std::uint64_t {
    if (!j.contains(name))
      throw ParseError(where + ": missing field \"" + name + "\"");
    const auto& v = j.at(name);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
      throw ParseError(where + "." + name + ": must be a positive integer");
    return v.get<std::uint64_t>();
  };
  switch (kind) {
    case LayerKind::Conv:
      return ConvParams{field("out_channels"), field("in_channels"), field("out_h"),
                        field("out_w"),        field("kernel"),      field("stride")};
    case LayerKind::FC:
      return FcParams{field("in_features"), field("out_features")};
    case LayerKind::LSTM:
      return LstmParams{field("input_size"), field("hidden_size"), field("num_layers")};
  }
  throw ParseError(where + ": bad kind");
}

json params_to_json(const LayerParams& p) {
  json j;
  if (const auto* c = std::get_if<ConvParams>(&p)) {
    j["out_channels"] = c->out_channels;
    j["in_channels"] = c->in_channels;
    j["out_h"] = c->out_h;
    j["out_w"] = c->out_w;
    j["kernel"] = c->kernel;
    j["stride"] = c->stride;
  } else if (const auto* f = std::get_if<FcParams>(&p)) {
    j["in_features"] = f->in_features;
    j["out_features"] = f->out_features;
  } else {
    const auto& l = std::get<LstmParams>(p);
    j["input_size"] = l.input_size;
    j["hidden_size"] = l.hidden_size;
    j["num_layers"] = l.num_layers;
  }
  return j;
}

}  // namespace

ModelGraph parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model document: expected a JSON object");
  if (!doc.contains("layers") || !doc.at("layers").is_array())
    throw ParseError("model document: missing \"layers\" array");

  std::string name = doc.value("name", "");
  std::vector<LayerNode> nodes;
  std::size_t li = 0;
  for (const auto& jl : doc.at("layers")) {
    const std::string where = "layers[" + std::to_string(li++) + "]";
    if (!jl.is_object()) throw ParseError(where + ": expected an object");
    if (!jl.contains("id") || !jl.at("id").is_string())
      throw ParseError(where + ": missing string field \"id\"");
    if (!jl.contains("kind") || !jl.at("kind").is_string())
      throw ParseError(where + ": missing string field \"kind\"");
    LayerNode n;
    n.id = jl.at("id").get<std::string>();
    LayerKind kind = layer_kind_from_string(jl.at("kind").get<std::string>());
    if (!jl.contains("params") || !jl.at("params").is_object())
      throw ParseError(where + ": missing object field \"params\"");
    n.params = params_from_json(jl.at("params"), kind, where + ".params");
    n.dtype_bytes = 4;
    if (jl.contains("dtype_bytes")) {
      const auto& v = jl.at("dtype_bytes");
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
        throw ParseError(where + ".dtype_bytes: must be a positive integer");
      n.dtype_bytes = v.get<std::uint64_t>();
    }
    nodes.push_back(std::move(n));
  }

  std::vector<std::pair<std::string, std::string>> edges;
  if (doc.contains("edges")) {
    if (!doc.at("edges").is_array()) throw ParseError("model document: \"edges\" must be an array");
    std::size_t ei = 0;
    for (const auto& je : doc.at("edges")) {
      const std::string where = "edges[" + std::to_string(ei++) + "]";
      if (!je.is_array() || je.size() != 2 || !je[0].is_string() || !je[1].is_string())
        throw ParseError(where + ": expected [\"src\", \"dst\"]");
      edges.emplace_back(je[0].get<std::string>(), je[1].get<std::string>());
    }
  }
  return ModelGraph(std::move(name), std::move(nodes), std::move(edges));
}

ModelGraph load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file \"" + path + "\"");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

std::string serialize_model(const ModelGraph& g) {
  json doc;
  doc["name"] = g.name();
  json layers = json::array();
  for (const auto& n : g.nodes()) {
    json jl;
    jl["id"] = n.id;
    jl["kind"] = to_string(n.kind());
    jl["params"] = params_to_json(n.params);
    jl["dtype_bytes"] = n.dtype_bytes;
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  json edges = json::array();
  for (const auto& [u, v] : g.edges())
    edges.push_back(json::array({g.node(u).id, g.node(v).id}));
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

void save_model(const ModelGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file \"" + path + "\"");
  out << serialize_model(g);
}

std::vector<std::string> frontier(const ModelGraph& g, const std::vector<std::string>& done) {
  std::vector<char> in_done(g.node_count(), 0);
  for (const auto& id : done) in_done[g.index_of(id)] = 1;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (!in_done[i]) continue;
    for (std::size_t p : g.preds(i))
      if (!in_done[p])
        throw InvariantError("done set is not dependency-closed: \"" + g.node(i).id +
                             "\" is done but its predecessor \"" + g.node(p).id + "\" is not");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (in_done[i]) continue;
    bool ready = true;
    for (std::size_t p : g.preds(i))
      if (!in_done[p]) {
        ready = false;
        break;
      }
    if (ready) out.push_back(g.node(i).id);
  }
  return out;  // nodes are id-sorted, so this is ascending by id
}

std::vector<std::size_t> topo_order_indices(const ModelGraph& g) {
  std::vector<std::size_t> indeg(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) indeg[i] = g.preds(i).size();
  // Min-heap on node index == ascending id, since nodes are id-sorted.
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> q;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (indeg[i] == 0) q.push(i);
  std::vector<std::size_t> order;
  order.reserve(g.node_count());
  while (!q.empty()) {
    std::size_t u = q.top();
    q.pop();
    order.push_back(u);
    for (std::size_t v : g.succs(u))
      if (--indeg[v] == 0) q.push(v);
  }
  return order;
}

std::vector<std::string> topo_order(const ModelGraph& g) {
  std::vector<std::string> out;
  out.reserve(g.node_count());
  for (std::size_t i : topo_order_indices(g)) out.push_back(g.node(i).id);
  return out;
}

std::vector<std::vector<std::size_t>> frontier_groups(const ModelGraph& g) {
  std::vector<std::size_t> indeg(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i) indeg[i] = g.preds(i).size();
  std::vector<std::size_t> level;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (indeg[i] == 0) level.push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  while (!level.empty()) {
    std::sort(level.begin(), level.end());
    std::vector<std::size_t> next;
    for (std::size_t u : level)
      for (std::size_t v : g.succs(u))
        if (--indeg[v] == 0) next.push_back(v);
    groups.push_back(std::move(level));
    level = std::move(next);
  }
  return groups;
}

}  // namespace h2h
