#include "h2h/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace h2h {

using nlohmann::json;

MappingState MappingState::empty_for(const ModelGraph& g, const SystemSpec& sys) {
  MappingState m;
  m.assignment.assign(g.node_count(), kUnassigned);
  m.acc_order.assign(sys.size(), {});
  m.commit_seq.assign(g.node_count(), kNoSeq);
  m.pinned.assign(g.node_count(), 0);
  m.fused.assign(g.edge_count(), 0);
  m.dram_used.assign(sys.size(), 0);
  return m;
}

bool MappingState::complete() const {
  for (std::size_t a : assignment)
    if (a == kUnassigned) return false;
  return true;
}

std::size_t MappingState::assigned_count() const {
  std::size_t n = 0;
  for (std::size_t a : assignment)
    if (a != kUnassigned) ++n;
  return n;
}

void MappingState::commit(std::size_t layer, std::size_t acc, std::uint32_t seq) {
  assignment[layer] = acc;
  commit_seq[layer] = seq;
  acc_order[acc].push_back(layer);
}

void MappingState::move(std::size_t layer, std::size_t acc) {
  const std::size_t from = assignment[layer];
  auto& src = acc_order[from];
  src.erase(std::find(src.begin(), src.end(), layer));
  auto& dst = acc_order[acc];
  auto pos = std::lower_bound(dst.begin(), dst.end(), layer,
                              [&](std::size_t a, std::size_t b) {
                                return commit_seq[a] < commit_seq[b];
                              });
  dst.insert(pos, layer);
  assignment[layer] = acc;
}

void MappingState::clear_locality() {
  std::fill(pinned.begin(), pinned.end(), 0);
  std::fill(fused.begin(), fused.end(), 0);
  std::fill(dram_used.begin(), dram_used.end(), 0);
}

std::vector<std::string> check_mapping_invariants(const ModelGraph& g, const SystemSpec& sys,
                                                  const MappingState& m) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& s) { bad.push_back(s); };

  if (m.assignment.size() != g.node_count() || m.pinned.size() != g.node_count() ||
      m.fused.size() != g.edge_count() || m.acc_order.size() != sys.size() ||
      m.dram_used.size() != sys.size()) {
    fail("state vectors do not match graph/system dimensions");
    return bad;
  }

  std::vector<std::size_t> seen(g.node_count(), 0);
  for (std::size_t a = 0; a < sys.size(); ++a) {
    const auto& order = m.acc_order[a];
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::size_t l = order[i];
      ++seen[l];
      if (m.assignment[l] != a)
        fail("layer \"" + g.node(l).id + "\" listed on accelerator \"" + sys.acc(a).id +
             "\" but assigned elsewhere");
      if (m.commit_seq[l] == MappingState::kNoSeq)
        fail("layer \"" + g.node(l).id + "\" ordered but never committed");
      if (i > 0 && m.commit_seq[order[i - 1]] >= m.commit_seq[l])
        fail("acc_order of \"" + sys.acc(a).id + "\" not in commitment order");
    }
  }
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    const bool assigned = m.assignment[l] != MappingState::kUnassigned;
    if (assigned && seen[l] != 1)
      fail("layer \"" + g.node(l).id + "\" appears " + std::to_string(seen[l]) +
           " times in acc_order lists");
    if (!assigned && seen[l] != 0)
      fail("unassigned layer \"" + g.node(l).id + "\" present in an acc_order list");
    if (m.pinned[l] && !assigned) fail("pinned layer \"" + g.node(l).id + "\" is unassigned");
  }

  std::vector<std::uint64_t> expect(sys.size(), 0);
  for (std::size_t l = 0; l < g.node_count(); ++l)
    if (m.pinned[l]) expect[m.assignment[l]] += g.node(l).weight_bytes;
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (!m.fused[e]) continue;
    auto [u, v] = g.edges()[e];
    if (m.assignment[u] == MappingState::kUnassigned || m.assignment[u] != m.assignment[v]) {
      fail("fused edge " + g.node(u).id + " -> " + g.node(v).id +
           " endpoints not co-located");
      continue;
    }
    expect[m.assignment[u]] += g.node(u).ofm_bytes;
  }
  for (std::size_t a = 0; a < sys.size(); ++a) {
    if (expect[a] != m.dram_used[a])
      fail("dram_used of \"" + sys.acc(a).id + "\" is " + std::to_string(m.dram_used[a]) +
           ", expected " + std::to_string(expect[a]));
    if (m.dram_used[a] > sys.acc(a).m_acc)
      fail("dram_used of \"" + sys.acc(a).id + "\" exceeds capacity");
  }
  return bad;
}

std::uint64_t fused_input_bytes(const ModelGraph& g, const MappingState& m, std::size_t layer) {
  std::uint64_t sum = 0;
  for (std::size_t e : g.in_edges(layer))
    if (m.fused[e]) sum += g.node(g.edges()[e].first).ofm_bytes;
  return std::min(sum, g.node(layer).ifm_bytes);
}

std::uint64_t fused_output_bytes(const ModelGraph& g, const MappingState& m, std::size_t layer) {
  if (g.is_exit(layer)) return 0;
  for (std::size_t e : g.out_edges(layer))
    if (!m.fused[e]) return 0;
  return g.node(layer).ofm_bytes;
}

CostBreakdown layer_cost_in_state(const ModelGraph& g, const SystemSpec& sys,
                                  const MappingState& m, std::size_t layer) {
  const std::size_t a = m.assignment[layer];
  if (a == MappingState::kUnassigned)
    throw InvariantError("cost requested for unassigned layer \"" + g.node(layer).id + "\"");
  return layer_cost(sys.acc(a), g.node(layer), m.pinned[layer] != 0,
                    fused_input_bytes(g, m, layer), fused_output_bytes(g, m, layer));
}

namespace {

// Position of each layer in its accelerator list, or kUnassigned.
std::vector<std::size_t> acc_positions(const ModelGraph& g, const MappingState& m) {
  std::vector<std::size_t> pos(g.node_count(), MappingState::kUnassigned);
  for (const auto& order : m.acc_order)
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  return pos;
}

void finalize_rollups(const ModelGraph& g, const SystemSpec& sys, const MappingState& m,
                      Schedule& s) {
  s.sys_latency = 0.0;
  s.comm_seconds = 0.0;
  s.compute_seconds = 0.0;
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    if (!s.scheduled[l]) continue;
    s.sys_latency = std::max(s.sys_latency, s.finish[l]);
    s.comm_seconds += s.cost[l].comm();
    s.compute_seconds += s.cost[l].compute;
  }
  s.sys_energy = system_energy(g, sys, m, s);
}

}  // namespace

Schedule schedule_assigned(const ModelGraph& g, const SystemSpec& sys, const MappingState& m) {
  const std::size_t n = g.node_count();
  Schedule s;
  s.scheduled.assign(n, 0);
  s.start.assign(n, -1.0);
  s.finish.assign(n, -1.0);
  s.cost.assign(n, {});

  for (std::size_t l = 0; l < n; ++l) {
    if (!m.assigned(l)) continue;
    s.scheduled[l] = 1;
    for (std::size_t p : g.preds(l))
      if (!m.assigned(p))
        throw InvariantError("assigned layer \"" + g.node(l).id +
                             "\" depends on unassigned \"" + g.node(p).id + "\"");
    s.cost[l] = layer_cost_in_state(g, sys, m, l);
  }

  // Union of dependency edges and per-accelerator succession; list-schedule
  // by relaxation over that DAG.
  std::vector<std::size_t> indeg(n, 0);
  for (auto [u, v] : g.edges())
    if (m.assigned(u) && m.assigned(v)) ++indeg[v];
  const auto pos = acc_positions(g, m);
  for (const auto& order : m.acc_order)
    for (std::size_t i = 1; i < order.size(); ++i) ++indeg[order[i]];

  std::queue<std::size_t> q;
  for (std::size_t l = 0; l < n; ++l)
    if (m.assigned(l) && indeg[l] == 0) q.push(l);
  std::size_t processed = 0;
  while (!q.empty()) {
    const std::size_t l = q.front();
    q.pop();
    ++processed;
    double start = 0.0;
    for (std::size_t p : g.preds(l)) start = std::max(start, s.finish[p]);
    const auto& order = m.acc_order[m.assignment[l]];
    if (pos[l] > 0) start = std::max(start, s.finish[order[pos[l] - 1]]);
    s.start[l] = start;
    s.finish[l] = start + s.cost[l].total();
    for (std::size_t v : g.succs(l))
      if (m.assigned(v) && --indeg[v] == 0) q.push(v);
    if (pos[l] + 1 < order.size()) {
      const std::size_t nxt = order[pos[l] + 1];
      if (--indeg[nxt] == 0) q.push(nxt);
    }
  }
  if (processed != m.assigned_count())
    throw InvariantError("accelerator order conflicts with layer dependencies (cyclic)");

  finalize_rollups(g, sys, m, s);
  return s;
}

Schedule full_schedule(const ModelGraph& g, const SystemSpec& sys, const MappingState& m) {
  if (!m.complete()) throw InvariantError("full_schedule requires a complete assignment");
  return schedule_assigned(g, sys, m);
}

Schedule incremental_reschedule(const ModelGraph& g, const SystemSpec& sys,
                                const MappingState& m, const Schedule& prev,
                                const std::vector<std::size_t>& changed) {
  Schedule s = prev;
  if (changed.empty()) return s;

  const std::size_t n = g.node_count();
  const auto pos = acc_positions(g, m);

  // Topological ranks over the union DAG, so each touched node is finalized
  // once, after every neighbor that can influence it.
  std::vector<std::size_t> indeg(n, 0);
  for (auto [u, v] : g.edges())
    if (m.assigned(u) && m.assigned(v)) ++indeg[v];
  for (const auto& order : m.acc_order)
    for (std::size_t i = 1; i < order.size(); ++i) ++indeg[order[i]];
  std::vector<std::size_t> rank(n, 0);
  {
    std::queue<std::size_t> q;
    for (std::size_t l = 0; l < n; ++l)
      if (m.assigned(l) && indeg[l] == 0) q.push(l);
    std::size_t r = 0, processed = 0;
    while (!q.empty()) {
      std::size_t l = q.front();
      q.pop();
      rank[l] = r++;
      ++processed;
      for (std::size_t v : g.succs(l))
        if (m.assigned(v) && --indeg[v] == 0) q.push(v);
      const auto& order = m.acc_order[m.assignment[l]];
      if (pos[l] + 1 < order.size() && --indeg[order[pos[l] + 1]] == 0) q.push(order[pos[l] + 1]);
    }
    if (processed != m.assigned_count())
      throw InvariantError("accelerator order conflicts with layer dependencies (cyclic)");
  }

  using Entry = std::pair<std::size_t, std::size_t>;  // (rank, layer)
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  std::vector<char> queued(n, 0);
  auto push = [&](std::size_t l) {
    if (!queued[l] && m.assigned(l)) {
      queued[l] = 1;
      heap.emplace(rank[l], l);
    }
  };
  for (std::size_t l : changed) {
    if (!m.assigned(l))
      throw InvariantError("changed layer \"" + g.node(l).id + "\" is unassigned");
    s.cost[l] = layer_cost_in_state(g, sys, m, l);
    push(l);
  }

  while (!heap.empty()) {
    const std::size_t l = heap.top().second;
    heap.pop();
    double start = 0.0;
    for (std::size_t p : g.preds(l)) start = std::max(start, s.finish[p]);
    const auto& order = m.acc_order[m.assignment[l]];
    if (pos[l] > 0) start = std::max(start, s.finish[order[pos[l] - 1]]);
    const double finish = start + s.cost[l].total();
    const bool moved = start != s.start[l] || finish != s.finish[l];
    s.start[l] = start;
    s.finish[l] = finish;
    if (moved) {
      for (std::size_t v : g.succs(l)) push(v);
      if (pos[l] + 1 < order.size()) push(order[pos[l] + 1]);
    }
  }

  finalize_rollups(g, sys, m, s);
  return s;
}

double system_energy(const ModelGraph& g, const SystemSpec& sys, const MappingState& m,
                     const Schedule& sched) {
  double total = 0.0;
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    if (!sched.scheduled[l]) continue;
    const auto& acc = sys.acc(m.assignment[l]);
    const auto& node = g.node(l);
    total += acc.perf_model->energy_j(node.kind(), node.params, acc.energy_per_mac);
    std::uint64_t bytes = m.pinned[l] ? 0 : node.weight_bytes;
    bytes += node.ifm_bytes - fused_input_bytes(g, m, l);
    bytes += node.ofm_bytes - fused_output_bytes(g, m, l);
    total += static_cast<double>(bytes) * acc.energy_per_byte;
  }
  return total;
}

std::vector<std::string> validate_schedule(const ModelGraph& g, const SystemSpec& sys,
                                           const MappingState& m, const Schedule& sched) {
  std::vector<std::string> bad;
  auto fail = [&](const std::string& s) { bad.push_back(s); };

  for (std::size_t l = 0; l < g.node_count(); ++l) {
    if (static_cast<bool>(sched.scheduled[l]) != m.assigned(l))
      fail("scheduled flags do not match assignment for \"" + g.node(l).id + "\"");
    if (sched.scheduled[l] && sched.finish[l] < sched.start[l])
      fail("negative duration on \"" + g.node(l).id + "\"");
  }
  for (auto [u, v] : g.edges()) {
    if (!sched.scheduled[u] || !sched.scheduled[v]) continue;
    if (sched.start[v] < sched.finish[u])
      fail("dependency violated: \"" + g.node(v).id + "\" starts before \"" + g.node(u).id +
           "\" finishes");
  }
  for (std::size_t a = 0; a < sys.size(); ++a) {
    const auto& order = m.acc_order[a];
    for (std::size_t i = 1; i < order.size(); ++i) {
      if (sched.start[order[i]] < sched.finish[order[i - 1]])
        fail("overlap on \"" + sys.acc(a).id + "\": \"" + g.node(order[i]).id +
             "\" starts before \"" + g.node(order[i - 1]).id + "\" finishes");
    }
  }
  double latest = 0.0;
  for (std::size_t l = 0; l < g.node_count(); ++l)
    if (sched.scheduled[l]) latest = std::max(latest, sched.finish[l]);
  if (latest != sched.sys_latency) fail("sys_latency does not equal the last finish time");
  return bad;
}

json gantt_json(const ModelGraph& g, const SystemSpec& sys, const MappingState& m,
                const Schedule& sched) {
  json doc;
  json accs = json::array();
  for (std::size_t a = 0; a < sys.size(); ++a) {
    json ja;
    ja["id"] = sys.acc(a).id;
    json entries = json::array();
    for (std::size_t l : m.acc_order[a]) {
      json e;
      e["layer"] = g.node(l).id;
      e["start"] = sched.start[l];
      e["finish"] = sched.finish[l];
      e["breakdown"] = {{"weight_xfer", sched.cost[l].weight_xfer},
                        {"input_xfer", sched.cost[l].input_xfer},
                        {"compute", sched.cost[l].compute},
                        {"output_xfer", sched.cost[l].output_xfer}};
      entries.push_back(std::move(e));
    }
    ja["entries"] = std::move(entries);
    accs.push_back(std::move(ja));
  }
  doc["accelerators"] = std::move(accs);
  doc["summary"] = {{"sys_latency", sched.sys_latency},
                    {"sys_energy", sched.sys_energy},
                    {"comm_seconds", sched.comm_seconds},
                    {"compute_seconds", sched.compute_seconds}};
  return doc;
}

json mapping_json(const ModelGraph& g, const SystemSpec& sys, const MappingState& m) {
  json doc;
  json assign = json::object();
  for (std::size_t l = 0; l < g.node_count(); ++l)
    if (m.assigned(l)) assign[g.node(l).id] = sys.acc(m.assignment[l]).id;
  doc["assignment"] = std::move(assign);
  json order = json::object();
  for (std::size_t a = 0; a < sys.size(); ++a) {
    json ids = json::array();
    for (std::size_t l : m.acc_order[a]) ids.push_back(g.node(l).id);
    order[sys.acc(a).id] = std::move(ids);
  }
  doc["acc_order"] = std::move(order);
  json pinned = json::array();
  for (std::size_t l = 0; l < g.node_count(); ++l)
    if (m.pinned[l]) pinned.push_back(g.node(l).id);
  doc["pinned"] = std::move(pinned);
  json fused = json::array();
  for (std::size_t e = 0; e < g.edge_count(); ++e)
    if (m.fused[e])
      fused.push_back(json::array({g.node(g.edges()[e].first).id, g.node(g.edges()[e].second).id}));
  doc["fused_edges"] = std::move(fused);
  json dram = json::object();
  for (std::size_t a = 0; a < sys.size(); ++a) dram[sys.acc(a).id] = m.dram_used[a];
  doc["dram_used"] = std::move(dram);
  return doc;
}

}  // namespace h2h
