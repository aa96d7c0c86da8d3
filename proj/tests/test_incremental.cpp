#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>
#include <vector>

#include "h2h/fixtures.hpp"
#include "h2h/mapper.hpp"

using namespace h2h;

namespace {

// Everything whose cost a fusion flip on edge e can touch: both endpoints.
void note_edge(const ModelGraph& g, std::size_t e, std::vector<std::size_t>& changed) {
  changed.push_back(g.edges()[e].first);
  changed.push_back(g.edges()[e].second);
}

// Clears pins and fusions touching l so it can move, keeping the DRAM ledger
// straight and recording every layer whose cost that alters.
void detach(const ModelGraph& g, MappingState& m, std::size_t l,
            std::vector<std::size_t>& changed) {
  if (m.pinned[l]) {
    m.pinned[l] = 0;
    m.dram_used[m.assignment[l]] -= g.node(l).weight_bytes;
    changed.push_back(l);
  }
  for (std::size_t e : g.in_edges(l))
    if (m.fused[e]) {
      m.fused[e] = 0;
      m.dram_used[m.assignment[g.edges()[e].first]] -= g.node(g.edges()[e].first).ofm_bytes;
      note_edge(g, e, changed);
    }
  for (std::size_t e : g.out_edges(l))
    if (m.fused[e]) {
      m.fused[e] = 0;
      m.dram_used[m.assignment[l]] -= g.node(l).ofm_bytes;
      note_edge(g, e, changed);
    }
}

std::size_t chain_successor(const MappingState& m, std::size_t l) {
  const auto& order = m.acc_order[m.assignment[l]];
  auto pos = std::find(order.begin(), order.end(), l);
  if (pos != order.end() && pos + 1 != order.end()) return *(pos + 1);
  return MappingState::kUnassigned;
}

void expect_equal(const ModelGraph& g, const Schedule& inc, const Schedule& full) {
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    REQUIRE(inc.scheduled[l] == full.scheduled[l]);
    REQUIRE(inc.start[l] == full.start[l]);
    REQUIRE(inc.finish[l] == full.finish[l]);
    REQUIRE(inc.cost[l].total() == full.cost[l].total());
  }
  REQUIRE(inc.sys_latency == full.sys_latency);
  REQUIRE(inc.sys_energy == full.sys_energy);
  REQUIRE(inc.comm_seconds == full.comm_seconds);
  REQUIRE(inc.compute_seconds == full.compute_seconds);
}

}  // namespace

TEST_CASE("random perturbations reschedule exactly like a fresh pass") {
  std::size_t trials = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    ModelGraph g = fixtures::random_dag(seed, 5, 25);
    SystemSpec sys = fixtures::random_system(seed + 4000, 2, 4);
    H2HResult r = run_h2h(g, sys, 3);  // pins and fusions to play with
    const MappingState base_state = r.state;
    const Schedule base = full_schedule(g, sys, base_state);
    std::mt19937_64 rng(seed * 977 + 13);

    for (int round = 0; round < 6; ++round) {
      MappingState m = base_state;
      std::vector<std::size_t> changed;
      const std::size_t l = rng() % g.node_count();
      const int kind = int(rng() % 3);

      if (kind == 0) {  // pin flip
        if (m.pinned[l]) {
          m.pinned[l] = 0;
          m.dram_used[m.assignment[l]] -= g.node(l).weight_bytes;
        } else {
          const auto& acc = sys.acc(m.assignment[l]);
          if (m.dram_used[m.assignment[l]] + g.node(l).weight_bytes > acc.m_acc) continue;
          m.pinned[l] = 1;
          m.dram_used[m.assignment[l]] += g.node(l).weight_bytes;
        }
        changed.push_back(l);
      } else if (kind == 1) {  // fusion toggle
        if (g.edge_count() == 0) continue;
        const std::size_t e = rng() % g.edge_count();
        auto [u, v] = g.edges()[e];
        if (m.assignment[u] != m.assignment[v]) continue;
        const std::size_t a = m.assignment[u];
        if (m.fused[e]) {
          m.fused[e] = 0;
          m.dram_used[a] -= g.node(u).ofm_bytes;
        } else {
          if (m.dram_used[a] + g.node(u).ofm_bytes > sys.acc(a).m_acc) continue;
          m.fused[e] = 1;
          m.dram_used[a] += g.node(u).ofm_bytes;
        }
        note_edge(g, e, changed);
      } else {  // move to another supporting accelerator
        const std::size_t target = rng() % sys.size();
        if (target == m.assignment[l]) continue;
        if (!sys.acc(target).supports(g.node(l).kind())) continue;
        detach(g, m, l, changed);
        const std::size_t old_next = chain_successor(m, l);
        m.move(l, target);
        const std::size_t new_next = chain_successor(m, l);
        changed.push_back(l);
        if (old_next != MappingState::kUnassigned) changed.push_back(old_next);
        if (new_next != MappingState::kUnassigned) changed.push_back(new_next);
      }

      REQUIRE(check_mapping_invariants(g, sys, m).empty());
      Schedule inc = incremental_reschedule(g, sys, m, base, changed);
      Schedule full = full_schedule(g, sys, m);
      expect_equal(g, inc, full);
      REQUIRE(validate_schedule(g, sys, m, inc).empty());
      ++trials;
    }
  }
  CHECK(trials > 200);
}

TEST_CASE("a no-op change set leaves the schedule untouched") {
  ModelGraph g = fixtures::random_dag(8, 10, 20);
  SystemSpec sys = fixtures::random_system(4008, 2, 4);
  H2HResult r = run_h2h(g, sys, 3);
  Schedule base = full_schedule(g, sys, r.state);

  Schedule same = incremental_reschedule(g, sys, r.state, base, {});
  expect_equal(g, same, base);

  // listing layers whose cost did not change is harmless too
  Schedule relisted = incremental_reschedule(g, sys, r.state, base, {0, 1ul % g.node_count()});
  expect_equal(g, relisted, base);
}

TEST_CASE("chains of perturbations compose") {
  ModelGraph g = fixtures::random_dag(21, 12, 24);
  SystemSpec sys = fixtures::random_system(4021, 2, 4);
  H2HResult r = run_h2h(g, sys, 3);
  MappingState m = r.state;
  Schedule sched = full_schedule(g, sys, m);
  std::mt19937_64 rng(555);

  int applied = 0;
  for (int round = 0; round < 40; ++round) {
    const std::size_t l = rng() % g.node_count();
    std::vector<std::size_t> changed;
    if (m.pinned[l]) {
      m.pinned[l] = 0;
      m.dram_used[m.assignment[l]] -= g.node(l).weight_bytes;
    } else {
      if (m.dram_used[m.assignment[l]] + g.node(l).weight_bytes >
          sys.acc(m.assignment[l]).m_acc)
        continue;
      m.pinned[l] = 1;
      m.dram_used[m.assignment[l]] += g.node(l).weight_bytes;
    }
    changed.push_back(l);
    sched = incremental_reschedule(g, sys, m, sched, changed);
    ++applied;
  }
  CHECK(applied > 10);
  expect_equal(g, sched, full_schedule(g, sys, m));
}
