// Acceptance suite: one PASS/FAIL line per criterion, exit code = failures.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "h2h/fixtures.hpp"
#include "h2h/mapper.hpp"
#include "h2h/oracle.hpp"

using namespace h2h;
namespace fx = h2h::fixtures;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;
std::size_t validated = 0;    // schedules fed through the independent checker
std::size_t violations = 0;   // checker complaints across the whole suite

void verdict(bool ok, int idx, const char* name, const std::string& detail) {
  std::printf("%s  %d %-18s %s\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
  if (!ok) ++failures;
}

void vcheck(const ModelGraph& g, const SystemSpec& sys, const MappingState& m,
            const Schedule& s) {
  ++validated;
  violations += validate_schedule(g, sys, m, s).size();
}

SystemSpec with_bandwidth(SystemSpec sys, double bw) {
  for (auto& a : sys.accelerators) a.bw_acc = bw;
  return sys;
}

double share(const Schedule& s) {
  const double total = s.compute_seconds + s.comm_seconds;
  return total == 0.0 ? 1.0 : s.compute_seconds / total;
}

// ---- 1: the four steps never lose ground --------------------------------

void criterion_monotone() {
  const auto t0 = Clock::now();
  std::size_t runs = 0, bad = 0;

  auto probe = [&](const ModelGraph& g, const SystemSpec& sys) {
    H2HResult r = run_h2h(g, sys, 4);
    ++runs;
    for (std::size_t i = 1; i < r.steps.size(); ++i)
      if (r.steps[i].sched.sys_latency > r.steps[i - 1].sched.sys_latency) ++bad;
    for (const auto& st : r.steps) vcheck(g, sys, st.state, st.sched);
  };

  probe(fx::toy_two_branch(), fx::toy_system());
  const SystemSpec s12 = fx::system_12();
  for (const auto& nm : fx::mmmt_suite()) probe(nm.graph, s12);
  for (std::uint64_t seed = 0; seed < 500; ++seed)
    probe(fx::random_dag(seed, 2, 100), fx::random_system(seed + 9000, 2, 12));

  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu pipelines, %zu regressions, %.1f s", runs, bad, dt);
  verdict(bad == 0 && dt < 60.0, 1, "monotone steps", buf);
}

// ---- 2: close to the exhaustive optimum, never past it ------------------

void criterion_oracle_gap() {
  const auto t0 = Clock::now();
  std::size_t accepted = 0, within = 0, below = 0;
  double worst = 0.0;

  for (std::uint64_t seed = 0; accepted < 200; ++seed) {
    ModelGraph g = fx::random_dag(seed, 3, 7);
    SystemSpec sys = fx::random_system(seed + 500, 2, 3);
    if (oracle_space(g, sys) > kDefaultOracleBudget) continue;
    ++accepted;
    OracleResult best = exhaustive_map(g, sys);
    H2HResult h = run_h2h(g, sys, 4);
    vcheck(g, sys, best.state, best.sched);
    vcheck(g, sys, h.state, h.sched);
    if (h.sched.sys_latency < best.sched.sys_latency) ++below;
    const double gap = h.sched.sys_latency / best.sched.sys_latency - 1.0;
    worst = std::max(worst, gap);
    if (h.sched.sys_latency <= 1.25 * best.sched.sys_latency) ++within;
  }

  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%zu/%zu within 25%% of optimal, worst +%.1f%%, %zu below, %.1f s",
                within, accepted, 100.0 * worst, below, dt);
  verdict(within >= 180 && below == 0 && dt < 120.0, 2, "oracle gap", buf);
}

// ---- 3: the pinning knapsack is exact -----------------------------------

struct Brute {
  std::vector<double> value;
  std::vector<std::uint64_t> weight;

  KnapsackResult solve(const std::vector<KnapsackItem>& items, std::uint64_t cap) {
    const std::size_t n = items.size();
    const std::uint32_t total = 1u << n;
    if (value.size() < total) {
      value.resize(total);
      weight.resize(total);
    }
    value[0] = 0.0;
    weight[0] = 0;
    for (std::uint32_t mask = 1; mask < total; ++mask) {
      const int low = __builtin_ctz(mask);
      value[mask] = value[mask & (mask - 1)] + items[low].value;
      weight[mask] = weight[mask & (mask - 1)] + items[low].weight;
    }
    std::uint32_t best = 0;
    bool found = false;
    for (std::uint32_t mask = 0; mask < total; ++mask) {
      if (weight[mask] > cap) continue;
      bool take = !found || value[mask] > value[best];
      if (found && value[mask] == value[best] && mask != best) {
        // lex-largest inclusion vector, earliest item most significant
        take = (mask >> __builtin_ctz(mask ^ best)) & 1u;
      }
      if (take) {
        best = mask;
        found = true;
      }
    }
    KnapsackResult r;
    for (std::size_t i = 0; i < n; ++i)
      if ((best >> i) & 1u) r.chosen.push_back(i);
    r.total_value = value[best];
    r.total_weight = weight[best];
    return r;
  }
};

void criterion_knapsack() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  Brute brute;
  std::size_t bad = 0;
  const std::size_t trials = 1000;

  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t n = (t % 7 == 6) ? 15 + rng() % 6 : 1 + rng() % 14;
    const bool huge = (t % 4 == 3);
    std::vector<KnapsackItem> items(n);
    std::uint64_t total = 0;
    for (auto& it : items) {
      it.weight = huge ? 1'000'000'000'000ull + rng() % 999'999'999'937ull : rng() % 64;
      it.value = 0.25 * double(rng() % 48);
      total += it.weight;
    }
    const std::uint64_t cap = rng() % (total + 2);
    KnapsackResult got = solve_knapsack(items, cap);
    KnapsackResult want = brute.solve(items, cap);
    if (got.chosen != want.chosen || got.total_value != want.total_value ||
        got.total_weight != want.total_weight)
      ++bad;
  }

  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu instances, %zu mismatches, %.1f s", trials, bad, dt);
  verdict(bad == 0, 3, "exact knapsack", buf);
}

// ---- 4: incremental rescheduling is bit-identical -----------------------

void note_edge(const ModelGraph& g, std::size_t e, std::vector<std::size_t>& changed) {
  changed.push_back(g.edges()[e].first);
  changed.push_back(g.edges()[e].second);
}

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

bool same_schedule(const ModelGraph& g, const Schedule& a, const Schedule& b) {
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    if (a.scheduled[l] != b.scheduled[l]) return false;
    if (!a.scheduled[l]) continue;
    if (a.start[l] != b.start[l] || a.finish[l] != b.finish[l]) return false;
    if (a.cost[l].total() != b.cost[l].total()) return false;
  }
  return a.sys_latency == b.sys_latency && a.sys_energy == b.sys_energy &&
         a.comm_seconds == b.comm_seconds && a.compute_seconds == b.compute_seconds;
}

void criterion_incremental() {
  const auto t0 = Clock::now();
  std::size_t trials = 0, bad = 0;

  for (std::uint64_t seed = 0; trials < 1000; ++seed) {
    ModelGraph g = fx::random_dag(seed, 5, 25);
    SystemSpec sys = fx::random_system(seed + 4000, 2, 4);
    H2HResult r = run_h2h(g, sys, 3);
    const MappingState base_state = r.state;
    const Schedule base = full_schedule(g, sys, base_state);
    std::mt19937_64 rng(seed * 977 + 13);

    for (int round = 0; round < 8 && trials < 1000; ++round) {
      MappingState m = base_state;
      std::vector<std::size_t> changed;
      const std::size_t l = rng() % g.node_count();
      const int kind = int(rng() % 3);

      if (kind == 0) {
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
      } else if (kind == 1) {
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
      } else {
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

      ++trials;
      Schedule inc = incremental_reschedule(g, sys, m, base, changed);
      Schedule full = full_schedule(g, sys, m);
      if (!same_schedule(g, inc, full)) ++bad;
      vcheck(g, sys, m, inc);
    }
  }

  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu perturbations, %zu mismatches, %.1f s", trials, bad,
                dt);
  verdict(bad == 0, 4, "incremental equal", buf);
}

// ---- 5 and 6: the bandwidth story on the multimodal suite ---------------

void criterion_bandwidth() {
  const auto t0 = Clock::now();
  const double bws[] = {1.25e8, 1.5e8, 2.5e8, 5e8, 1.25e9};
  const SystemSpec s12 = fx::system_12();

  std::size_t trend_ok = 0, in_band = 0, share_ok = 0;
  double lo_min = 1e9, lo_max = -1e9;

  for (const auto& nm : fx::mmmt_suite()) {
    double rel_lo = 0.0, rel_hi = 0.0;
    for (double bw : bws) {
      const SystemSpec sys = with_bandwidth(s12, bw);
      H2HResult r = run_h2h(nm.graph, sys, 4);
      vcheck(nm.graph, sys, r.state, r.sched);
      const double rel = r.sched.sys_latency / r.steps[1].sched.sys_latency;
      if (bw == bws[0]) {
        rel_lo = rel;
        if (share(r.sched) >= share(r.steps[1].sched)) ++share_ok;
      }
      if (bw == bws[4]) rel_hi = rel;
    }
    if (rel_lo <= rel_hi) ++trend_ok;
    const double reduction = 100.0 * (1.0 - rel_lo);
    lo_min = std::min(lo_min, reduction);
    lo_max = std::max(lo_max, reduction);
    if (reduction >= 15.0 && reduction <= 80.0) ++in_band;
  }

  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%zu/6 starved-link trend, %zu/6 cut by 15..80%% (range %.1f..%.1f%%), %.1f s",
                trend_ok, in_band, lo_min, lo_max, dt);
  verdict(trend_ok == 6 && in_band >= 4, 5, "bandwidth sweep", buf);

  char buf2[160];
  std::snprintf(buf2, sizeof buf2, "%zu/6 models lift their compute share at 0.125 GB/s",
                share_ok);
  verdict(share_ok == 6, 6, "compute share", buf2);
}

// ---- 7: a big graph maps fast -------------------------------------------

void criterion_speed() {
  const ModelGraph g = fx::random_dag(7, 141, 141);
  const SystemSpec sys = fx::system_12();
  const auto t0 = Clock::now();
  H2HResult r = run_h2h(g, sys, 4);
  const double dt = seconds_since(t0);
  vcheck(g, sys, r.state, r.sched);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu layers on %zu accelerators in %.2f s", g.node_count(),
                sys.size(), dt);
  verdict(dt <= 10.0, 7, "large graph speed", buf);
}

// ---- 8: dropping and restoring a modality -------------------------------

void criterion_modality() {
  const auto t0 = Clock::now();
  const SystemSpec s12 = fx::system_12();
  std::size_t kept_ok = 0, latency_ok = 0;

  for (const auto& nm : fx::mmmt_suite()) {
    H2HResult cold = run_h2h(nm.graph, s12, 4);
    ModelGraph small = fx::remove_modality(nm.graph, nm.modality_prefix);
    H2HResult dropped = remap_incremental(cold, nm.graph, small, s12, 4);
    H2HResult restored = remap_incremental(dropped, small, nm.graph, s12, 4);
    vcheck(nm.graph, s12, cold.state, cold.sched);
    vcheck(small, s12, dropped.state, dropped.sched);
    vcheck(nm.graph, s12, restored.state, restored.sched);

    bool kept = true;
    for (const auto& n : small.nodes())
      if (dropped.state.assignment[small.index_of(n.id)] !=
          cold.state.assignment[nm.graph.index_of(n.id)])
        kept = false;
    if (kept) ++kept_ok;
    if (restored.sched.sys_latency <= cold.sched.sys_latency) ++latency_ok;
  }

  const double dt = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%zu/6 keep survivor placements, %zu/6 re-add no worse than cold, %.1f s",
                kept_ok, latency_ok, dt);
  verdict(kept_ok == 6 && latency_ok == 6, 8, "modality cycling", buf);
}

}  // namespace

int main() {
  criterion_monotone();
  criterion_oracle_gap();
  criterion_knapsack();
  criterion_incremental();
  criterion_bandwidth();
  criterion_speed();
  criterion_modality();

  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu schedules checked, %zu violations", validated,
                violations);
  verdict(violations == 0, 9, "validator clean", buf);

  std::printf("%d of 9 criteria failed\n", failures);
  return failures;
}
