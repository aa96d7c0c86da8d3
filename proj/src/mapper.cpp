#include "h2h/mapper.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <numeric>

#include "h2h/parallel.hpp"

namespace h2h {

namespace {

constexpr std::uint64_t kEnumCap = 4096;
constexpr double kImproveEps = 1e-12;
constexpr std::uint64_t kDpCellCap = 40'000'000;
constexpr std::uint64_t kDpRowCap = 4'000'000;
constexpr std::size_t kBnbMaxItems = 26;
constexpr std::uint64_t kQuantUnits = 1u << 20;

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b
             ? std::numeric_limits<std::uint64_t>::max()
             : a + b;
}

// Suffix-value DP with a keep table; forward reconstruction prefers
// including earlier items whenever that loses nothing.
std::vector<std::size_t> dp_solve(const std::vector<std::uint64_t>& w,
                                  const std::vector<double>& v, std::uint64_t cap) {
  const std::size_t n = w.size();
  const std::size_t C = static_cast<std::size_t>(cap);
  std::vector<double> next(C + 1, 0.0), cur(C + 1, 0.0);
  std::vector<char> keep(n * (C + 1), 0);
  for (std::size_t i = n; i-- > 0;) {
    char* row = keep.data() + i * (C + 1);
    for (std::size_t c = 0; c <= C; ++c) {
      double best = next[c];
      if (w[i] <= c) {
        const double with = v[i] + next[c - w[i]];
        if (with >= best) {
          best = with;
          row[c] = 1;
        }
      }
      cur[c] = best;
    }
    std::swap(cur, next);
  }
  std::vector<std::size_t> chosen;
  std::size_t c = C;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i * (C + 1) + c]) {
      chosen.push_back(i);
      c -= w[i];
    }
  return chosen;
}

// Include-first depth-first search; the first optimum found has the
// lexicographically largest inclusion pattern, and equal-value completions
// are pruned, so that one is kept.
std::vector<std::size_t> bnb_solve(const std::vector<std::uint64_t>& w,
                                   const std::vector<double>& v, std::uint64_t cap) {
  const std::size_t n = w.size();
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + v[i];
  std::vector<char> cur(n, 0), best(n, 0);
  double best_v = -1.0;
  std::function<void(std::size_t, std::uint64_t, double)> go = [&](std::size_t i,
                                                                   std::uint64_t left,
                                                                   double val) {
    if (val + suffix[i] <= best_v) return;
    if (i == n) {
      best_v = val;
      best = cur;
      return;
    }
    if (w[i] <= left) {
      cur[i] = 1;
      go(i + 1, left - w[i], val + v[i]);
      cur[i] = 0;
    }
    go(i + 1, left, val);
  };
  go(0, cap, 0.0);
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < n; ++i)
    if (best[i]) chosen.push_back(i);
  return chosen;
}

KnapsackResult assemble(const std::vector<KnapsackItem>& items, std::vector<std::size_t> chosen) {
  std::sort(chosen.begin(), chosen.end());
  KnapsackResult r;
  r.chosen = std::move(chosen);
  for (std::size_t i : r.chosen) {
    r.total_value += items[i].value;
    r.total_weight += items[i].weight;
  }
  return r;
}

}  // namespace

KnapsackResult solve_knapsack(const std::vector<KnapsackItem>& items, std::uint64_t capacity) {
  std::vector<std::size_t> picked;   // zero-weight items cost nothing
  std::vector<std::size_t> idx;
  std::vector<std::uint64_t> w;
  std::vector<double> v;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].weight == 0) {
      picked.push_back(i);
      continue;
    }
    if (items[i].weight > capacity) continue;
    idx.push_back(i);
    w.push_back(items[i].weight);
    v.push_back(items[i].value);
    total = sat_add(total, items[i].weight);
  }

  std::vector<std::size_t> sub;
  if (total <= capacity) {
    sub.resize(idx.size());
    std::iota(sub.begin(), sub.end(), 0);
  } else {
    std::uint64_t g = 0;
    for (std::uint64_t x : w) g = std::gcd(g, x);
    std::vector<std::uint64_t> ws(w);
    for (auto& x : ws) x /= g;
    const std::uint64_t cap_s = capacity / g;
    const std::uint64_t n64 = ws.size();
    if (cap_s + 1 <= kDpRowCap && n64 * (cap_s + 1) <= kDpCellCap) {
      sub = dp_solve(ws, v, cap_s);
    } else if (ws.size() <= kBnbMaxItems) {
      sub = bnb_solve(ws, v, cap_s);
    } else {
      // Round weights up onto a coarse grid; stays within capacity.
      const std::uint64_t target =
          std::min(kQuantUnits, std::max<std::uint64_t>(kDpCellCap / n64, 2));
      const std::uint64_t q = capacity / (target - 1) + 1;
      std::vector<std::uint64_t> wq(w);
      for (auto& x : wq) x = (x + q - 1) / q;
      sub = dp_solve(wq, v, capacity / q);
    }
  }
  for (std::size_t j : sub) picked.push_back(idx[j]);
  return assemble(items, std::move(picked));
}

KnapsackResult solve_knapsack_forced(const std::vector<KnapsackItem>& items,
                                     std::uint64_t capacity,
                                     const std::vector<char>& mandatory) {
  std::vector<char> kept(items.size(), 0);
  std::uint64_t mand_w = 0;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (mandatory[i]) {
      kept[i] = 1;
      mand_w = sat_add(mand_w, items[i].weight);
    }
  while (mand_w > capacity) {
    std::size_t victim = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!kept[i]) continue;
      if (victim == items.size() || items[i].value <= items[victim].value) victim = i;
    }
    kept[victim] = 0;
    mand_w -= items[victim].weight;
  }

  std::vector<std::size_t> free_idx;
  std::vector<KnapsackItem> free_items;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!kept[i]) {
      free_idx.push_back(i);
      free_items.push_back(items[i]);
    }
  const KnapsackResult sub = solve_knapsack(free_items, capacity - mand_w);

  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (kept[i]) chosen.push_back(i);
  for (std::size_t j : sub.chosen) chosen.push_back(free_idx[j]);
  return assemble(items, std::move(chosen));
}

std::vector<std::uint32_t> canonical_commit_seq(const ModelGraph& g) {
  std::vector<std::uint32_t> seq(g.node_count(), MappingState::kNoSeq);
  std::uint32_t s = 0;
  for (const auto& group : frontier_groups(g))
    for (std::size_t l : group) seq[l] = s++;
  return seq;
}

namespace {

std::vector<std::vector<std::size_t>> allowed_accs(const ModelGraph& g, const SystemSpec& sys) {
  std::vector<std::vector<std::size_t>> allowed(g.node_count());
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    const LayerKind kind = g.node(l).kind();
    for (std::size_t a = 0; a < sys.size(); ++a)
      if (sys.acc(a).supports(kind)) allowed[l].push_back(a);
    if (allowed[l].empty())
      throw UnsupportedLayerError("no accelerator supports layer \"" + g.node(l).id + "\"");
  }
  return allowed;
}

}  // namespace

MappingState computation_prioritized_mapping(const ModelGraph& g, const SystemSpec& sys,
                                             const MapConstraints& cons) {
  MappingState m = MappingState::empty_for(g, sys);
  const std::size_t n = g.node_count();
  const std::size_t na = sys.size();
  const auto allowed = allowed_accs(g, sys);

  std::vector<std::vector<double>> lcost(n);
  for (std::size_t l = 0; l < n; ++l) {
    lcost[l].assign(na, std::numeric_limits<double>::infinity());
    for (std::size_t a : allowed[l])
      lcost[l][a] = layer_cost(sys.acc(a), g.node(l), false, 0, 0).total();
  }

  std::vector<double> finish(n, 0.0), acc_free(na, 0.0);
  double makespan = 0.0;
  std::uint32_t seq = 0;

  auto pred_finish = [&](std::size_t l) {
    double t = 0.0;
    for (std::size_t p : g.preds(l)) t = std::max(t, finish[p]);
    return t;
  };
  auto commit_layer = [&](std::size_t l, std::size_t a) {
    if (std::isinf(lcost[l][a]))
      throw InvariantError("layer \"" + g.node(l).id + "\" forced onto \"" + sys.acc(a).id +
                           "\", which does not support it");
    m.commit(l, a, seq++);
    const double fin = std::max(acc_free[a], pred_finish(l)) + lcost[l][a];
    finish[l] = fin;
    acc_free[a] = fin;
    makespan = std::max(makespan, fin);
  };

  for (const auto& group : frontier_groups(g)) {
    std::size_t i = 0;
    while (i < group.size()) {
      if (cons.is_fixed(group[i])) {
        commit_layer(group[i], cons.seed_assignment[group[i]]);
        ++i;
        continue;
      }

      std::vector<std::size_t> chunk{group[i]};
      std::uint64_t combos = allowed[group[i]].size();
      ++i;
      while (i < group.size() && !cons.is_fixed(group[i])) {
        const std::uint64_t grown = combos * allowed[group[i]].size();
        if (grown > kEnumCap) break;
        combos = grown;
        chunk.push_back(group[i]);
        ++i;
      }

      std::vector<double> pmax(chunk.size());
      for (std::size_t k = 0; k < chunk.size(); ++k) pmax[k] = pred_finish(chunk[k]);

      auto eval = [&](std::uint64_t c, std::vector<std::size_t>& digit,
                      std::vector<double>& af) {
        std::uint64_t rem = c;
        for (std::size_t k = chunk.size(); k-- > 0;) {
          const std::size_t radix = allowed[chunk[k]].size();
          digit[k] = rem % radix;
          rem /= radix;
        }
        af.assign(acc_free.begin(), acc_free.end());
        double mk = makespan;
        for (std::size_t k = 0; k < chunk.size(); ++k) {
          const std::size_t a = allowed[chunk[k]][digit[k]];
          const double fin = std::max(af[a], pmax[k]) + lcost[chunk[k]][a];
          af[a] = fin;
          mk = std::max(mk, fin);
        }
        return mk;
      };

      std::vector<double> score(combos);
      if (parallel::enabled() && combos > 1) {
#pragma omp parallel
        {
          std::vector<std::size_t> digit(chunk.size());
          std::vector<double> af(na);
#pragma omp for schedule(static)
          for (std::int64_t c = 0; c < static_cast<std::int64_t>(combos); ++c)
            score[c] = eval(static_cast<std::uint64_t>(c), digit, af);
        }
      } else {
        std::vector<std::size_t> digit(chunk.size());
        std::vector<double> af(na);
        for (std::uint64_t c = 0; c < combos; ++c) score[c] = eval(c, digit, af);
      }

      std::uint64_t best = 0;
      for (std::uint64_t c = 1; c < combos; ++c)
        if (score[c] < score[best]) best = c;

      std::vector<std::size_t> digit(chunk.size());
      std::uint64_t rem = best;
      for (std::size_t k = chunk.size(); k-- > 0;) {
        const std::size_t radix = allowed[chunk[k]].size();
        digit[k] = rem % radix;
        rem /= radix;
      }
      for (std::size_t k = 0; k < chunk.size(); ++k)
        commit_layer(chunk[k], allowed[chunk[k]][digit[k]]);
    }
  }
  return m;
}

void weight_locality_opt(const ModelGraph& g, const SystemSpec& sys, MappingState& m,
                         const MapConstraints& cons) {
  for (std::size_t a = 0; a < sys.size(); ++a) {
    const auto& acc = sys.acc(a);
    const auto& order = m.acc_order[a];
    if (order.empty()) continue;

    std::vector<KnapsackItem> items;
    std::vector<char> mandatory;
    bool any_mand = false;
    items.reserve(order.size());
    for (std::size_t l : order) {
      const std::uint64_t wb = g.node(l).weight_bytes;
      items.push_back({l, wb, transfer_time(wb, acc.bw_acc)});
      const char mnd = cons.is_must_pin(l) ? 1 : 0;
      mandatory.push_back(mnd);
      any_mand = any_mand || mnd;
    }
    const std::uint64_t cap = acc.m_acc - m.dram_used[a];
    const KnapsackResult r =
        any_mand ? solve_knapsack_forced(items, cap, mandatory) : solve_knapsack(items, cap);
    for (std::size_t j : r.chosen) m.pinned[items[j].layer] = 1;
    m.dram_used[a] += r.total_weight;
  }
}

void activation_transfer_opt(const ModelGraph& g, const SystemSpec& sys, MappingState& m) {
  const auto topo = topo_order_indices(g);
  std::vector<std::size_t> rank(g.node_count());
  for (std::size_t i = 0; i < topo.size(); ++i) rank[topo[i]] = i;

  std::vector<std::size_t> eidx(g.edge_count());
  std::iota(eidx.begin(), eidx.end(), 0);
  std::sort(eidx.begin(), eidx.end(), [&](std::size_t x, std::size_t y) {
    const auto& ex = g.edges()[x];
    const auto& ey = g.edges()[y];
    return std::pair(rank[ex.first], rank[ex.second]) <
           std::pair(rank[ey.first], rank[ey.second]);
  });

  for (std::size_t e : eidx) {
    const auto [u, v] = g.edges()[e];
    if (!m.assigned(u) || m.assignment[u] != m.assignment[v] || m.fused[e]) continue;
    const std::size_t a = m.assignment[u];
    const std::uint64_t need = g.node(u).ofm_bytes;
    if (need > sys.acc(a).m_acc - m.dram_used[a]) continue;
    m.fused[e] = 1;
    m.dram_used[a] += need;
  }
}

std::pair<MappingState, Schedule> candidate_pipeline(const ModelGraph& g, const SystemSpec& sys,
                                                     const std::vector<std::size_t>& assignment,
                                                     const std::vector<std::uint32_t>& commit_seq,
                                                     const MapConstraints& cons) {
  MappingState m = MappingState::empty_for(g, sys);
  m.assignment = assignment;
  m.commit_seq = commit_seq;
  std::vector<std::size_t> order(g.node_count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return commit_seq[x] < commit_seq[y]; });
  for (std::size_t l : order) m.acc_order[assignment[l]].push_back(l);

  weight_locality_opt(g, sys, m, cons);
  activation_transfer_opt(g, sys, m);
  Schedule s = full_schedule(g, sys, m);
  return {std::move(m), std::move(s)};
}

std::pair<MappingState, Schedule> candidate_pipeline(const ModelGraph& g, const SystemSpec& sys,
                                                     const std::vector<std::size_t>& assignment,
                                                     const MapConstraints& cons) {
  return candidate_pipeline(g, sys, assignment, canonical_commit_seq(g), cons);
}

std::vector<RemapRecord> data_locality_remapping(const ModelGraph& g, const SystemSpec& sys,
                                                 MappingState& m, Schedule& sched,
                                                 const MapConstraints& cons) {
  std::vector<RemapRecord> log;
  const std::size_t n = g.node_count();
  const std::size_t na = sys.size();
  const std::size_t max_passes = n * na + 1;
  const auto pass_order = topo_order_indices(g);
  double cur = sched.sys_latency;

  std::size_t pass = 0;
  bool moved = true;
  while (moved) {
    if (++pass > max_passes) throw InvariantError("remapping failed to converge");
    moved = false;
    for (std::size_t l : pass_order) {
      if (cons.is_fixed(l)) continue;

      std::vector<char> mark(na, 0);
      for (std::size_t p : g.preds(l)) mark[m.assignment[p]] = 1;
      for (std::size_t s : g.succs(l)) mark[m.assignment[s]] = 1;
      std::vector<std::size_t> dests;
      const LayerKind kind = g.node(l).kind();
      for (std::size_t a = 0; a < na; ++a)
        if (mark[a] && a != m.assignment[l] && sys.acc(a).supports(kind)) dests.push_back(a);
      if (dests.empty()) continue;

      std::vector<double> lat(dests.size());
      std::vector<MappingState> cm(dests.size());
      std::vector<Schedule> cs(dests.size());
      auto eval = [&](std::size_t k) {
        std::vector<std::size_t> asg = m.assignment;
        asg[l] = dests[k];
        auto [state, sch] = candidate_pipeline(g, sys, asg, m.commit_seq, cons);
        lat[k] = sch.sys_latency;
        cm[k] = std::move(state);
        cs[k] = std::move(sch);
      };
      if (parallel::enabled() && dests.size() > 1) {
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(dests.size()); ++k)
          eval(static_cast<std::size_t>(k));
      } else {
        for (std::size_t k = 0; k < dests.size(); ++k) eval(k);
      }

      std::size_t best = dests.size();
      for (std::size_t k = 0; k < dests.size(); ++k)
        if (lat[k] < cur - kImproveEps && (best == dests.size() || lat[k] < lat[best])) best = k;
      if (best == dests.size()) continue;

      log.push_back({l, m.assignment[l], dests[best], cur, lat[best]});
      m = std::move(cm[best]);
      sched = std::move(cs[best]);
      cur = sched.sys_latency;
      moved = true;
    }
  }
  return log;
}

H2HResult run_h2h(const ModelGraph& g, const SystemSpec& sys, int steps,
                  const MapConstraints& cons) {
  if (steps < 1 || steps > 4) throw InvariantError("steps must be between 1 and 4");
  check_kind_support(g, sys);
  const auto t0 = std::chrono::steady_clock::now();

  H2HResult res;
  MappingState m = computation_prioritized_mapping(g, sys, cons);
  Schedule s = full_schedule(g, sys, m);
  res.steps.push_back({"compute_map", m, s});

  if (steps >= 2) {
    const std::vector<char> before = m.pinned;
    weight_locality_opt(g, sys, m, cons);
    std::vector<std::size_t> changed;
    for (std::size_t l = 0; l < g.node_count(); ++l)
      if (m.pinned[l] != before[l]) changed.push_back(l);
    s = incremental_reschedule(g, sys, m, s, changed);
    if (s.sys_latency > res.steps.back().sched.sys_latency)
      throw InvariantError("weight locality increased latency");
    res.steps.push_back({"weight_locality", m, s});
  }
  if (steps >= 3) {
    const std::vector<char> before = m.fused;
    activation_transfer_opt(g, sys, m);
    std::vector<char> touched(g.node_count(), 0);
    for (std::size_t e = 0; e < g.edge_count(); ++e)
      if (m.fused[e] != before[e]) {
        touched[g.edges()[e].first] = 1;
        touched[g.edges()[e].second] = 1;
      }
    std::vector<std::size_t> changed;
    for (std::size_t l = 0; l < g.node_count(); ++l)
      if (touched[l]) changed.push_back(l);
    s = incremental_reschedule(g, sys, m, s, changed);
    if (s.sys_latency > res.steps.back().sched.sys_latency)
      throw InvariantError("activation fusion increased latency");
    res.steps.push_back({"activation_fusion", m, s});
  }
  if (steps >= 4) {
    res.remaps = data_locality_remapping(g, sys, m, s, cons);
    if (s.sys_latency > res.steps.back().sched.sys_latency)
      throw InvariantError("remapping increased latency");
    res.steps.push_back({"data_locality", m, s});
  }

  res.state = std::move(m);
  res.sched = std::move(s);
  res.search_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

H2HResult run_baseline(const ModelGraph& g, const SystemSpec& sys) { return run_h2h(g, sys, 2); }

H2HResult remap_incremental(const H2HResult& prev, const ModelGraph& g_prev,
                            const ModelGraph& g_new, const SystemSpec& sys, int steps) {
  MapConstraints cons;
  cons.fixed.assign(g_new.node_count(), 0);
  cons.seed_assignment.assign(g_new.node_count(), MappingState::kUnassigned);
  cons.must_pin.assign(g_new.node_count(), 0);
  for (std::size_t l = 0; l < g_new.node_count(); ++l) {
    const std::string& id = g_new.node(l).id;
    if (!g_prev.has_node(id)) continue;
    const std::size_t pl = g_prev.index_of(id);
    const LayerNode& a = g_prev.node(pl);
    const LayerNode& b = g_new.node(l);
    if (!(a.params == b.params) || a.dtype_bytes != b.dtype_bytes)
      throw InvariantError("persisting layer \"" + id + "\" changed definition across graphs");
    if (prev.state.assignment[pl] == MappingState::kUnassigned) continue;
    cons.fixed[l] = 1;
    cons.seed_assignment[l] = prev.state.assignment[pl];
    if (prev.state.pinned[pl]) cons.must_pin[l] = 1;
  }
  return run_h2h(g_new, sys, steps, cons);
}

}  // namespace h2h
