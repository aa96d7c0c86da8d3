#include "h2h/oracle.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "h2h/parallel.hpp"

namespace h2h {

namespace {

constexpr std::uint64_t kBlock = 1u << 20;
constexpr std::uint64_t kU64Max = std::numeric_limits<std::uint64_t>::max();

std::vector<std::vector<std::size_t>> allowed_accs(const ModelGraph& g, const SystemSpec& sys) {
  std::vector<std::vector<std::size_t>> allowed(g.node_count());
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    const LayerKind kind = g.node(l).kind();
    for (std::size_t a = 0; a < sys.size(); ++a)
      if (sys.acc(a).supports(kind)) allowed[l].push_back(a);
  }
  return allowed;
}

std::uint64_t assignment_space(const std::vector<std::vector<std::size_t>>& allowed) {
  std::uint64_t total = 1;
  for (const auto& opts : allowed) {
    if (opts.empty()) return 0;
    if (total > kU64Max / opts.size()) return kU64Max;
    total *= opts.size();
  }
  return total;
}

std::vector<std::size_t> decode(const std::vector<std::vector<std::size_t>>& allowed,
                                std::uint64_t c) {
  std::vector<std::size_t> asg(allowed.size());
  for (std::size_t l = allowed.size(); l-- > 0;) {
    const std::uint64_t radix = allowed[l].size();
    asg[l] = allowed[l][c % radix];
    c /= radix;
  }
  return asg;
}

std::uint64_t count_orders(const ModelGraph& g, std::vector<std::size_t>& indeg,
                           std::vector<char>& used, std::size_t depth, std::uint64_t cap) {
  if (depth == g.node_count()) return 1;
  std::uint64_t total = 0;
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    if (used[l] || indeg[l] != 0) continue;
    used[l] = 1;
    for (std::size_t v : g.succs(l)) --indeg[v];
    total += count_orders(g, indeg, used, depth + 1, cap);
    for (std::size_t v : g.succs(l)) ++indeg[v];
    used[l] = 0;
    if (total > cap) return total;
  }
  return total;
}

template <typename F>
void walk_orders(const ModelGraph& g, std::vector<std::size_t>& indeg, std::vector<char>& used,
                 std::vector<std::size_t>& order, F& visit) {
  if (order.size() == g.node_count()) {
    visit(order);
    return;
  }
  for (std::size_t l = 0; l < g.node_count(); ++l) {
    if (used[l] || indeg[l] != 0) continue;
    used[l] = 1;
    for (std::size_t v : g.succs(l)) --indeg[v];
    order.push_back(l);
    walk_orders(g, indeg, used, order, visit);
    order.pop_back();
    for (std::size_t v : g.succs(l)) ++indeg[v];
    used[l] = 0;
  }
}

MappingState bare_state(const ModelGraph& g, const SystemSpec& sys,
                        const std::vector<std::size_t>& asg,
                        const std::vector<std::uint32_t>& seq) {
  MappingState m = MappingState::empty_for(g, sys);
  m.assignment = asg;
  m.commit_seq = seq;
  std::vector<std::size_t> order(g.node_count());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return seq[x] < seq[y]; });
  for (std::size_t l : order) m.acc_order[asg[l]].push_back(l);
  return m;
}

OracleResult run(const ModelGraph& g, const SystemSpec& sys, bool with_locality,
                 std::uint64_t budget, bool orderings, bool par) {
  check_kind_support(g, sys);
  const std::uint64_t space = oracle_space(g, sys, orderings, budget);
  if (space > budget) {
    const std::string count =
        space == kU64Max ? "at least " + std::to_string(space) : std::to_string(space);
    throw BudgetExceededError("exhaustive search needs " + count + " candidates, budget is " +
                              std::to_string(budget));
  }

  const auto allowed = allowed_accs(g, sys);
  const std::uint64_t n_assign = assignment_space(allowed);
  double best_lat = std::numeric_limits<double>::infinity();
  std::uint64_t best_idx = 0;
  std::vector<std::uint32_t> best_seq;

  auto latency_of = [&](std::uint64_t idx, const std::vector<std::uint32_t>& seq) {
    const auto asg = decode(allowed, idx);
    if (with_locality) return candidate_pipeline(g, sys, asg, seq).second.sys_latency;
    return full_schedule(g, sys, bare_state(g, sys, asg, seq)).sys_latency;
  };

  std::vector<double> buf;
  auto sweep_assignments = [&](const std::vector<std::uint32_t>& seq) {
    for (std::uint64_t base = 0; base < n_assign; base += kBlock) {
      const std::uint64_t len = std::min<std::uint64_t>(kBlock, n_assign - base);
      buf.assign(len, 0.0);
      if (par && len > 1) {
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(len); ++k)
          buf[k] = latency_of(base + static_cast<std::uint64_t>(k), seq);
      } else {
        for (std::uint64_t k = 0; k < len; ++k) buf[k] = latency_of(base + k, seq);
      }
      for (std::uint64_t k = 0; k < len; ++k)
        if (buf[k] < best_lat) {
          best_lat = buf[k];
          best_idx = base + k;
          best_seq = seq;
        }
    }
  };

  if (!orderings) {
    sweep_assignments(canonical_commit_seq(g));
  } else {
    std::vector<std::size_t> indeg(g.node_count(), 0);
    for (const auto& [u, v] : g.edges()) ++indeg[v];
    std::vector<char> used(g.node_count(), 0);
    std::vector<std::size_t> order;
    auto visit = [&](const std::vector<std::size_t>& ord) {
      std::vector<std::uint32_t> seq(g.node_count());
      for (std::size_t i = 0; i < ord.size(); ++i) seq[ord[i]] = static_cast<std::uint32_t>(i);
      sweep_assignments(seq);
    };
    walk_orders(g, indeg, used, order, visit);
  }

  OracleResult r;
  const auto asg = decode(allowed, best_idx);
  if (with_locality) {
    auto [state, sched] = candidate_pipeline(g, sys, asg, best_seq);
    r.state = std::move(state);
    r.sched = std::move(sched);
  } else {
    r.state = bare_state(g, sys, asg, best_seq);
    r.sched = full_schedule(g, sys, r.state);
  }
  r.candidates = space;
  return r;
}

}  // namespace

std::uint64_t oracle_space(const ModelGraph& g, const SystemSpec& sys, bool enumerate_orderings,
                           std::uint64_t cap) {
  const std::uint64_t assigns = assignment_space(allowed_accs(g, sys));
  if (!enumerate_orderings || assigns == 0) return assigns;
  std::vector<std::size_t> indeg(g.node_count(), 0);
  for (const auto& [u, v] : g.edges()) ++indeg[v];
  std::vector<char> used(g.node_count(), 0);
  const std::uint64_t orders = count_orders(g, indeg, used, 0, cap);
  if (assigns > kU64Max / orders) return kU64Max;
  return assigns * orders;
}

OracleResult exhaustive_map(const ModelGraph& g, const SystemSpec& sys, bool with_locality,
                            std::uint64_t budget, bool enumerate_orderings) {
  return run(g, sys, with_locality, budget, enumerate_orderings, parallel::enabled());
}

OracleResult exhaustive_map_serial(const ModelGraph& g, const SystemSpec& sys, bool with_locality,
                                   std::uint64_t budget, bool enumerate_orderings) {
  return run(g, sys, with_locality, budget, enumerate_orderings, false);
}

}  // namespace h2h
