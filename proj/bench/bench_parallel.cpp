// Times the OpenMP candidate-scoring paths against the serial reference and
// double-checks that both give the same answer.
#include <chrono>
#include <cstdio>

#include "h2h/fixtures.hpp"
#include "h2h/oracle.hpp"
#include "h2h/parallel.hpp"

using namespace h2h;
namespace fx = h2h::fixtures;

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel) {
  std::printf("%-28s %10.4f s %10.4f s %8.2fx\n", name, serial, parallel,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("%-28s %12s %12s %9s\n", "workload", "serial", "parallel", "speedup");

  {
    // exhaustive sweep over a mid-sized space, the hottest loop in the tree
    ModelGraph g = fx::random_dag(35, 10, 12);
    SystemSpec sys = fx::random_system(112, 3, 3);
    const std::uint64_t space = oracle_space(g, sys);
    double lat_serial = 0.0, lat_parallel = 0.0;
    const double ts = time_best_of(3, [&] {
      lat_serial = exhaustive_map_serial(g, sys).sched.sys_latency;
    });
    const double tp = time_best_of(3, [&] {
      lat_parallel = exhaustive_map(g, sys).sched.sys_latency;
    });
    std::printf("(oracle space: %llu candidates)\n",
                static_cast<unsigned long long>(space));
    row("exhaustive oracle", ts, tp);
    if (lat_serial != lat_parallel) {
      std::printf("MISMATCH: serial %.17g vs parallel %.17g\n", lat_serial, lat_parallel);
      return 1;
    }
  }

  {
    // full pipeline on the big graph; step 1 scoring is the parallel part
    ModelGraph g = fx::random_dag(7, 141, 141);
    SystemSpec sys = fx::system_12();
    double lat_serial = 0.0, lat_parallel = 0.0;
    parallel::set_enabled(false);
    const double ts = time_best_of(5, [&] {
      lat_serial = run_h2h(g, sys, 4).sched.sys_latency;
    });
    parallel::set_enabled(true);
    const double tp = time_best_of(5, [&] {
      lat_parallel = run_h2h(g, sys, 4).sched.sys_latency;
    });
    row("mapping pipeline, 141 nodes", ts, tp);
    if (lat_serial != lat_parallel) {
      std::printf("MISMATCH: serial %.17g vs parallel %.17g\n", lat_serial, lat_parallel);
      return 1;
    }
  }

  std::printf("results agree on every workload\n");
  return 0;
}
