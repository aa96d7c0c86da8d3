// h2h command line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "h2h/errors.hpp"
#include "h2h/fixtures.hpp"
#include "h2h/mapper.hpp"
#include "h2h/model_graph.hpp"
#include "h2h/oracle.hpp"
#include "h2h/report.hpp"
#include "h2h/scheduler.hpp"
#include "h2h/system_model.hpp"

namespace fs = std::filesystem;

namespace {

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw h2h::ParseError("cannot create output directory: " + dir);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw h2h::ParseError("cannot write file: " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void apply_uniform_bw(h2h::SystemSpec& sys, double bw) {
  if (bw <= 0.0) throw h2h::ParseError("bandwidth override must be positive");
  for (auto& a : sys.accelerators) a.bw_acc = bw;
}

// "id=bytes_per_s" overrides for asymmetric studies.
void apply_acc_bw(h2h::SystemSpec& sys, const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == o.size())
      throw h2h::ParseError("bad accelerator bandwidth override (want id=bytes_per_s): " + o);
    double bw = 0.0;
    try {
      bw = std::stod(o.substr(eq + 1));
    } catch (const std::exception&) {
      throw h2h::ParseError("bad bandwidth value in override: " + o);
    }
    if (bw <= 0.0) throw h2h::ParseError("bandwidth override must be positive: " + o);
    sys.accelerators[sys.index_of(o.substr(0, eq))].bw_acc = bw;
  }
}

// Every schedule leaving the tool gets re-checked first.
void assert_valid(const h2h::ModelGraph& g, const h2h::SystemSpec& sys,
                  const h2h::StepSnapshot& s) {
  auto issues = h2h::check_mapping_invariants(g, sys, s.state);
  auto sched_issues = h2h::validate_schedule(g, sys, s.state, s.sched);
  issues.insert(issues.end(), sched_issues.begin(), sched_issues.end());
  if (!issues.empty())
    throw h2h::InvariantError("step " + s.name + " failed validation: " + issues.front());
}

void assert_valid_all(const h2h::ModelGraph& g, const h2h::SystemSpec& sys,
                      const h2h::H2HResult& r) {
  for (const auto& s : r.steps) assert_valid(g, sys, s);
}

void print_report(const h2h::RunReport& rep) {
  std::printf("model: %s\nsystem: %s\n", rep.model.c_str(), rep.system.c_str());
  std::printf("%-18s %14s %14s %12s %12s %10s\n", "step", "latency_s", "energy_j", "comm_s",
              "compute_s", "rel_%");
  for (const auto& s : rep.steps)
    std::printf("%-18s %14.6e %14.6e %12.6e %12.6e %10.2f\n", s.name.c_str(), s.sys_latency,
                s.sys_energy, s.comm_seconds, s.compute_seconds, s.relative_latency_pct);
  std::printf("remaps: %zu\nsearch_seconds: %.3f\n", rep.remap_count, rep.search_seconds);
}

struct CommonOpts {
  std::string model_path;
  std::string system_path;
  std::string out_dir = "out";
  int steps = 4;
  double bandwidth = 0.0;  // 0 = keep system file values
  std::vector<std::string> acc_bandwidths;
};

void add_io_opts(CLI::App* cmd, CommonOpts& o, bool with_out = true) {
  cmd->add_option("--model", o.model_path, "model graph JSON")->required();
  cmd->add_option("--system", o.system_path, "system spec JSON")->required();
  if (with_out) cmd->add_option("--out", o.out_dir, "output directory");
}

void add_bw_opts(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--bandwidth", o.bandwidth,
                  "uniform interconnect bandwidth override, bytes/s");
  cmd->add_option("--acc-bandwidth", o.acc_bandwidths,
                  "per-accelerator override id=bytes_per_s (repeatable)");
}

std::pair<h2h::ModelGraph, h2h::SystemSpec> load_inputs(const CommonOpts& o) {
  h2h::ModelGraph g = h2h::load_model(o.model_path);
  h2h::SystemSpec sys = h2h::load_system(o.system_path);
  if (o.bandwidth != 0.0) apply_uniform_bw(sys, o.bandwidth);
  apply_acc_bw(sys, o.acc_bandwidths);
  return {std::move(g), std::move(sys)};
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

int cmd_map(const CommonOpts& o) {
  auto [g, sys] = load_inputs(o);
  h2h::H2HResult r = h2h::run_h2h(g, sys, o.steps);
  assert_valid_all(g, sys, r);

  fs::path out = ensure_dir(o.out_dir);
  h2h::RunReport rep = h2h::make_report(r, g.name(), stem_of(o.system_path));
  write_json(out / "summary.json", h2h::report_json(rep));
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    nlohmann::json doc = h2h::gantt_json(g, sys, r.steps[i].state, r.steps[i].sched);
    doc["step"] = i + 1;
    doc["step_name"] = r.steps[i].name;
    write_json(out / ("gantt_step" + std::to_string(i + 1) + ".json"), doc);
  }
  write_json(out / "mapping.json", h2h::mapping_json(g, sys, r.state));

  print_report(rep);
  std::printf("wrote %s\n", (out / "summary.json").string().c_str());
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::vector<double>& bandwidths) {
  if (bandwidths.empty()) throw h2h::ParseError("--bandwidths must be nonempty");
  for (double bw : bandwidths)
    if (bw <= 0.0) throw h2h::ParseError("--bandwidths values must be positive");

  h2h::ModelGraph g = h2h::load_model(o.model_path);
  h2h::SystemSpec base_sys = h2h::load_system(o.system_path);
  apply_acc_bw(base_sys, o.acc_bandwidths);

  std::vector<h2h::SweepRow> rows;
  for (double bw : bandwidths) {
    h2h::SystemSpec sys = base_sys;
    apply_uniform_bw(sys, bw);
    h2h::H2HResult r = h2h::run_h2h(g, sys, o.steps);
    assert_valid_all(g, sys, r);
    h2h::RunReport rep = h2h::make_report(r, g.name(), stem_of(o.system_path));
    for (const auto& s : rep.steps)
      rows.push_back({bw, s.name, s.sys_latency, s.sys_energy, s.comm_seconds,
                      s.compute_seconds, s.relative_latency_pct});
  }

  const std::string csv = h2h::sweep_csv(rows);
  fs::path out = ensure_dir(o.out_dir);
  write_text(out / "sweep.csv", csv);
  std::fputs(csv.c_str(), stdout);
  std::printf("wrote %s\n", (out / "sweep.csv").string().c_str());
  return 0;
}

int cmd_compare(const CommonOpts& o) {
  auto [g, sys] = load_inputs(o);
  h2h::H2HResult base = h2h::run_baseline(g, sys);
  h2h::H2HResult full = h2h::run_h2h(g, sys, 4);
  assert_valid_all(g, sys, base);
  assert_valid_all(g, sys, full);

  h2h::CompareRow row;
  row.model = g.name();
  row.baseline_latency = base.sched.sys_latency;
  row.h2h_latency = full.sched.sys_latency;
  row.latency_reduction_pct =
      100.0 * (base.sched.sys_latency - full.sched.sys_latency) / base.sched.sys_latency;
  row.baseline_energy = base.sched.sys_energy;
  row.h2h_energy = full.sched.sys_energy;
  row.energy_reduction_pct =
      100.0 * (base.sched.sys_energy - full.sched.sys_energy) / base.sched.sys_energy;
  row.baseline_compute_share = h2h::compute_share(base.sched);
  row.h2h_compute_share = h2h::compute_share(full.sched);
  row.remaps = full.remaps.size();

  const std::string csv = h2h::compare_csv({row});
  fs::path out = ensure_dir(o.out_dir);
  write_text(out / "compare.csv", csv);
  std::fputs(csv.c_str(), stdout);
  std::printf("wrote %s\n", (out / "compare.csv").string().c_str());
  return 0;
}

int cmd_oracle(const CommonOpts& o, std::uint64_t budget, bool zero_locality, bool orderings) {
  auto [g, sys] = load_inputs(o);
  h2h::OracleResult opt = h2h::exhaustive_map(g, sys, !zero_locality, budget, orderings);
  h2h::H2HResult full = h2h::run_h2h(g, sys, 4);
  assert_valid_all(g, sys, full);

  const double best = opt.sched.sys_latency;
  const double got = full.sched.sys_latency;
  std::printf("candidates: %llu\n", static_cast<unsigned long long>(opt.candidates));
  std::printf("optimum_latency_s: %s\n", h2h::format_double(best).c_str());
  std::printf("h2h_latency_s: %s\n", h2h::format_double(got).c_str());
  std::printf("gap_pct: %s\n",
              h2h::format_double(best == 0.0 ? 0.0 : 100.0 * (got - best) / best).c_str());
  return 0;
}

int cmd_validate(const CommonOpts& o) {
  auto [g, sys] = load_inputs(o);
  h2h::H2HResult r = h2h::run_h2h(g, sys, o.steps);

  bool ok = true;
  for (const auto& s : r.steps) {
    auto issues = h2h::check_mapping_invariants(g, sys, s.state);
    auto sched_issues = h2h::validate_schedule(g, sys, s.state, s.sched);
    issues.insert(issues.end(), sched_issues.begin(), sched_issues.end());
    if (issues.empty()) {
      std::printf("ok: %s (latency %s s)\n", s.name.c_str(),
                  h2h::format_double(s.sched.sys_latency).c_str());
    } else {
      ok = false;
      for (const auto& msg : issues)
        std::fprintf(stderr, "violation in %s: %s\n", s.name.c_str(), msg.c_str());
    }
  }
  if (!ok) throw h2h::InvariantError("schedule validation failed");
  return 0;
}

int cmd_fixtures(const std::string& out_dir, std::uint64_t seed, bool with_random) {
  namespace fx = h2h::fixtures;
  fs::path out = ensure_dir(out_dir);
  h2h::save_model(fx::toy_two_branch(), (out / "toy_two_branch.json").string());
  h2h::save_system(fx::toy_system(), (out / "toy_system.json").string());
  h2h::save_system(fx::system_12(), (out / "system_12.json").string());
  for (const auto& nm : fx::mmmt_suite())
    h2h::save_model(nm.graph, (out / (nm.name + ".json")).string());
  if (with_random) {
    h2h::save_model(fx::random_dag(seed, 8, 24),
                    (out / ("random_model_" + std::to_string(seed) + ".json")).string());
    h2h::save_system(fx::random_system(seed, 2, 4),
                     (out / ("random_system_" + std::to_string(seed) + ".json")).string());
  }
  std::printf("fixtures written to %s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"h2h: map heterogeneous DNN graphs onto heterogeneous accelerator systems"};
  app.require_subcommand(1);

  int rc = 0;

  CommonOpts map_o;
  auto* map_cmd = app.add_subcommand("map", "run the mapping pipeline and export reports");
  add_io_opts(map_cmd, map_o);
  map_cmd->add_option("--steps", map_o.steps, "run through step N (1..4)")
      ->check(CLI::Range(1, 4));
  add_bw_opts(map_cmd, map_o);
  map_cmd->callback([&] { rc = cmd_map(map_o); });

  CommonOpts sweep_o;
  std::vector<double> bandwidths = {1.25e8, 1.5e8, 2.5e8, 5e8, 1.25e9};
  auto* sweep_cmd = app.add_subcommand("sweep", "rerun the pipeline across bandwidths");
  add_io_opts(sweep_cmd, sweep_o);
  sweep_cmd->add_option("--steps", sweep_o.steps, "run through step N (1..4)")
      ->check(CLI::Range(1, 4));
  sweep_cmd->add_option("--bandwidths", bandwidths, "uniform bandwidths to sweep, bytes/s")
      ->delimiter(',');
  sweep_cmd->add_option("--acc-bandwidth", sweep_o.acc_bandwidths,
                        "per-accelerator baseline override id=bytes_per_s (repeatable)");
  sweep_cmd->callback([&] { rc = cmd_sweep(sweep_o, bandwidths); });

  CommonOpts compare_o;
  auto* compare_cmd = app.add_subcommand("compare", "baseline vs full pipeline");
  add_io_opts(compare_cmd, compare_o);
  add_bw_opts(compare_cmd, compare_o);
  compare_cmd->callback([&] { rc = cmd_compare(compare_o); });

  CommonOpts oracle_o;
  std::uint64_t budget = h2h::kDefaultOracleBudget;
  bool zero_locality = false;
  bool orderings = false;
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive optimum and the heuristic gap");
  add_io_opts(oracle_cmd, oracle_o, /*with_out=*/false);
  oracle_cmd->add_option("--budget", budget, "max candidates to enumerate");
  oracle_cmd->add_flag("--zero-locality", zero_locality,
                       "score candidates without pinning or fusion");
  oracle_cmd->add_flag("--orderings", orderings,
                       "also enumerate commit orderings (all topological orders)");
  add_bw_opts(oracle_cmd, oracle_o);
  oracle_cmd->callback([&] { rc = cmd_oracle(oracle_o, budget, zero_locality, orderings); });

  CommonOpts validate_o;
  auto* validate_cmd = app.add_subcommand("validate", "run and validate every step's schedule");
  add_io_opts(validate_cmd, validate_o, /*with_out=*/false);
  validate_cmd->add_option("--steps", validate_o.steps, "run through step N (1..4)")
      ->check(CLI::Range(1, 4));
  add_bw_opts(validate_cmd, validate_o);
  validate_cmd->callback([&] { rc = cmd_validate(validate_o); });

  std::string fix_out = "fixtures";
  std::uint64_t seed = 0;
  auto* fix_cmd = app.add_subcommand("fixtures", "write the bundled fixture files");
  fix_cmd->add_option("--out", fix_out, "output directory");
  auto* seed_opt = fix_cmd->add_option("--seed", seed, "also write a random model/system pair");
  fix_cmd->callback([&] { rc = cmd_fixtures(fix_out, seed, seed_opt->count() > 0); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const h2h::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const h2h::UnsupportedLayerError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const h2h::BudgetExceededError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const h2h::InvariantError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
