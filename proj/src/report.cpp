#include "h2h/report.hpp"

#include <cstdio>
#include <sstream>

namespace h2h {

double compute_share(const Schedule& s) {
  const double total = s.compute_seconds + s.comm_seconds;
  return total == 0.0 ? 1.0 : s.compute_seconds / total;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunReport make_report(const H2HResult& r, const std::string& model_name,
                      const std::string& system_name) {
  RunReport rep;
  rep.model = model_name;
  rep.system = system_name;
  rep.remap_count = r.remaps.size();
  rep.search_seconds = r.search_seconds;

  double base = 0.0;
  for (const StepSnapshot& s : r.steps)
    if (s.name == "weight_locality") base = s.sched.sys_latency;
  if (base == 0.0) base = r.steps.front().sched.sys_latency;

  for (const StepSnapshot& s : r.steps) {
    StepReport sr;
    sr.name = s.name;
    sr.sys_latency = s.sched.sys_latency;
    sr.sys_energy = s.sched.sys_energy;
    sr.comm_seconds = s.sched.comm_seconds;
    sr.compute_seconds = s.sched.compute_seconds;
    sr.relative_latency_pct = base == 0.0 ? 100.0 : 100.0 * s.sched.sys_latency / base;
    rep.steps.push_back(std::move(sr));
  }
  return rep;
}

nlohmann::json report_json(const RunReport& rep) {
  nlohmann::json doc;
  doc["model"] = rep.model;
  doc["system"] = rep.system;
  doc["remap_count"] = rep.remap_count;
  doc["search_seconds"] = rep.search_seconds;
  nlohmann::json steps = nlohmann::json::array();
  for (const StepReport& s : rep.steps)
    steps.push_back({{"name", s.name},
                     {"sys_latency", s.sys_latency},
                     {"sys_energy", s.sys_energy},
                     {"comm_seconds", s.comm_seconds},
                     {"compute_seconds", s.compute_seconds},
                     {"relative_latency_pct", s.relative_latency_pct}});
  doc["steps"] = std::move(steps);
  return doc;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "bandwidth_bytes_per_s,step,sys_latency_s,sys_energy_j,comm_s,compute_s,"
         "relative_latency_pct\n";
  for (const SweepRow& r : rows)
    out << format_double(r.bandwidth) << ',' << r.step << ',' << format_double(r.sys_latency)
        << ',' << format_double(r.sys_energy) << ',' << format_double(r.comm_seconds) << ','
        << format_double(r.compute_seconds) << ',' << format_double(r.relative_latency_pct)
        << '\n';
  return out.str();
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::ostringstream out;
  out << "model,baseline_latency_s,h2h_latency_s,latency_reduction_pct,baseline_energy_j,"
         "h2h_energy_j,energy_reduction_pct,baseline_compute_share,h2h_compute_share,remaps\n";
  for (const CompareRow& r : rows)
    out << r.model << ',' << format_double(r.baseline_latency) << ','
        << format_double(r.h2h_latency) << ',' << format_double(r.latency_reduction_pct) << ','
        << format_double(r.baseline_energy) << ',' << format_double(r.h2h_energy) << ','
        << format_double(r.energy_reduction_pct) << ','
        << format_double(r.baseline_compute_share) << ','
        << format_double(r.h2h_compute_share) << ',' << r.remaps << '\n';
  return out.str();
}

}  // namespace h2h
