#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "h2h/mapper.hpp"

namespace h2h {

struct StepReport {
  std::string name;
  double sys_latency = 0.0;
  double sys_energy = 0.0;
  double comm_seconds = 0.0;
  double compute_seconds = 0.0;
  // Latency as a percentage of the weight-locality step (that step = 100).
  double relative_latency_pct = 0.0;
};

struct RunReport {
  std::string model;
  std::string system;
  std::vector<StepReport> steps;
  std::size_t remap_count = 0;
  double search_seconds = 0.0;
};

RunReport make_report(const H2HResult& r, const std::string& model_name,
                      const std::string& system_name);
nlohmann::json report_json(const RunReport& rep);

double compute_share(const Schedule& s);

// Full-precision decimal so emitted numbers reparse exactly.
std::string format_double(double v);

struct SweepRow {
  double bandwidth = 0.0;
  std::string step;
  double sys_latency = 0.0;
  double sys_energy = 0.0;
  double comm_seconds = 0.0;
  double compute_seconds = 0.0;
  double relative_latency_pct = 0.0;
};

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct CompareRow {
  std::string model;
  double baseline_latency = 0.0;
  double h2h_latency = 0.0;
  double latency_reduction_pct = 0.0;
  double baseline_energy = 0.0;
  double h2h_energy = 0.0;
  double energy_reduction_pct = 0.0;
  double baseline_compute_share = 0.0;
  double h2h_compute_share = 0.0;
  std::size_t remaps = 0;
};

std::string compare_csv(const std::vector<CompareRow>& rows);

}  // namespace h2h
