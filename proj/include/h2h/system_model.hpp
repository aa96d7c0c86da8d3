#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "h2h/model_graph.hpp"

namespace h2h {

struct CostBreakdown {
  double weight_xfer = 0.0;
  double input_xfer = 0.0;
  double compute = 0.0;
  double output_xfer = 0.0;

  double comm() const { return weight_xfer + input_xfer + output_xfer; }
  double total() const { return weight_xfer + input_xfer + compute + output_xfer; }
  bool operator==(const CostBreakdown&) const = default;
};

std::uint64_t mac_count(LayerKind kind, const LayerParams& params);

// Analytical per-accelerator model, plugged in by `type` string (see
// register_perf_model). latency_s returns nullopt for kinds the model
// cannot express.
class PerformanceModel {
 public:
  virtual ~PerformanceModel() = default;
  virtual std::optional<double> latency_s(LayerKind kind, const LayerParams& params) const = 0;
  virtual double energy_j(LayerKind kind, const LayerParams& params,
                          double energy_per_mac) const {
    return static_cast<double>(mac_count(kind, params)) * energy_per_mac;
  }
};

// latency = macs / (pe_count * freq_hz * efficiency[kind])
class RooflineModel : public PerformanceModel {
 public:
  RooflineModel(double pe_count, double freq_hz, std::map<LayerKind, double> efficiency);
  std::optional<double> latency_s(LayerKind kind, const LayerParams& params) const override;

  double pe_count() const { return pe_count_; }
  double freq_hz() const { return freq_hz_; }
  const std::map<LayerKind, double>& efficiency() const { return efficiency_; }

 private:
  double pe_count_;
  double freq_hz_;
  std::map<LayerKind, double> efficiency_;
};

struct AcceleratorSpec {
  std::string id;
  std::set<LayerKind> supported_kinds;
  double bw_acc = 1.0;        // host link, bytes/second
  std::uint64_t m_acc = 0;    // local DRAM, bytes
  double energy_per_mac = 0.0;
  double energy_per_byte = 0.0;
  std::shared_ptr<const PerformanceModel> perf_model;
  nlohmann::json perf_model_config;  // retained verbatim for round-trips

  bool supports(LayerKind k) const { return supported_kinds.count(k) != 0; }
};

struct SystemSpec {
  std::vector<AcceleratorSpec> accelerators;

  std::size_t size() const { return accelerators.size(); }
  const AcceleratorSpec& acc(std::size_t i) const { return accelerators[i]; }
  std::size_t index_of(const std::string& id) const;
};

double transfer_time(std::uint64_t bytes, double bw);
double compute_latency(const AcceleratorSpec& acc, const LayerNode& layer);

// One layer's serialized cost on `acc`: weight transfer (unless pinned),
// input/output activation transfer net of fused bytes, and compute.
CostBreakdown layer_cost(const AcceleratorSpec& acc, const LayerNode& layer, bool weight_pinned,
                         std::uint64_t input_fused_bytes, std::uint64_t output_fused_bytes);

using PerfModelFactory =
    std::function<std::shared_ptr<const PerformanceModel>(const nlohmann::json&)>;
void register_perf_model(const std::string& type, PerfModelFactory factory);

SystemSpec parse_system(const std::string& text);
SystemSpec load_system(const std::string& path);
std::string serialize_system(const SystemSpec& sys);
void save_system(const SystemSpec& sys, const std::string& path);

// Every kind present in g must be supported by at least one accelerator.
void check_kind_support(const ModelGraph& g, const SystemSpec& sys);

}  // namespace h2h
