#include "h2h/system_model.hpp"

#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

namespace h2h {

using nlohmann::json;

std::uint64_t mac_count(LayerKind kind, const LayerParams& params) {
  if (kind != kind_of(params)) throw InvariantError("mac_count: kind does not match params");
  if (const auto* c = std::get_if<ConvParams>(&params)) {
    return c->out_channels * c->in_channels * c->out_h * c->out_w * c->kernel * c->kernel;
  }
  if (const auto* f = std::get_if<FcParams>(&params)) {
    return f->in_features * f->out_features;
  }
  const auto& l = std::get<LstmParams>(params);
  const std::uint64_t h = l.hidden_size;
  std::uint64_t total = 4 * (l.input_size * h + h * h);
  if (l.num_layers > 1) total += (l.num_layers - 1) * 4 * (h * h + h * h);
  return total;
}

RooflineModel::RooflineModel(double pe_count, double freq_hz, std::map<LayerKind, double> efficiency)
    : pe_count_(pe_count), freq_hz_(freq_hz), efficiency_(std::move(efficiency)) {
  if (pe_count_ <= 0 || freq_hz_ <= 0)
    throw ParseError("roofline model: pe_count and freq_hz must be positive");
  for (const auto& [k, e] : efficiency_)
    if (e <= 0.0 || e > 1.0)
      throw ParseError(std::string("roofline model: efficiency[") + to_string(k) +
                       "] must be in (0, 1]");
}

std::optional<double> RooflineModel::latency_s(LayerKind kind, const LayerParams& params) const {
  auto it = efficiency_.find(kind);
  if (it == efficiency_.end()) return std::nullopt;
  return static_cast<double>(mac_count(kind, params)) / (pe_count_ * freq_hz_ * it->second);
}

std::size_t SystemSpec::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < accelerators.size(); ++i)
    if (accelerators[i].id == id) return i;
  throw ParseError("unknown accelerator id \"" + id + "\"");
}

double transfer_time(std::uint64_t bytes, double bw) {
  return static_cast<double>(bytes) / bw;
}

double compute_latency(const AcceleratorSpec& acc, const LayerNode& layer) {
  if (!acc.supports(layer.kind()))
    throw UnsupportedLayerError("accelerator \"" + acc.id + "\" does not support " +
                                to_string(layer.kind()) + " layer \"" + layer.id + "\"");
  auto lat = acc.perf_model->latency_s(layer.kind(), layer.params);
  if (!lat)
    throw UnsupportedLayerError("performance model of \"" + acc.id + "\" cannot express " +
                                to_string(layer.kind()) + " layer \"" + layer.id + "\"");
  return *lat;
}

CostBreakdown layer_cost(const AcceleratorSpec& acc, const LayerNode& layer, bool weight_pinned,
                         std::uint64_t input_fused_bytes, std::uint64_t output_fused_bytes) {
  if (input_fused_bytes > layer.ifm_bytes || output_fused_bytes > layer.ofm_bytes)
    throw InvariantError("layer_cost: fused bytes exceed activation size of \"" + layer.id + "\"");
  CostBreakdown c;
  c.weight_xfer = weight_pinned ? 0.0 : transfer_time(layer.weight_bytes, acc.bw_acc);
  c.input_xfer = transfer_time(layer.ifm_bytes - input_fused_bytes, acc.bw_acc);
  c.compute = compute_latency(acc, layer);
  c.output_xfer = transfer_time(layer.ofm_bytes - output_fused_bytes, acc.bw_acc);
  return c;
}

namespace {

std::unordered_map<std::string, PerfModelFactory>& perf_registry() {
  static std::unordered_map<std::string, PerfModelFactory> reg;
  static std::once_flag once;
  std::call_once(once, [] {
    reg["roofline"] = [](const json& j) -> std::shared_ptr<const PerformanceModel> {
      if (!j.contains("pe_count") || !j.at("pe_count").is_number())
        throw ParseError("perf_model.pe_count: missing or not a number");
      if (!j.contains("freq_hz") || !j.at("freq_hz").is_number())
        throw ParseError("perf_model.freq_hz: missing or not a number");
      std::map<LayerKind, double> eff;
      if (j.contains("efficiency")) {
        if (!j.at("efficiency").is_object())
          throw ParseError("perf_model.efficiency: must be an object");
        for (const auto& [k, v] : j.at("efficiency").items()) {
          if (!v.is_number()) throw ParseError("perf_model.efficiency." + k + ": not a number");
          eff[layer_kind_from_string(k)] = v.get<double>();
        }
      }
      return std::make_shared<RooflineModel>(j.at("pe_count").get<double>(),
                                             j.at("freq_hz").get<double>(), std::move(eff));
    };
  });
  return reg;
}

}  // namespace

void register_perf_model(const std::string& type, PerfModelFactory factory) {
  perf_registry()[type] = std::move(factory);
}

SystemSpec parse_system(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("system document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("accelerators") || !doc.at("accelerators").is_array())
    throw ParseError("system document: missing \"accelerators\" array");

  SystemSpec sys;
  std::size_t ai = 0;
  for (const auto& ja : doc.at("accelerators")) {
    const std::string where = "accelerators[" + std::to_string(ai++) + "]";
    if (!ja.is_object()) throw ParseError(where + ": expected an object");
    AcceleratorSpec a;
    if (!ja.contains("id") || !ja.at("id").is_string())
      throw ParseError(where + ": missing string field \"id\"");
    a.id = ja.at("id").get<std::string>();
    if (!ja.contains("supported_kinds") || !ja.at("supported_kinds").is_array() ||
        ja.at("supported_kinds").empty())
      throw ParseError(where + ".supported_kinds: must be a nonempty array");
    for (const auto& k : ja.at("supported_kinds")) {
      if (!k.is_string()) throw ParseError(where + ".supported_kinds: entries must be strings");
      a.supported_kinds.insert(layer_kind_from_string(k.get<std::string>()));
    }
    if (!ja.contains("bw_acc_bytes_per_s") || !ja.at("bw_acc_bytes_per_s").is_number())
      throw ParseError(where + ".bw_acc_bytes_per_s: missing or not a number");
    a.bw_acc = ja.at("bw_acc_bytes_per_s").get<double>();
    if (a.bw_acc <= 0) throw ParseError(where + ".bw_acc_bytes_per_s: must be > 0");
    if (!ja.contains("m_acc_bytes") || !ja.at("m_acc_bytes").is_number_unsigned())
      throw ParseError(where + ".m_acc_bytes: missing or not an unsigned integer");
    a.m_acc = ja.at("m_acc_bytes").get<std::uint64_t>();
    a.energy_per_mac = ja.value("energy_per_mac", 0.0);
    a.energy_per_byte = ja.value("energy_per_byte", 0.0);
    if (a.energy_per_mac < 0 || a.energy_per_byte < 0)
      throw ParseError(where + ": energy coefficients must be >= 0");
    if (!ja.contains("perf_model") || !ja.at("perf_model").is_object() ||
        !ja.at("perf_model").contains("type") || !ja.at("perf_model").at("type").is_string())
      throw ParseError(where + ".perf_model: missing object with string field \"type\"");
    a.perf_model_config = ja.at("perf_model");
    const std::string type = a.perf_model_config.at("type").get<std::string>();
    auto it = perf_registry().find(type);
    if (it == perf_registry().end())
      throw ParseError(where + ".perf_model.type: unknown type \"" + type + "\"");
    a.perf_model = it->second(a.perf_model_config);
    // A supported kind the model cannot express is a configuration error.
    for (LayerKind k : a.supported_kinds) {
      LayerParams probe;
      switch (k) {
        case LayerKind::Conv: probe = ConvParams{}; break;
        case LayerKind::FC: probe = FcParams{}; break;
        case LayerKind::LSTM: probe = LstmParams{}; break;
      }
      if (!a.perf_model->latency_s(k, probe))
        throw ParseError(where + ": perf_model cannot express supported kind " +
                         std::string(to_string(k)));
    }
    sys.accelerators.push_back(std::move(a));
  }
  if (sys.accelerators.empty()) throw ParseError("system document: needs >= 1 accelerator");
  for (std::size_t i = 0; i < sys.accelerators.size(); ++i)
    for (std::size_t j = i + 1; j < sys.accelerators.size(); ++j)
      if (sys.accelerators[i].id == sys.accelerators[j].id)
        throw ParseError("duplicate accelerator id \"" + sys.accelerators[i].id + "\"");
  return sys;
}

SystemSpec load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open system file \"" + path + "\"");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_system(ss.str());
}

std::string serialize_system(const SystemSpec& sys) {
  json doc;
  json accs = json::array();
  for (const auto& a : sys.accelerators) {
    json ja;
    ja["id"] = a.id;
    json kinds = json::array();
    for (LayerKind k : a.supported_kinds) kinds.push_back(to_string(k));
    ja["supported_kinds"] = std::move(kinds);
    ja["bw_acc_bytes_per_s"] = a.bw_acc;
    ja["m_acc_bytes"] = a.m_acc;
    ja["energy_per_mac"] = a.energy_per_mac;
    ja["energy_per_byte"] = a.energy_per_byte;
    ja["perf_model"] = a.perf_model_config;
    accs.push_back(std::move(ja));
  }
  doc["accelerators"] = std::move(accs);
  return doc.dump(2) + "\n";
}

void save_system(const SystemSpec& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write system file \"" + path + "\"");
  out << serialize_system(sys);
}

void check_kind_support(const ModelGraph& g, const SystemSpec& sys) {
  for (const auto& n : g.nodes()) {
    bool ok = false;
    for (const auto& a : sys.accelerators)
      if (a.supports(n.kind())) {
        ok = true;
        break;
      }
    if (!ok)
      throw UnsupportedLayerError("no accelerator supports " + std::string(to_string(n.kind())) +
                                  " layer \"" + n.id + "\"");
  }
}

}  // namespace h2h
