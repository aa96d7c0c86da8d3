#include "h2h/fixtures.hpp"

#include <cstdio>
#include <memory>
#include <random>

namespace h2h::fixtures {

namespace {

using Edge = std::pair<std::string, std::string>;

LayerNode conv(std::string id, std::uint64_t out_ch, std::uint64_t in_ch, std::uint64_t sp,
               std::uint64_t k = 3, std::uint64_t s = 1) {
  return {std::move(id), ConvParams{out_ch, in_ch, sp, sp, k, s}};
}

LayerNode fc(std::string id, std::uint64_t in, std::uint64_t out) {
  return {std::move(id), FcParams{in, out}};
}

LayerNode lstm(std::string id, std::uint64_t in, std::uint64_t hidden, std::uint64_t layers) {
  return {std::move(id), LstmParams{in, hidden, layers}};
}

std::string conv_id(const std::string& prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%s_c%02zu", prefix.c_str(), i);
  return buf;
}

struct Stage {
  std::size_t depth;
  std::uint64_t ch;
  std::uint64_t sp;
};

// Chain of 3x3 convolutions; returns the last layer's id.
std::string backbone(std::vector<LayerNode>& nodes, std::vector<Edge>& edges,
                     const std::string& prefix, std::uint64_t in_ch,
                     const std::vector<Stage>& stages) {
  std::string prev;
  std::size_t i = 0;
  for (const Stage& st : stages)
    for (std::size_t d = 0; d < st.depth; ++d) {
      std::string id = conv_id(prefix, i++);
      nodes.push_back(conv(id, st.ch, in_ch, st.sp));
      if (!prev.empty()) edges.emplace_back(prev, id);
      in_ch = st.ch;
      prev = std::move(id);
    }
  return prev;
}

// Ring of cross-talk edges between backbones at the given depth.
void cross_talk(std::vector<Edge>& edges, const std::vector<std::string>& prefixes,
                std::size_t depth) {
  for (std::size_t i = 0; i < prefixes.size(); ++i)
    edges.emplace_back(conv_id(prefixes[i], depth),
                       conv_id(prefixes[(i + 1) % prefixes.size()], depth + 1));
}

AcceleratorSpec accel(std::string id, std::set<LayerKind> kinds, double pe, double freq,
                      std::map<LayerKind, double> eff, std::uint64_t m_acc,
                      double bw = 1.25e9) {
  AcceleratorSpec a;
  a.id = std::move(id);
  a.supported_kinds = std::move(kinds);
  a.bw_acc = bw;
  a.m_acc = m_acc;
  a.energy_per_mac = 1e-12;
  a.energy_per_byte = 1e-10;
  a.perf_model = std::make_shared<RooflineModel>(pe, freq, eff);
  a.perf_model_config = {{"type", "roofline"}, {"pe_count", pe}, {"freq_hz", freq}};
  nlohmann::json e = nlohmann::json::object();
  for (const auto& [k, v] : eff) e[to_string(k)] = v;
  a.perf_model_config["efficiency"] = std::move(e);
  return a;
}

constexpr std::uint64_t kMiB = 1ull << 20;
constexpr std::uint64_t kGiB = 1ull << 30;

ModelGraph quad_vision_192m() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  const std::vector<std::string> bbs = {"b0", "b1", "b2", "b3"};
  const std::vector<Stage> stages = {{3, 64, 56}, {4, 128, 28}, {18, 256, 14}, {9, 512, 7}};
  for (const auto& b : bbs) {
    const std::string tail = backbone(nodes, edges, b, 3, stages);
    nodes.push_back(fc(b + "_fc0", 25088, 512));
    edges.emplace_back(tail, b + "_fc0");
    edges.emplace_back(b + "_fc0", "head_fc0");
  }
  cross_talk(edges, bbs, 12);
  cross_talk(edges, bbs, 24);
  nodes.push_back(fc("head_fc0", 2048, 512));
  nodes.push_back(fc("head_fc1", 512, 6));
  edges.emplace_back("head_fc0", "head_fc1");
  return {"mmmt_quad_vision_192m", std::move(nodes), std::move(edges)};
}

ModelGraph tri_vision_13m() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  const std::vector<std::string> bbs = {"b0", "b1", "b2"};
  const std::vector<Stage> stages = {{2, 64, 56}, {2, 128, 28}, {2, 256, 14}, {2, 512, 7}};
  for (const auto& b : bbs) {
    const std::string tail = backbone(nodes, edges, b, 3, stages);
    nodes.push_back(fc(b + "_fc0", 25088, 64));
    edges.emplace_back(tail, b + "_fc0");
    edges.emplace_back(b + "_fc0", "head_fc0");
  }
  cross_talk(edges, bbs, 3);
  nodes.push_back(fc("head_fc0", 192, 64));
  nodes.push_back(fc("head_fc1", 64, 10));
  edges.emplace_back("head_fc0", "head_fc1");
  return {"mmmt_tri_vision_13m", std::move(nodes), std::move(edges)};
}

ModelGraph penta_vision_365m() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  const std::vector<std::string> bbs = {"b0", "b1", "b2", "b3", "b4"};
  const std::vector<Stage> stages = {
      {2, 64, 112}, {2, 128, 56}, {3, 256, 28}, {3, 512, 14}, {3, 512, 7}};
  for (const auto& b : bbs) {
    const std::string tail = backbone(nodes, edges, b, 3, stages);
    nodes.push_back(fc(b + "_fc0", 25088, 2048));
    nodes.push_back(fc(b + "_fc1", 2048, 512));
    edges.emplace_back(tail, b + "_fc0");
    edges.emplace_back(b + "_fc0", b + "_fc1");
    edges.emplace_back(b + "_fc1", "head_fc0");
  }
  cross_talk(edges, bbs, 6);
  cross_talk(edges, bbs, 10);
  nodes.push_back(fc("head_fc0", 2560, 512));
  nodes.push_back(fc("head_fc1", 512, 8));
  edges.emplace_back("head_fc0", "head_fc1");
  return {"mmmt_penta_vision_365m", std::move(nodes), std::move(edges)};
}

ModelGraph quad_vision_25m() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  const std::vector<std::string> bbs = {"b0", "b1", "b2", "b3"};
  const std::vector<Stage> stages = {{2, 64, 56}, {2, 128, 28}, {3, 256, 14}, {2, 384, 7}};
  for (const auto& b : bbs) {
    const std::string tail = backbone(nodes, edges, b, 3, stages);
    nodes.push_back(fc(b + "_fc0", 18816, 128));
    edges.emplace_back(tail, b + "_fc0");
    edges.emplace_back(b + "_fc0", "head_fc0");
  }
  cross_talk(edges, bbs, 4);
  nodes.push_back(fc("head_fc0", 512, 128));
  nodes.push_back(fc("head_fc1", 128, 6));
  edges.emplace_back("head_fc0", "head_fc1");
  return {"mmmt_quad_vision_25m", std::move(nodes), std::move(edges)};
}

ModelGraph conv_lstm_16m() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  const std::vector<std::string> bbs = {"b0", "b1", "b2"};
  const std::vector<Stage> stages = {{2, 64, 28}, {2, 128, 14}, {2, 256, 7}};
  for (const auto& b : bbs) {
    const std::string tail = backbone(nodes, edges, b, 3, stages);
    edges.emplace_back(tail, "head_fc0");
  }
  cross_talk(edges, bbs, 1);
  nodes.push_back(lstm("ls_l0", 1024, 1024, 2));
  edges.emplace_back("ls_l0", "head_fc0");
  nodes.push_back(fc("head_fc0", 2048, 256));
  nodes.push_back(fc("head_fc1", 256, 12));
  edges.emplace_back("head_fc0", "head_fc1");
  return {"mmmt_conv_lstm_16m", std::move(nodes), std::move(edges)};
}

ModelGraph conv_lstm_8m() {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  const std::vector<std::string> bbs = {"b0", "b1"};
  const std::vector<Stage> stages = {{2, 48, 28}, {2, 96, 14}, {2, 192, 7}};
  for (const auto& b : bbs) {
    const std::string tail = backbone(nodes, edges, b, 3, stages);
    edges.emplace_back(tail, "head_fc0");
  }
  cross_talk(edges, bbs, 1);
  nodes.push_back(lstm("ls_l0", 512, 768, 1));
  edges.emplace_back("ls_l0", "head_fc0");
  nodes.push_back(fc("head_fc0", 1024, 128));
  nodes.push_back(fc("head_fc1", 128, 4));
  edges.emplace_back("head_fc0", "head_fc1");
  return {"mmmt_conv_lstm_8m", std::move(nodes), std::move(edges)};
}

}  // namespace

ModelGraph toy_two_branch() {
  // Wide-kernel stem: its weights overflow beta's DRAM, so the remapping
  // step merges the branches back onto alpha instead of offloading the stem.
  std::vector<LayerNode> nodes = {
      conv("l0_stem", 16, 3, 32, 11), conv("l1_a", 16, 16, 32),    conv("l2_a", 16, 16, 32),
      conv("l3_b", 16, 16, 32),       conv("l4_join", 16, 16, 32), conv("l5_head", 8, 16, 16),
  };
  std::vector<Edge> edges = {{"l0_stem", "l1_a"}, {"l1_a", "l2_a"},    {"l0_stem", "l3_b"},
                             {"l2_a", "l4_join"}, {"l3_b", "l4_join"}, {"l4_join", "l5_head"}};
  return {"toy_two_branch", std::move(nodes), std::move(edges)};
}

SystemSpec toy_system() {
  SystemSpec sys;
  sys.accelerators.push_back(accel("alpha", {LayerKind::Conv}, 1000, 1e6,
                                   {{LayerKind::Conv, 1.0}}, kMiB, 1e6));
  sys.accelerators.push_back(accel("beta", {LayerKind::Conv}, 800, 1e6,
                                   {{LayerKind::Conv, 1.0}}, 16 * 1024, 1e6));
  return sys;
}

const std::vector<NamedModel>& mmmt_suite() {
  static const std::vector<NamedModel> suite = [] {
    std::vector<NamedModel> v;
    v.push_back({"mmmt_quad_vision_192m", quad_vision_192m(), "b3_"});
    v.push_back({"mmmt_tri_vision_13m", tri_vision_13m(), "b2_"});
    v.push_back({"mmmt_penta_vision_365m", penta_vision_365m(), "b1_"});
    v.push_back({"mmmt_quad_vision_25m", quad_vision_25m(), "b3_"});
    v.push_back({"mmmt_conv_lstm_16m", conv_lstm_16m(), "ls_"});
    v.push_back({"mmmt_conv_lstm_8m", conv_lstm_8m(), "ls_"});
    return v;
  }();
  return suite;
}

SystemSpec system_12() {
  using K = LayerKind;
  const std::set<K> c = {K::Conv};
  const std::set<K> cfl = {K::Conv, K::FC, K::LSTM};
  const std::set<K> fl = {K::FC, K::LSTM};
  const std::set<K> l = {K::LSTM};
  SystemSpec sys;
  auto& a = sys.accelerators;
  a.push_back(accel("acc01", c, 1024, 125e6, {{K::Conv, 0.35}}, 8 * kGiB));
  a.push_back(accel("acc02", c, 768, 150e6, {{K::Conv, 0.32}}, 4 * kGiB));
  a.push_back(accel("acc03", c, 896, 110e6, {{K::Conv, 0.30}}, 4 * kGiB));
  a.push_back(accel("acc04", c, 512, 170e6, {{K::Conv, 0.30}}, 2 * kGiB));
  a.push_back(accel("acc05", c, 640, 135e6, {{K::Conv, 0.26}}, 2 * kGiB));
  a.push_back(accel("acc06", c, 576, 125e6, {{K::Conv, 0.25}}, kGiB));
  a.push_back(accel("acc07", c, 448, 140e6, {{K::Conv, 0.24}}, kGiB));
  a.push_back(accel("acc08", cfl, 384, 120e6,
                    {{K::Conv, 0.20}, {K::FC, 0.30}, {K::LSTM, 0.28}}, 512 * kMiB));
  a.push_back(accel("acc09", cfl, 320, 135e6,
                    {{K::Conv, 0.22}, {K::FC, 0.28}, {K::LSTM, 0.26}}, 512 * kMiB));
  a.push_back(accel("acc10", fl, 512, 140e6, {{K::FC, 0.40}, {K::LSTM, 0.38}}, kGiB));
  a.push_back(accel("acc11", l, 448, 160e6, {{K::LSTM, 0.42}}, 512 * kMiB));
  a.push_back(accel("acc12", l, 384, 150e6, {{K::LSTM, 0.40}}, 512 * kMiB));
  return sys;
}

ModelGraph random_dag(std::uint64_t seed, std::size_t min_nodes, std::size_t max_nodes) {
  std::mt19937_64 rng(seed);
  const std::size_t n = min_nodes + rng() % (max_nodes - min_nodes + 1);
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  char buf[16];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "n%03zu", i);
    const std::string id = buf;
    switch (rng() % 10) {
      case 7:
      case 8:
        nodes.push_back(fc(id, 64 << rng() % 4, 16 << rng() % 4));
        break;
      case 9:
        nodes.push_back(lstm(id, 32 << rng() % 3, 32 << rng() % 2, 1 + rng() % 2));
        break;
      default: {
        const std::uint64_t ch = 4ull << rng() % 4;
        const std::uint64_t sp = 4ull << rng() % 2;
        nodes.push_back(conv(id, ch, 4ull << rng() % 4, sp, rng() % 2 ? 3 : 1));
        break;
      }
    }
    if (i == 0 || rng() % 10 == 0) continue;  // extra entry points
    const std::size_t np = 1 + rng() % std::min<std::size_t>(i, 2);
    std::size_t prev = i;
    for (std::size_t p = 0; p < np; ++p) {
      const std::size_t span = 1 + rng() % std::min<std::size_t>(i, 3);
      const std::size_t src = i - span;
      if (src == prev) continue;
      prev = src;
      std::snprintf(buf, sizeof buf, "n%03zu", src);
      edges.emplace_back(buf, id);
    }
  }
  return {"random_dag_" + std::to_string(seed), std::move(nodes), std::move(edges)};
}

SystemSpec random_system(std::uint64_t seed, std::size_t min_accs, std::size_t max_accs) {
  using K = LayerKind;
  std::mt19937_64 rng(seed);
  const std::size_t n = min_accs + rng() % (max_accs - min_accs + 1);
  // One host link speed per system, like the bandwidth sweeps; DRAM tiers
  // sit above any single weight blob so capacity pressure is aggregate.
  static const std::uint64_t mems[] = {2 * kMiB, 16 * kMiB, kGiB};
  static const double bws[] = {1e5, 3e5, 1e6};
  const double bw = bws[rng() % 3];
  SystemSpec sys;
  char buf[8];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, "a%02zu", i);
    std::set<K> kinds;
    if (i == 0) {
      kinds = {K::Conv, K::FC, K::LSTM};
    } else {
      do {
        kinds.clear();
        if (rng() % 2) kinds.insert(K::Conv);
        if (rng() % 2) kinds.insert(K::FC);
        if (rng() % 2) kinds.insert(K::LSTM);
      } while (kinds.empty());
    }
    std::map<K, double> eff;
    for (K k : kinds) eff[k] = 0.5 + 0.05 * (rng() % 11);
    sys.accelerators.push_back(accel(buf, std::move(kinds), 16 << rng() % 2,
                                     1e6 * (2 + rng() % 4), std::move(eff),
                                     mems[rng() % 3], bw));
  }
  return sys;
}

ModelGraph remove_modality(const ModelGraph& g, const std::string& prefix) {
  std::vector<LayerNode> nodes;
  std::vector<Edge> edges;
  auto keep = [&](const std::string& id) { return id.rfind(prefix, 0) != 0; };
  for (const LayerNode& n : g.nodes()) {
    if (!keep(n.id)) continue;
    LayerNode copy = n;
    copy.weight_bytes = copy.ifm_bytes = copy.ofm_bytes = 0;
    nodes.push_back(std::move(copy));
  }
  for (const auto& [u, v] : g.edges()) {
    const std::string& a = g.node(u).id;
    const std::string& b = g.node(v).id;
    if (keep(a) && keep(b)) edges.emplace_back(a, b);
  }
  return {g.name() + "_minus_" + prefix, std::move(nodes), std::move(edges)};
}

}  // namespace h2h::fixtures
