#include "story/patterns.hpp"

#include <algorithm>
#include <tuple>

namespace story {

namespace {

constexpr std::array<std::string_view, kPatternKindCount> kNames = {
    "SP",   "CP", "PDP", "ConfP",   "DerP",      "RevP",
    "APD",  "PP", "PT",  "Nothing", "BrokenLink"};

bool is_conflict(Trope t) { return t == Trope::Conflict; }
bool is_device(Trope t) { return class_of(t) == TropeClass::PlotDevice; }

struct Adjacency {
  std::vector<std::vector<std::size_t>> out;  // edge indices
  std::vector<std::vector<std::size_t>> in;
  std::vector<std::size_t> src, dst;          // per edge
};

Adjacency build_adjacency(const NarrativeGraph& g) {
  Adjacency adj;
  adj.out.resize(g.node_count());
  adj.in.resize(g.node_count());
  adj.src.reserve(g.edge_count());
  adj.dst.reserve(g.edge_count());
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    const auto& edge = g.edges()[e];
    const std::size_t s = *g.index_of(edge.src);
    const std::size_t d = *g.index_of(edge.dst);
    adj.src.push_back(s);
    adj.dst.push_back(d);
    adj.out[s].push_back(e);
    adj.in[d].push_back(e);
  }
  return adj;
}

}  // namespace

PatternLevel level_of(PatternKind k) noexcept {
  switch (k) {
    case PatternKind::Structure:
    case PatternKind::Character:
    case PatternKind::PlotDevice:
      return PatternLevel::Micro;
    case PatternKind::Nothing:
    case PatternKind::BrokenLink:
      return PatternLevel::Auxiliary;
    default:
      return PatternLevel::Meso;
  }
}

std::string_view pattern_name(PatternKind k) noexcept {
  return kNames[static_cast<std::size_t>(k)];
}

PatternSet::PatternSet(std::vector<PatternInstance> instances,
                       std::size_t node_count, std::size_t edge_count)
    : instances_(std::move(instances)),
      node_meso_(node_count, false),
      edge_meso_(edge_count, false) {
  for (const auto& inst : instances_) {
    ++counts_[static_cast<std::size_t>(inst.kind)];
    if (level_of(inst.kind) != PatternLevel::Meso) continue;
    for (auto n : inst.nodes) node_meso_[n] = true;
    for (auto e : inst.edges) edge_meso_[e] = true;
  }
}

std::vector<const PatternInstance*> PatternSet::of(PatternKind k) const {
  std::vector<const PatternInstance*> out;
  out.reserve(count(k));
  for (const auto& inst : instances_) {
    if (inst.kind == k) out.push_back(&inst);
  }
  return out;
}

bool PatternSet::node_in_meso(std::size_t node) const noexcept {
  return node < node_meso_.size() && node_meso_[node];
}

bool PatternSet::edge_in_meso(std::size_t edge) const noexcept {
  return edge < edge_meso_.size() && edge_meso_[edge];
}

PatternSet detect_patterns(const NarrativeGraph& g) {
  const auto& nodes = g.nodes();
  const std::size_t n = nodes.size();
  const Adjacency adj = build_adjacency(g);
  std::vector<PatternInstance> found;

  // Micro: one per node, by class.
  for (std::size_t i = 0; i < n; ++i) {
    PatternKind kind = PatternKind::Character;
    if (is_conflict(nodes[i].trope)) kind = PatternKind::Structure;
    else if (is_device(nodes[i].trope)) kind = PatternKind::PlotDevice;
    found.push_back({kind, {i}, {}});
  }

  // ConfP: X -PLAIN-> CONFLICT -PLAIN-> Y with X, Y outside the structure
  // class.
  const std::size_t first_conflict = found.size();
  for (std::size_t c = 0; c < n; ++c) {
    if (!is_conflict(nodes[c].trope)) continue;
    for (auto e_in : adj.in[c]) {
      if (g.edges()[e_in].kind != EdgeKind::Plain) continue;
      const std::size_t x = adj.src[e_in];
      if (is_conflict(nodes[x].trope)) continue;
      for (auto e_out : adj.out[c]) {
        if (g.edges()[e_out].kind != EdgeKind::Plain) continue;
        const std::size_t y = adj.dst[e_out];
        if (is_conflict(nodes[y].trope)) continue;
        PatternInstance inst{PatternKind::Conflict, {x, c, y}, {e_in, e_out}};
        inst.self_conflict = x == y;
        found.push_back(std::move(inst));
      }
    }
  }
  const std::size_t end_conflict = found.size();

  // RevP: PLAIN edge between two characters. Demotes their conflicts.
  std::vector<bool> reveal_source(n, false);
  for (std::size_t e = 0; e < g.edge_count(); ++e) {
    if (g.edges()[e].kind != EdgeKind::Plain) continue;
    const std::size_t a = adj.src[e], b = adj.dst[e];
    if (!is_character(nodes[a].trope) || !is_character(nodes[b].trope)) continue;
    found.push_back({PatternKind::Reveal, {a, b}, {e}});
    reveal_source[a] = true;
    for (std::size_t k = first_conflict; k < end_conflict; ++k) {
      auto& conf = found[k];
      const std::size_t x = conf.nodes[0], y = conf.nodes[2];
      if ((x == a && y == b) || (x == b && y == a)) conf.fake = true;
    }
  }

  // DerP: one per ENTAIL root (outgoing ENTAIL, no incoming ENTAIL); the
  // derivatives are everything reachable along ENTAIL edges.
  std::vector<bool> derivative(n, false);
  std::vector<bool> twist(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    auto entail = [&](std::size_t e) { return g.edges()[e].kind == EdgeKind::Entail; };
    if (std::none_of(adj.out[r].begin(), adj.out[r].end(), entail)) continue;
    if (std::any_of(adj.in[r].begin(), adj.in[r].end(), entail)) continue;

    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{r};
    seen[r] = true;
    std::vector<std::size_t> chain_edges;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (auto e : adj.out[u]) {
        if (!entail(e)) continue;
        chain_edges.push_back(e);
        const std::size_t v = adj.dst[e];
        if (!seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    PatternInstance inst{PatternKind::Derivative, {r}, {}};
    const Trope root = nodes[r].trope;
    for (std::size_t d = 0; d < n; ++d) {
      if (!seen[d] || d == r) continue;
      inst.nodes.push_back(d);
      derivative[d] = true;
      const Trope t = nodes[d].trope;
      if (is_character(root) && is_character(t) && class_of(t) != class_of(root)) {
        twist[d] = true;
      }
    }
    std::sort(chain_edges.begin(), chain_edges.end());
    inst.edges = std::move(chain_edges);
    found.push_back(std::move(inst));
  }

  // APD: plot device with at least one incoming edge from a non-device.
  std::vector<bool> active(n, false);
  for (std::size_t p = 0; p < n; ++p) {
    if (!is_device(nodes[p].trope)) continue;
    PatternInstance inst{PatternKind::ActiveDevice, {p}, {}};
    std::vector<std::size_t> triggers;
    for (auto e : adj.in[p]) {
      const std::size_t s = adj.src[e];
      if (is_device(nodes[s].trope)) continue;
      inst.edges.push_back(e);
      triggers.push_back(s);
    }
    if (inst.edges.empty()) continue;
    std::sort(triggers.begin(), triggers.end());
    triggers.erase(std::unique(triggers.begin(), triggers.end()), triggers.end());
    inst.nodes.insert(inst.nodes.end(), triggers.begin(), triggers.end());
    std::sort(inst.edges.begin(), inst.edges.end());
    active[p] = true;
    found.push_back(std::move(inst));
  }

  // PP / PT: one instance per distinct node.
  for (std::size_t i = 0; i < n; ++i) {
    if (derivative[i] || reveal_source[i] || active[i]) {
      found.push_back({PatternKind::PlotPoint, {i}, {}});
    }
    if (twist[i]) found.push_back({PatternKind::PlotTwist, {i}, {}});
  }

  // Auxiliary: whatever no meso-pattern touches.
  {
    std::vector<bool> node_used(n, false), edge_used(g.edge_count(), false);
    for (const auto& inst : found) {
      if (level_of(inst.kind) != PatternLevel::Meso) continue;
      for (auto v : inst.nodes) node_used[v] = true;
      for (auto e : inst.edges) edge_used[e] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!node_used[i]) found.push_back({PatternKind::Nothing, {i}, {}});
    }
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      if (!edge_used[e]) {
        found.push_back({PatternKind::BrokenLink, {}, {e}});
      }
    }
  }

  std::sort(found.begin(), found.end(),
            [](const PatternInstance& a, const PatternInstance& b) {
              return std::tie(a.kind, a.nodes, a.edges) <
                     std::tie(b.kind, b.nodes, b.edges);
            });

  PatternSet set(std::move(found), n, g.edge_count());
  for (std::size_t k = 0; k < set.instances().size(); ++k) {
    set.set_quality(k, instance_quality(set.instances()[k], g, set));
  }
  return set;
}

double instance_quality(const PatternInstance& inst, const NarrativeGraph& g,
                        const PatternSet& patterns) {
  switch (inst.kind) {
    case PatternKind::Structure:
    case PatternKind::Character:
    case PatternKind::PlotDevice: {
      const std::size_t node = inst.nodes.front();
      if (patterns.node_in_meso(node)) return 1.0;
      const auto& id = g.nodes()[node].id;
      const bool linked = std::any_of(g.edges().begin(), g.edges().end(),
                                      [&](const Edge& e) {
                                        return e.src == id || e.dst == id;
                                      });
      return linked ? 0.5 : 0.0;
    }
    case PatternKind::ActiveDevice: {
      const bool entailed = std::any_of(
          inst.edges.begin(), inst.edges.end(),
          [&](std::size_t e) { return g.edges()[e].kind == EdgeKind::Entail; });
      return entailed ? 1.0 : 0.5;
    }
    case PatternKind::PlotPoint: {
      const std::size_t node = inst.nodes.front();
      for (const auto* pt : patterns.of(PatternKind::PlotTwist)) {
        if (pt->nodes.front() == node) return 1.0;
      }
      return 0.0;
    }
    case PatternKind::PlotTwist:
      return 1.0;
    case PatternKind::Conflict:
      return inst.fake ? 0.0 : 1.0;
    case PatternKind::Derivative:
    case PatternKind::Reveal:
      return 1.0;
    case PatternKind::Nothing:
    case PatternKind::BrokenLink:
      return 0.0;
  }
  return 0.0;
}

nlohmann::ordered_json patterns_to_json(const PatternSet& patterns,
                                        const NarrativeGraph& g) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& inst : patterns.instances()) {
    nlohmann::ordered_json doc;
    doc["kind"] = std::string(pattern_name(inst.kind));
    doc["nodes"] = nlohmann::ordered_json::array();
    for (auto v : inst.nodes) doc["nodes"].push_back(g.nodes()[v].id);
    doc["edges"] = nlohmann::ordered_json::array();
    for (auto e : inst.edges) {
      const auto& edge = g.edges()[e];
      doc["edges"].push_back({{"src", edge.src},
                              {"dst", edge.dst},
                              {"kind", std::string(kind_name(edge.kind))}});
    }
    doc["quality"] = inst.quality;
    if (inst.kind == PatternKind::Conflict) {
      doc["self_conflict"] = inst.self_conflict;
      doc["fake"] = inst.fake;
    }
    out.push_back(std::move(doc));
  }
  return out;
}

nlohmann::ordered_json pattern_summary(const PatternSet& patterns) {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  for (std::size_t k = 0; k < kPatternKindCount; ++k) {
    const auto kind = static_cast<PatternKind>(k);
    out[std::string(pattern_name(kind))] = patterns.count(kind);
  }
  return out;
}

}  // namespace story
