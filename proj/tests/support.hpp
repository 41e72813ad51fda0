// Shared helpers for the test suites: random graph generation and reference
// implementations that the production code is checked against.

#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "story/grammar.hpp"
#include "story/graph.hpp"
#include "story/patterns.hpp"

namespace testing {

using namespace story;

/// Random valid graph with 1..max_nodes nodes. Every ordered pair gets each
/// edge kind with probability `density`.
inline NarrativeGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes,
                                   double density = 0.25) {
  std::uniform_int_distribution<std::size_t> count(1, max_nodes);
  std::uniform_int_distribution<std::size_t> trope(0, kAllTropes.size() - 1);
  std::bernoulli_distribution edge(density);
  const std::size_t n = count(rng);
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < n; ++i)
    nodes.push_back({"v" + std::to_string(i), kAllTropes[trope(rng)]});
  std::vector<Edge> edges;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t d = 0; d < n; ++d)
      for (auto kind : {EdgeKind::Plain, EdgeKind::Entail})
        if (s != d && edge(rng)) edges.push_back({nodes[s].id, nodes[d].id, kind});
  return NarrativeGraph(std::move(nodes), std::move(edges));
}

/// Random connected graph: a random spanning tree plus extra edges.
inline NarrativeGraph random_connected_graph(std::mt19937_64& rng, std::size_t max_nodes) {
  std::uniform_int_distribution<std::size_t> count(1, max_nodes);
  std::uniform_int_distribution<std::size_t> trope(0, kAllTropes.size() - 1);
  std::bernoulli_distribution coin(0.5), extra(0.15);
  const std::size_t n = count(rng);
  std::vector<Node> nodes;
  for (std::size_t i = 0; i < n; ++i)
    nodes.push_back({"v" + std::to_string(i), kAllTropes[trope(rng)]});
  std::set<std::tuple<std::size_t, std::size_t, int>> keys;
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> parent(0, i - 1);
    std::size_t p = parent(rng);
    auto kind = coin(rng) ? EdgeKind::Plain : EdgeKind::Entail;
    if (coin(rng)) keys.insert({p, i, static_cast<int>(kind)});
    else keys.insert({i, p, static_cast<int>(kind)});
  }
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t d = 0; d < n; ++d)
      if (s != d && extra(rng)) keys.insert({s, d, coin(rng) ? 0 : 1});
  std::vector<Edge> edges;
  for (auto [s, d, k] : keys)
    edges.push_back({nodes[s].id, nodes[d].id, static_cast<EdgeKind>(k)});
  return NarrativeGraph(std::move(nodes), std::move(edges));
}

// ---------------------------------------------------------------------------
// Levenshtein: plain recursion with memoisation over (i, j) suffixes.
// ---------------------------------------------------------------------------

inline std::size_t reference_levenshtein(const std::vector<std::string>& a,
                                         const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i,
                                                               std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = a[i] == b[j] ? d(i + 1, j + 1) : 1 + d(i + 1, j + 1);
    best = std::min(best, 1 + d(i + 1, j));
    best = std::min(best, 1 + d(i, j + 1));
    return memo[key] = best;
  };
  return d(0, 0);
}

// ---------------------------------------------------------------------------
// Pattern oracle: every rule evaluated by exhaustive enumeration over node
// tuples and a transitive-closure matrix, sharing no code with the detector.
// ---------------------------------------------------------------------------

struct OracleInstance {
  PatternKind kind;
  std::vector<std::size_t> nodes;
  std::vector<std::size_t> edges;
  double quality = 0.0;
  bool self_conflict = false;
  bool fake = false;

  auto key() const { return std::tie(kind, nodes, edges); }
  bool operator<(const OracleInstance& o) const { return key() < o.key(); }
};

inline std::vector<OracleInstance> oracle_patterns(const NarrativeGraph& g) {
  const auto& V = g.nodes();
  const auto& E = g.edges();
  const std::size_t n = V.size(), m = E.size();
  auto idx = [&](const std::string& id) {
    for (std::size_t i = 0; i < n; ++i)
      if (V[i].id == id) return i;
    return n;
  };
  auto cls = [&](std::size_t i) { return class_of(V[i].trope); };
  auto conflict = [&](std::size_t i) { return V[i].trope == Trope::Conflict; };
  auto device = [&](std::size_t i) { return cls(i) == TropeClass::PlotDevice; };
  auto character = [&](std::size_t i) {
    return cls(i) == TropeClass::Hero || cls(i) == TropeClass::Villain;
  };
  auto find_edge = [&](std::size_t s, std::size_t d, EdgeKind k) -> std::optional<std::size_t> {
    for (std::size_t e = 0; e < m; ++e)
      if (idx(E[e].src) == s && idx(E[e].dst) == d && E[e].kind == k) return e;
    return std::nullopt;
  };

  std::vector<OracleInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    PatternKind k = conflict(i) ? PatternKind::Structure
                    : device(i) ? PatternKind::PlotDevice
                                : PatternKind::Character;
    out.push_back({k, {i}, {}});
  }

  // ConfP over all ordered triples.
  std::vector<std::size_t> confp;
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t y = 0; y < n; ++y) {
        if (!conflict(c) || conflict(x) || conflict(y)) continue;
        auto e1 = find_edge(x, c, EdgeKind::Plain);
        auto e2 = find_edge(c, y, EdgeKind::Plain);
        if (!e1 || !e2) continue;
        OracleInstance inst{PatternKind::Conflict, {x, c, y}, {*e1, *e2}};
        inst.self_conflict = x == y;
        confp.push_back(out.size());
        out.push_back(inst);
      }

  // RevP over all ordered character pairs.
  std::vector<bool> reveal_src(n, false);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (!character(a) || !character(b)) continue;
      auto e = find_edge(a, b, EdgeKind::Plain);
      if (!e) continue;
      out.push_back({PatternKind::Reveal, {a, b}, {*e}});
      reveal_src[a] = true;
      for (auto k : confp) {
        auto& c = out[k];
        std::set<std::size_t> ends{c.nodes[0], c.nodes[2]};
        if (ends == std::set<std::size_t>{a, b} && a != b) c.fake = true;
      }
    }

  // ENTAIL closure.
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (const auto& e : E)
    if (e.kind == EdgeKind::Entail) reach[idx(e.src)][idx(e.dst)] = true;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;

  std::vector<bool> derivative(n, false), twist(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    bool has_out = false, has_in = false;
    for (const auto& e : E) {
      if (e.kind != EdgeKind::Entail) continue;
      has_out |= idx(e.src) == r;
      has_in |= idx(e.dst) == r;
    }
    if (!has_out || has_in) continue;
    OracleInstance inst{PatternKind::Derivative, {r}, {}};
    for (std::size_t d = 0; d < n; ++d) {
      if (d == r || !reach[r][d]) continue;
      inst.nodes.push_back(d);
      derivative[d] = true;
      if (character(r) && character(d) && cls(r) != cls(d)) twist[d] = true;
    }
    for (std::size_t e = 0; e < m; ++e) {
      if (E[e].kind != EdgeKind::Entail) continue;
      std::size_t s = idx(E[e].src);
      if (s == r || reach[r][s]) inst.edges.push_back(e);
    }
    out.push_back(inst);
  }

  std::vector<bool> active(n, false);
  for (std::size_t p = 0; p < n; ++p) {
    if (!device(p)) continue;
    OracleInstance inst{PatternKind::ActiveDevice, {p}, {}};
    std::set<std::size_t> triggers;
    for (std::size_t e = 0; e < m; ++e) {
      if (idx(E[e].dst) != p || device(idx(E[e].src))) continue;
      inst.edges.push_back(e);
      triggers.insert(idx(E[e].src));
    }
    if (inst.edges.empty()) continue;
    inst.nodes.insert(inst.nodes.end(), triggers.begin(), triggers.end());
    active[p] = true;
    out.push_back(inst);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (derivative[i] || reveal_src[i] || active[i]) out.push_back({PatternKind::PlotPoint, {i}, {}});
    if (twist[i]) out.push_back({PatternKind::PlotTwist, {i}, {}});
  }

  std::vector<bool> node_meso(n, false), edge_meso(m, false);
  for (const auto& inst : out) {
    if (level_of(inst.kind) != PatternLevel::Meso) continue;
    for (auto v : inst.nodes) node_meso[v] = true;
    for (auto e : inst.edges) edge_meso[e] = true;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!node_meso[i]) out.push_back({PatternKind::Nothing, {i}, {}});
  for (std::size_t e = 0; e < m; ++e)
    if (!edge_meso[e]) out.push_back({PatternKind::BrokenLink, {}, {e}});

  for (auto& inst : out) {
    switch (level_of(inst.kind)) {
      case PatternLevel::Micro: {
        std::size_t v = inst.nodes[0];
        bool linked = false;
        for (const auto& e : E) linked |= idx(e.src) == v || idx(e.dst) == v;
        inst.quality = node_meso[v] ? 1.0 : linked ? 0.5 : 0.0;
        break;
      }
      case PatternLevel::Auxiliary:
        inst.quality = 0.0;
        break;
      case PatternLevel::Meso:
        if (inst.kind == PatternKind::Conflict) {
          inst.quality = inst.fake ? 0.0 : 1.0;
        } else if (inst.kind == PatternKind::ActiveDevice) {
          bool entail = false;
          for (auto e : inst.edges) entail |= E[e].kind == EdgeKind::Entail;
          inst.quality = entail ? 1.0 : 0.5;
        } else if (inst.kind == PatternKind::PlotPoint) {
          inst.quality = twist[inst.nodes[0]] ? 1.0 : 0.0;
        } else {
          inst.quality = 1.0;
        }
        break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Differences between the detector and the oracle, empty when they agree.
inline std::vector<std::string> compare_with_oracle(const NarrativeGraph& g) {
  std::vector<std::string> diffs;
  auto expected = oracle_patterns(g);
  auto actual = detect_patterns(g).instances();
  if (expected.size() != actual.size()) {
    diffs.push_back("instance count " + std::to_string(actual.size()) + " vs oracle " +
                    std::to_string(expected.size()));
    return diffs;
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& x = expected[i];
    const auto& y = actual[i];
    const std::string name(pattern_name(x.kind));
    if (x.kind != y.kind || x.nodes != y.nodes || x.edges != y.edges)
      diffs.push_back("instance " + std::to_string(i) + " (" + name + ") anchors differ");
    else if (x.quality != y.quality)
      diffs.push_back("instance " + std::to_string(i) + " (" + name + ") quality differs");
    else if (x.self_conflict != y.self_conflict || x.fake != y.fake)
      diffs.push_back("instance " + std::to_string(i) + " (" + name + ") flags differ");
  }
  return diffs;
}

// ---------------------------------------------------------------------------
// Matcher oracle: enumerate every injective assignment, keep the valid ones,
// pick the smallest by canonical positions.
// ---------------------------------------------------------------------------

inline std::vector<std::size_t> reference_canonical_positions(const NarrativeGraph& g) {
  // Structure < villain < hero < plot device, then code, then id.
  auto class_key = [](TropeClass c) {
    switch (c) {
      case TropeClass::Structure: return 0;
      case TropeClass::Villain: return 1;
      case TropeClass::Hero: return 2;
      case TropeClass::PlotDevice: return 3;
    }
    return 4;
  };
  std::vector<std::size_t> order(g.node_count());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = g.nodes()[a];
    const auto& y = g.nodes()[b];
    return std::make_tuple(class_key(class_of(x.trope)), std::string(code(x.trope)), x.id) <
           std::make_tuple(class_key(class_of(y.trope)), std::string(code(y.trope)), y.id);
  });
  std::vector<std::size_t> pos(g.node_count());
  for (std::size_t p = 0; p < order.size(); ++p) pos[order[p]] = p;
  return pos;
}

inline std::vector<Binding> all_matches(const NarrativeGraph& g, const ProductionRule& rule) {
  const std::size_t k = rule.lhs.nodes.size(), n = g.node_count();
  std::vector<Binding> found;
  Binding b(k);
  std::vector<bool> used(n, false);
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == k) {
      for (const auto& e : rule.lhs.edges)
        if (!g.has_edge(g.nodes()[b[e.src]].id, g.nodes()[b[e.dst]].id, e.kind)) return;
      found.push_back(b);
      return;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (used[v] || !rule.lhs.nodes[i].matches(g.nodes()[v].trope)) continue;
      used[v] = true;
      b[i] = v;
      go(i + 1);
      used[v] = false;
    }
  };
  if (k > 0) go(0);
  return found;
}

inline std::optional<Binding> reference_match(const NarrativeGraph& g, const ProductionRule& rule) {
  auto matches = all_matches(g, rule);
  if (matches.empty()) return std::nullopt;
  auto pos = reference_canonical_positions(g);
  auto key = [&](const Binding& b) {
    std::vector<std::size_t> k;
    for (auto v : b) k.push_back(pos[v]);
    return k;
  };
  return *std::min_element(matches.begin(), matches.end(),
                           [&](const Binding& a, const Binding& b) { return key(a) < key(b); });
}

}  // namespace testing
