#include "story/graph.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_set>

#include "story/error.hpp"

namespace story {

namespace {

struct TropeInfo {
  Trope trope;
  std::string_view code;
  TropeClass cls;
};

constexpr std::array<TropeInfo, 10> kTropeTable = {{
    {Trope::Hero, "HERO", TropeClass::Hero},
    {Trope::Neo, "NEO", TropeClass::Hero},
    {Trope::Sh, "SH", TropeClass::Hero},
    {Trope::Enemy, "ENEMY", TropeClass::Villain},
    {Trope::Bad, "BAD", TropeClass::Villain},
    {Trope::Dra, "DRA", TropeClass::Villain},
    {Trope::Emp, "EMP", TropeClass::Villain},
    {Trope::Conflict, "CONFLICT", TropeClass::Structure},
    {Trope::Pld, "PLD", TropeClass::PlotDevice},
    {Trope::Mcg, "MCG", TropeClass::PlotDevice},
}};

int class_rank(TropeClass c) {
  switch (c) {
    case TropeClass::Structure: return 0;
    case TropeClass::Villain: return 1;
    case TropeClass::Hero: return 2;
    case TropeClass::PlotDevice: return 3;
  }
  return 4;
}

std::string edge_token(Trope src, EdgeKind kind, Trope dst) {
  std::string s = "(";
  s += code(src);
  s += ',';
  s += kind_name(kind);
  s += ',';
  s += code(dst);
  s += ')';
  return s;
}

}  // namespace

TropeClass class_of(Trope t) noexcept {
  return kTropeTable[static_cast<std::size_t>(t)].cls;
}

std::string_view code(Trope t) noexcept {
  return kTropeTable[static_cast<std::size_t>(t)].code;
}

std::optional<Trope> parse_trope(std::string_view s) noexcept {
  for (const auto& info : kTropeTable) {
    if (info.code == s) return info.trope;
  }
  return std::nullopt;
}

std::string_view class_name(TropeClass c) noexcept {
  switch (c) {
    case TropeClass::Hero: return "hero";
    case TropeClass::Villain: return "villain";
    case TropeClass::Structure: return "structure";
    case TropeClass::PlotDevice: return "plot_device";
  }
  return "?";
}

std::optional<TropeClass> parse_trope_class(std::string_view name) noexcept {
  for (auto c : kAllTropeClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

std::vector<Trope> tropes_of(TropeClass c) {
  std::vector<Trope> out;
  for (const auto& info : kTropeTable) {
    if (info.cls == c) out.push_back(info.trope);
  }
  return out;
}

int canonical_rank(Trope t) noexcept {
  // Codes never prefix each other, so comparing them as strings is a total
  // order; fold it into a small integer once.
  static const std::array<int, 10> ranks = [] {
    std::array<std::size_t, 10> order{};
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [](std::size_t a, std::size_t b) {
      const auto& x = kTropeTable[a];
      const auto& y = kTropeTable[b];
      return std::pair(class_rank(x.cls), x.code) <
             std::pair(class_rank(y.cls), y.code);
    });
    std::array<int, 10> r{};
    for (std::size_t i = 0; i < order.size(); ++i) {
      r[order[i]] = static_cast<int>(i);
    }
    return r;
  }();
  return ranks[static_cast<std::size_t>(t)];
}

std::string_view kind_name(EdgeKind k) noexcept {
  return k == EdgeKind::Plain ? "PLAIN" : "ENTAIL";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view name) noexcept {
  if (name == "PLAIN") return EdgeKind::Plain;
  if (name == "ENTAIL") return EdgeKind::Entail;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// NarrativeGraph
// ---------------------------------------------------------------------------

NarrativeGraph::NarrativeGraph(std::vector<Node> nodes, std::vector<Edge> edges)
    : nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw IntegrityError("narrative graph needs at least one node");
  }
  std::unordered_set<std::string_view> ids;
  for (const auto& n : nodes_) {
    if (n.id.empty()) throw IntegrityError("node with empty id");
    if (!ids.insert(n.id).second) {
      throw IntegrityError("duplicate node id '" + n.id + "'");
    }
  }
  edges_.reserve(edges.size());
  for (auto& e : edges) add_edge(std::move(e));
}

std::optional<std::size_t> NarrativeGraph::index_of(
    std::string_view id) const noexcept {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

const Node& NarrativeGraph::node(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw NotFound("unknown node id '" + std::string(id) + "'");
  return nodes_[*i];
}

bool NarrativeGraph::has_edge(std::string_view src, std::string_view dst,
                              EdgeKind kind) const noexcept {
  return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) {
    return e.kind == kind && e.src == src && e.dst == dst;
  });
}

std::string NarrativeGraph::fresh_id() const {
  for (std::size_t k = nodes_.size();; ++k) {
    std::string candidate = "n" + std::to_string(k);
    if (!index_of(candidate)) return candidate;
  }
}

const Node& NarrativeGraph::add_node(Trope trope, std::optional<std::string> id) {
  std::string new_id = id ? std::move(*id) : fresh_id();
  if (new_id.empty()) throw IntegrityError("node with empty id");
  if (index_of(new_id)) {
    throw Duplicate("node id '" + new_id + "' already exists");
  }
  nodes_.push_back(Node{std::move(new_id), trope});
  return nodes_.back();
}

void NarrativeGraph::remove_node(std::string_view id) {
  auto i = index_of(id);
  if (!i) throw NotFound("unknown node id '" + std::string(id) + "'");
  std::vector<bool> doomed(nodes_.size(), false);
  doomed[*i] = true;
  remove_nodes(doomed);
}

void NarrativeGraph::remove_nodes(const std::vector<bool>& doomed) {
  std::size_t remaining = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i >= doomed.size() || !doomed[i]) ++remaining;
  }
  if (remaining == 0) {
    throw IntegrityError("cannot remove the last node of a narrative graph");
  }
  std::unordered_set<std::string> gone;
  std::vector<Node> kept;
  kept.reserve(remaining);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i < doomed.size() && doomed[i]) {
      gone.insert(nodes_[i].id);
    } else {
      kept.push_back(std::move(nodes_[i]));
    }
  }
  nodes_ = std::move(kept);
  std::erase_if(edges_, [&](const Edge& e) {
    return gone.count(e.src) > 0 || gone.count(e.dst) > 0;
  });
}

void NarrativeGraph::add_edge(Edge e) {
  if (!index_of(e.src)) {
    throw IntegrityError("edge source '" + e.src + "' does not exist");
  }
  if (!index_of(e.dst)) {
    throw IntegrityError("edge target '" + e.dst + "' does not exist");
  }
  if (e.src == e.dst) {
    throw IntegrityError("self-loop on node '" + e.src + "'");
  }
  if (has_edge(e.src, e.dst, e.kind)) {
    throw Duplicate("edge " + e.src + "->" + e.dst + " (" +
                    std::string(kind_name(e.kind)) + ") already exists");
  }
  edges_.push_back(std::move(e));
}

void NarrativeGraph::remove_edge(const Edge& e) {
  auto it = std::find(edges_.begin(), edges_.end(), e);
  if (it == edges_.end()) {
    throw NotFound("no edge " + e.src + "->" + e.dst + " (" +
                   std::string(kind_name(e.kind)) + ")");
  }
  edges_.erase(it);
}

void NarrativeGraph::retype_node(std::string_view id, Trope trope) {
  auto i = index_of(id);
  if (!i) throw NotFound("unknown node id '" + std::string(id) + "'");
  nodes_[*i].trope = trope;
}

bool operator==(const NarrativeGraph& a, const NarrativeGraph& b) {
  if (a.nodes_.size() != b.nodes_.size() || a.edges_.size() != b.edges_.size()) {
    return false;
  }
  auto node_key = [](const Node& n) { return std::tuple(n.id, n.trope); };
  auto edge_key = [](const Edge& e) { return std::tuple(e.src, e.dst, e.kind); };
  std::set<std::tuple<std::string, Trope>> na, nb;
  for (const auto& n : a.nodes_) na.insert(node_key(n));
  for (const auto& n : b.nodes_) nb.insert(node_key(n));
  if (na != nb) return false;
  std::set<std::tuple<std::string, std::string, EdgeKind>> ea, eb;
  for (const auto& e : a.edges_) ea.insert(edge_key(e));
  for (const auto& e : b.edges_) eb.insert(edge_key(e));
  return ea == eb;
}

NarrativeGraph default_graph() {
  return NarrativeGraph(
      {{"n0", Trope::Hero}, {"n1", Trope::Conflict}, {"n2", Trope::Enemy}},
      {{"n0", "n1", EdgeKind::Plain}, {"n1", "n2", EdgeKind::Plain}});
}

NarrativeGraph mutate_graph(const NarrativeGraph& g, const GraphEdit& op) {
  NarrativeGraph out = g;
  std::visit(
      [&out](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, edit::AddNode>) {
          out.add_node(e.trope, e.id);
        } else if constexpr (std::is_same_v<T, edit::RemoveNode>) {
          out.remove_node(e.id);
        } else if constexpr (std::is_same_v<T, edit::AddEdge>) {
          if (!out.index_of(e.edge.src)) {
            throw NotFound("unknown node id '" + e.edge.src + "'");
          }
          if (!out.index_of(e.edge.dst)) {
            throw NotFound("unknown node id '" + e.edge.dst + "'");
          }
          out.add_edge(e.edge);
        } else if constexpr (std::is_same_v<T, edit::RemoveEdge>) {
          out.remove_edge(e.edge);
        } else {
          out.retype_node(e.id, e.trope);
        }
      },
      op);
  return out;
}

// ---------------------------------------------------------------------------
// Structure queries
// ---------------------------------------------------------------------------

Connectivity connectivity(const NarrativeGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : g.edges()) {
    auto a = find(*g.index_of(e.src));
    auto b = find(*g.index_of(e.dst));
    if (a != b) parent[a] = b;
  }
  std::vector<std::size_t> size(n, 0);
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) largest = std::max(largest, ++size[find(i)]);
  Connectivity c;
  c.reachable_fraction = static_cast<double>(largest) / static_cast<double>(n);
  c.fully_connected = largest == n;
  return c;
}

std::vector<std::string> canonical_tokens(const NarrativeGraph& g) {
  std::vector<Trope> node_tropes;
  node_tropes.reserve(g.node_count());
  for (const auto& n : g.nodes()) node_tropes.push_back(n.trope);
  std::sort(node_tropes.begin(), node_tropes.end(), [](Trope a, Trope b) {
    return canonical_rank(a) < canonical_rank(b);
  });

  using EdgeKey = std::tuple<int, int, int>;
  std::vector<EdgeKey> edge_keys;
  edge_keys.reserve(g.edge_count());
  for (const auto& e : g.edges()) {
    const Trope s = g.nodes()[*g.index_of(e.src)].trope;
    const Trope d = g.nodes()[*g.index_of(e.dst)].trope;
    edge_keys.emplace_back(canonical_rank(s), static_cast<int>(e.kind),
                           canonical_rank(d));
  }
  std::sort(edge_keys.begin(), edge_keys.end());

  std::array<Trope, 10> by_rank{};
  for (auto t : kAllTropes) by_rank[canonical_rank(t)] = t;

  std::vector<std::string> tokens;
  tokens.reserve(node_tropes.size() + edge_keys.size());
  for (auto t : node_tropes) tokens.emplace_back(code(t));
  for (const auto& [s, k, d] : edge_keys) {
    tokens.push_back(edge_token(by_rank[s], static_cast<EdgeKind>(k), by_rank[d]));
  }
  return tokens;
}

std::size_t levenshtein(const std::vector<std::string>& a,
                        const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t edit_distance(const NarrativeGraph& a, const NarrativeGraph& b) {
  return levenshtein(canonical_tokens(a), canonical_tokens(b));
}

std::string digest_tokens(const std::vector<std::string>& tokens) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& t : tokens) {
    for (char c : t) mix(static_cast<unsigned char>(c));
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string canonical_hash(const NarrativeGraph& g) {
  return digest_tokens(canonical_tokens(g));
}

std::vector<std::size_t> canonical_node_order(const NarrativeGraph& g) {
  std::vector<std::size_t> order(g.node_count());
  std::iota(order.begin(), order.end(), 0);
  const auto& nodes = g.nodes();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const int ra = canonical_rank(nodes[a].trope);
    const int rb = canonical_rank(nodes[b].trope);
    if (ra != rb) return ra < rb;
    return nodes[a].id < nodes[b].id;
  });
  return order;
}

}  // namespace story
