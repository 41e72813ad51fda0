// Narrative graphs: typed trope nodes joined by typed directed edges.
//
// A NarrativeGraph is a plain value. Every public constructor and edit
// enforces the structural invariants (at least one node, unique ids, no
// dangling or self-loop edges, at most one edge per (src, dst, kind)), so any
// graph that exists is valid.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace story {

enum class Trope : std::uint8_t {
  Hero,
  Neo,
  Sh,
  Enemy,
  Bad,
  Dra,
  Emp,
  Conflict,
  Pld,
  Mcg,
};

enum class TropeClass : std::uint8_t { Hero, Villain, Structure, PlotDevice };

inline constexpr std::array<Trope, 10> kAllTropes = {
    Trope::Hero, Trope::Neo,  Trope::Sh,       Trope::Enemy, Trope::Bad,
    Trope::Dra,  Trope::Emp,  Trope::Conflict, Trope::Pld,   Trope::Mcg};

inline constexpr std::array<TropeClass, 4> kAllTropeClasses = {
    TropeClass::Hero, TropeClass::Villain, TropeClass::Structure,
    TropeClass::PlotDevice};

TropeClass class_of(Trope t) noexcept;
std::string_view code(Trope t) noexcept;
std::optional<Trope> parse_trope(std::string_view code) noexcept;

std::string_view class_name(TropeClass c) noexcept;
std::optional<TropeClass> parse_trope_class(std::string_view name) noexcept;

/// Tropes of a class in vocabulary order. The first entry is the class's
/// representative when a wildcard has to be instantiated.
std::vector<Trope> tropes_of(TropeClass c);

inline bool is_character(Trope t) noexcept {
  const auto c = class_of(t);
  return c == TropeClass::Hero || c == TropeClass::Villain;
}

/// Sort key used by canonical tokens and canonical node order:
/// structure < villain < hero < plot device, then by code.
int canonical_rank(Trope t) noexcept;

enum class EdgeKind : std::uint8_t { Plain, Entail };

std::string_view kind_name(EdgeKind k) noexcept;
std::optional<EdgeKind> parse_edge_kind(std::string_view name) noexcept;

struct Node {
  std::string id;
  Trope trope;

  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::string src;
  std::string dst;
  EdgeKind kind = EdgeKind::Plain;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class NarrativeGraph {
 public:
  /// Validates and throws IntegrityError on any violated invariant.
  NarrativeGraph(std::vector<Node> nodes, std::vector<Edge> edges);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  std::optional<std::size_t> index_of(std::string_view id) const noexcept;
  const Node& node(std::string_view id) const;  // throws NotFound
  bool has_edge(std::string_view src, std::string_view dst,
                EdgeKind kind) const noexcept;

  /// First unused "n<k>" with k >= node_count().
  std::string fresh_id() const;

  // In-place edits. Each keeps the invariants or throws without modifying
  // the graph.
  const Node& add_node(Trope trope, std::optional<std::string> id = {});
  void remove_node(std::string_view id);
  void add_edge(Edge e);
  void remove_edge(const Edge& e);
  void retype_node(std::string_view id, Trope trope);

  /// Drops every node whose index is flagged, with incident edges. Used by
  /// the rewriting engine; refuses to empty the graph.
  void remove_nodes(const std::vector<bool>& doomed);

  /// Set equality on nodes and edges.
  friend bool operator==(const NarrativeGraph& a, const NarrativeGraph& b);

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
};

/// HERO -PLAIN-> CONFLICT -PLAIN-> ENEMY.
NarrativeGraph default_graph();

namespace edit {
struct AddNode {
  Trope trope;
  std::optional<std::string> id;
};
struct RemoveNode {
  std::string id;
};
struct AddEdge {
  Edge edge;
};
struct RemoveEdge {
  Edge edge;
};
struct RetypeNode {
  std::string id;
  Trope trope;
};
}  // namespace edit

using GraphEdit = std::variant<edit::AddNode, edit::RemoveNode, edit::AddEdge,
                               edit::RemoveEdge, edit::RetypeNode>;

/// Returns a copy of `g` with the edit applied.
/// Throws NotFound for unknown ids and Duplicate for repeated edges.
NarrativeGraph mutate_graph(const NarrativeGraph& g, const GraphEdit& op);

struct Connectivity {
  bool fully_connected = true;
  double reachable_fraction = 1.0;
};

/// Edges are treated as undirected. The fraction is the size of the largest
/// weakly connected component over |V|.
Connectivity connectivity(const NarrativeGraph& g);

/// Id-independent serialization: node codes, then edge descriptors
/// "(SRC,KIND,DST)", each block sorted by canonical rank.
std::vector<std::string> canonical_tokens(const NarrativeGraph& g);

/// Token-level Levenshtein distance.
std::size_t levenshtein(const std::vector<std::string>& a,
                        const std::vector<std::string>& b);

std::size_t edit_distance(const NarrativeGraph& a, const NarrativeGraph& b);

/// 64-bit FNV-1a over the canonical tokens, as 16 hex digits.
std::string digest_tokens(const std::vector<std::string>& tokens);
std::string canonical_hash(const NarrativeGraph& g);

/// Node indices sorted by (canonical rank, id).
std::vector<std::size_t> canonical_node_order(const NarrativeGraph& g);

}  // namespace story
