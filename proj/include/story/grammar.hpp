// Graph-grammar genotypes.
//
// A production rule rewrites one occurrence of its left-hand pattern. The
// correspondence map says which matched nodes survive (and what they become);
// matched nodes without a counterpart are deleted, right-hand nodes without a
// preimage are created. Application is deterministic: a rule always rewrites
// the canonical-first occurrence of its pattern.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "story/graph.hpp"

namespace story {

using Rng = std::mt19937_64;

inline constexpr std::size_t kMaxLhsNodes = 4;
inline constexpr std::size_t kMaxRhsNodes = 6;
inline constexpr std::size_t kMaxRules = 12;
inline constexpr std::size_t kMaxInitialRules = 6;
inline constexpr int kMaxStepRepetitions = 3;

/// A concrete trope, or a wildcard matching any trope of `cls`.
struct NodeLabel {
  TropeClass cls = TropeClass::Hero;
  std::optional<Trope> trope;

  static NodeLabel exact(Trope t) { return {class_of(t), t}; }
  static NodeLabel wildcard(TropeClass c) { return {c, std::nullopt}; }

  bool matches(Trope t) const noexcept {
    return trope ? *trope == t : class_of(t) == cls;
  }

  /// Trope written for this label when it lands on `current` (nullopt for a
  /// freshly created node). Wildcards keep a matching trope and otherwise
  /// fall back to the class representative.
  Trope resolve(std::optional<Trope> current) const;

  friend bool operator==(const NodeLabel&, const NodeLabel&) = default;
};

struct PatternEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeKind kind = EdgeKind::Plain;

  friend bool operator==(const PatternEdge&, const PatternEdge&) = default;
};

struct RuleGraph {
  std::vector<NodeLabel> nodes;
  std::vector<PatternEdge> edges;

  bool has_edge(std::size_t s, std::size_t d, EdgeKind k) const noexcept;

  friend bool operator==(const RuleGraph&, const RuleGraph&) = default;
};

struct ProductionRule {
  RuleGraph lhs;
  RuleGraph rhs;
  /// lhs node -> rhs node; nullopt deletes the matched node.
  std::vector<std::optional<std::size_t>> correspondence;

  /// Empty when every invariant holds, otherwise one message per problem.
  std::vector<std::string> problems() const;
  bool valid() const { return problems().empty(); }

  /// Clamp the correspondence map back onto the current lhs/rhs shapes:
  /// entries past either side are dropped and duplicates unmapped.
  void repair();

  friend bool operator==(const ProductionRule&, const ProductionRule&) = default;
};

struct GraphGrammar {
  std::vector<ProductionRule> rules;

  std::vector<std::string> problems() const;
  bool valid() const { return problems().empty(); }

  friend bool operator==(const GraphGrammar&, const GraphGrammar&) = default;
};

struct RecipeStep {
  std::size_t rule = 0;
  int count = 1;

  friend bool operator==(const RecipeStep&, const RecipeStep&) = default;
};

/// Ordered (rule, repetitions) plan. A rule appears in at most one step;
/// adding it again adds to that step's count.
class Recipe {
 public:
  Recipe() = default;

  void add(std::size_t rule, int count);
  const std::vector<RecipeStep>& steps() const noexcept { return steps_; }
  bool empty() const noexcept { return steps_.empty(); }

  friend bool operator==(const Recipe&, const Recipe&) = default;

 private:
  std::vector<RecipeStep> steps_;
};

/// lhs node index -> graph node index.
using Binding = std::vector<std::size_t>;

/// Label- and edge-kind-preserving (non-induced) occurrence of the rule's
/// lhs whose canonical node positions are lexicographically smallest.
std::optional<Binding> match_rule(const NarrativeGraph& g, const ProductionRule& rule);

/// Rewrites the bound occurrence. Returns nullopt when the rewrite would
/// leave the graph without nodes.
std::optional<NarrativeGraph> rewrite(const NarrativeGraph& g,
                                      const ProductionRule& rule,
                                      const Binding& binding);

struct ApplicationTrace {
  struct Entry {
    std::size_t step = 0;
    std::size_t rule = 0;
    bool applied = false;
  };
  std::vector<Entry> entries;

  std::size_t applied() const;
  std::size_t skipped() const;
};

/// Starts from a copy of `target` and applies each step's rule `count`
/// times; applications without a match are skipped and traced.
NarrativeGraph apply_recipe(const NarrativeGraph& target,
                            const GraphGrammar& grammar, const Recipe& recipe,
                            ApplicationTrace* trace = nullptr);

ProductionRule random_rule(Rng& rng);
GraphGrammar random_grammar(Rng& rng);

/// Each recipe draws 1..|rules| rule references with 1..3 repetitions.
std::vector<Recipe> sample_recipes(const GraphGrammar& grammar, std::size_t n,
                                   Rng& rng);

/// Picks one rule position shared by both parents and swaps either the lhs
/// or the rhs graphs of those rules.
std::pair<GraphGrammar, GraphGrammar> crossover(const GraphGrammar& a,
                                                const GraphGrammar& b, Rng& rng);

enum class MutationKind : std::uint8_t { AddRule, RemoveRule, ModifyRule };

struct MutationResult {
  GraphGrammar grammar;
  MutationKind kind;
};

inline constexpr double kStructuralMutationRate = 0.1;

MutationResult mutate_traced(const GraphGrammar& g, Rng& rng);
GraphGrammar mutate(const GraphGrammar& g, Rng& rng);

}  // namespace story
