#include "story/grammar.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <set>

namespace story {

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(Rng& rng, double p = 0.5) {
  return std::bernoulli_distribution(p)(rng);
}

constexpr double kWildcardRate = 0.25;

NodeLabel random_label(Rng& rng) {
  if (coin(rng, kWildcardRate)) {
    return NodeLabel::wildcard(kAllTropeClasses[uniform_index(rng, kAllTropeClasses.size())]);
  }
  return NodeLabel::exact(kAllTropes[uniform_index(rng, kAllTropes.size())]);
}

EdgeKind random_kind(Rng& rng) {
  return coin(rng) ? EdgeKind::Plain : EdgeKind::Entail;
}

enum class Side { Lhs, Rhs };

enum class EditKind { AddNode, RemoveNode, RetypeNode, AddEdge, RemoveEdge, FlipEdge };

constexpr std::array<EditKind, 6> kEditKinds = {
    EditKind::AddNode,  EditKind::RemoveNode, EditKind::RetypeNode,
    EditKind::AddEdge,  EditKind::RemoveEdge, EditKind::FlipEdge};

std::size_t max_nodes(Side s) { return s == Side::Lhs ? kMaxLhsNodes : kMaxRhsNodes; }
std::size_t min_nodes(Side s) { return s == Side::Lhs ? 1 : 0; }

RuleGraph& side_of(ProductionRule& r, Side s) { return s == Side::Lhs ? r.lhs : r.rhs; }

// Connects `fresh` to a random other node of `graph` (when there is one).
std::optional<PatternEdge> link_new_node(const RuleGraph& graph, std::size_t fresh,
                                         Rng& rng) {
  if (graph.nodes.size() < 2) return std::nullopt;
  std::size_t other = uniform_index(rng, graph.nodes.size() - 1);
  if (other >= fresh) ++other;
  PatternEdge e{fresh, other, random_kind(rng)};
  if (coin(rng)) std::swap(e.src, e.dst);
  return e;
}

void erase_node(RuleGraph& graph, std::size_t idx) {
  graph.nodes.erase(graph.nodes.begin() + static_cast<std::ptrdiff_t>(idx));
  std::erase_if(graph.edges, [idx](const PatternEdge& e) {
    return e.src == idx || e.dst == idx;
  });
  for (auto& e : graph.edges) {
    if (e.src > idx) --e.src;
    if (e.dst > idx) --e.dst;
  }
}

bool apply_edit(ProductionRule& rule, Side side, EditKind kind, Rng& rng) {
  RuleGraph& graph = side_of(rule, side);
  switch (kind) {
    case EditKind::AddNode: {
      if (graph.nodes.size() >= max_nodes(side)) return false;
      graph.nodes.push_back(random_label(rng));
      const std::size_t fresh = graph.nodes.size() - 1;
      auto link = link_new_node(graph, fresh, rng);
      if (link) graph.edges.push_back(*link);
      if (side == Side::Lhs) {
        rule.correspondence.push_back(std::nullopt);
        // Keep the new pattern node by giving it a counterpart when the
        // rhs has room.
        if (rule.rhs.nodes.size() < kMaxRhsNodes) {
          rule.rhs.nodes.push_back(graph.nodes.back());
          const std::size_t image = rule.rhs.nodes.size() - 1;
          rule.correspondence.back() = image;
          if (link) {
            const std::size_t other = link->src == fresh ? link->dst : link->src;
            if (auto other_image = rule.correspondence[other]) {
              PatternEdge e = *link;
              e.src = e.src == fresh ? image : *other_image;
              e.dst = e.dst == fresh ? image : *other_image;
              if (!rule.rhs.has_edge(e.src, e.dst, e.kind)) rule.rhs.edges.push_back(e);
            }
          }
        }
      }
      return true;
    }
    case EditKind::RemoveNode: {
      if (graph.nodes.size() <= min_nodes(side)) return false;
      const std::size_t idx = uniform_index(rng, graph.nodes.size());
      erase_node(graph, idx);
      if (side == Side::Lhs) {
        rule.correspondence.erase(rule.correspondence.begin() +
                                  static_cast<std::ptrdiff_t>(idx));
      } else {
        for (auto& c : rule.correspondence) {
          if (!c) continue;
          if (*c == idx) c.reset();
          else if (*c > idx) --*c;
        }
      }
      return true;
    }
    case EditKind::RetypeNode: {
      if (graph.nodes.empty()) return false;
      auto& label = graph.nodes[uniform_index(rng, graph.nodes.size())];
      NodeLabel next = label;
      for (int attempt = 0; attempt < 8 && next == label; ++attempt) {
        next = random_label(rng);
      }
      if (next == label) return false;
      label = next;
      return true;
    }
    case EditKind::AddEdge: {
      std::vector<PatternEdge> free;
      for (std::size_t s = 0; s < graph.nodes.size(); ++s) {
        for (std::size_t d = 0; d < graph.nodes.size(); ++d) {
          if (s == d) continue;
          for (auto k : {EdgeKind::Plain, EdgeKind::Entail}) {
            if (!graph.has_edge(s, d, k)) free.push_back({s, d, k});
          }
        }
      }
      if (free.empty()) return false;
      graph.edges.push_back(free[uniform_index(rng, free.size())]);
      return true;
    }
    case EditKind::RemoveEdge: {
      if (graph.edges.empty()) return false;
      graph.edges.erase(graph.edges.begin() +
                        static_cast<std::ptrdiff_t>(uniform_index(rng, graph.edges.size())));
      return true;
    }
    case EditKind::FlipEdge: {
      std::vector<std::size_t> flippable;
      for (std::size_t i = 0; i < graph.edges.size(); ++i) {
        const auto& e = graph.edges[i];
        const auto other = e.kind == EdgeKind::Plain ? EdgeKind::Entail : EdgeKind::Plain;
        if (!graph.has_edge(e.src, e.dst, other)) flippable.push_back(i);
      }
      if (flippable.empty()) return false;
      auto& e = graph.edges[flippable[uniform_index(rng, flippable.size())]];
      e.kind = e.kind == EdgeKind::Plain ? EdgeKind::Entail : EdgeKind::Plain;
      return true;
    }
  }
  return false;
}

// One atomic edit somewhere in the rule. Tries edit kinds in random order
// until one applies; retyping always can, so this never fails.
void modify_rule(ProductionRule& rule, Rng& rng, std::optional<Side> only = {}) {
  std::vector<std::pair<Side, EditKind>> options;
  for (auto side : {Side::Lhs, Side::Rhs}) {
    if (only && side != *only) continue;
    for (auto k : kEditKinds) options.emplace_back(side, k);
  }
  std::shuffle(options.begin(), options.end(), rng);
  for (const auto& [side, kind] : options) {
    if (apply_edit(rule, side, kind, rng)) return;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Rule structure
// ---------------------------------------------------------------------------

Trope NodeLabel::resolve(std::optional<Trope> current) const {
  if (trope) return *trope;
  if (current && class_of(*current) == cls) return *current;
  return tropes_of(cls).front();
}

bool RuleGraph::has_edge(std::size_t s, std::size_t d, EdgeKind k) const noexcept {
  return std::any_of(edges.begin(), edges.end(), [&](const PatternEdge& e) {
    return e.src == s && e.dst == d && e.kind == k;
  });
}

namespace {

void check_rule_graph(const RuleGraph& g, const std::string& name,
                      std::vector<std::string>& out) {
  std::set<std::tuple<std::size_t, std::size_t, EdgeKind>> seen;
  for (const auto& e : g.edges) {
    if (e.src >= g.nodes.size() || e.dst >= g.nodes.size()) {
      out.push_back(name + " edge references a missing node");
    } else if (e.src == e.dst) {
      out.push_back(name + " edge is a self-loop");
    }
    if (!seen.insert({e.src, e.dst, e.kind}).second) {
      out.push_back(name + " has a duplicate edge");
    }
  }
  for (const auto& label : g.nodes) {
    if (label.trope && class_of(*label.trope) != label.cls) {
      out.push_back(name + " label class disagrees with its trope");
    }
  }
}

}  // namespace

std::vector<std::string> ProductionRule::problems() const {
  std::vector<std::string> out;
  if (lhs.nodes.empty() || lhs.nodes.size() > kMaxLhsNodes) {
    out.push_back("lhs must have 1.." + std::to_string(kMaxLhsNodes) + " nodes");
  }
  if (rhs.nodes.size() > kMaxRhsNodes) {
    out.push_back("rhs must have at most " + std::to_string(kMaxRhsNodes) + " nodes");
  }
  check_rule_graph(lhs, "lhs", out);
  check_rule_graph(rhs, "rhs", out);
  if (correspondence.size() != lhs.nodes.size()) {
    out.push_back("correspondence size differs from lhs node count");
  }
  std::set<std::size_t> images;
  for (const auto& c : correspondence) {
    if (!c) continue;
    if (*c >= rhs.nodes.size()) out.push_back("correspondence points past rhs");
    if (!images.insert(*c).second) out.push_back("correspondence is not injective");
  }
  return out;
}

void ProductionRule::repair() {
  correspondence.resize(lhs.nodes.size());
  std::set<std::size_t> images;
  for (auto& c : correspondence) {
    if (!c) continue;
    if (*c >= rhs.nodes.size() || !images.insert(*c).second) c.reset();
  }
}

std::vector<std::string> GraphGrammar::problems() const {
  std::vector<std::string> out;
  if (rules.empty() || rules.size() > kMaxRules) {
    out.push_back("grammar must have 1.." + std::to_string(kMaxRules) + " rules");
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (auto& p : rules[i].problems()) {
      out.push_back("rule " + std::to_string(i) + ": " + p);
    }
  }
  return out;
}

void Recipe::add(std::size_t rule, int count) {
  for (auto& step : steps_) {
    if (step.rule == rule) {
      step.count += count;
      return;
    }
  }
  steps_.push_back({rule, count});
}

// ---------------------------------------------------------------------------
// Matching and rewriting
// ---------------------------------------------------------------------------

std::optional<Binding> match_rule(const NarrativeGraph& g, const ProductionRule& rule) {
  const auto& lhs = rule.lhs;
  const std::size_t k = lhs.nodes.size();
  const std::size_t n = g.node_count();
  if (k == 0 || k > n) return std::nullopt;

  // adjacency[s * n + d]: bit 0 PLAIN, bit 1 ENTAIL.
  std::vector<std::uint8_t> adjacency(n * n, 0);
  for (const auto& e : g.edges()) {
    const auto s = *g.index_of(e.src);
    const auto d = *g.index_of(e.dst);
    adjacency[s * n + d] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(e.kind));
  }
  // Edges are checked once both endpoints are bound.
  std::vector<std::vector<const PatternEdge*>> closes(k);
  for (const auto& e : lhs.edges) closes[std::max(e.src, e.dst)].push_back(&e);

  const auto order = canonical_node_order(g);
  Binding binding(k);
  std::vector<bool> used(n, false);

  std::function<bool(std::size_t)> extend = [&](std::size_t i) -> bool {
    if (i == k) return true;
    for (auto v : order) {
      if (used[v] || !lhs.nodes[i].matches(g.nodes()[v].trope)) continue;
      binding[i] = v;
      const bool edges_ok = std::all_of(
          closes[i].begin(), closes[i].end(), [&](const PatternEdge* e) {
            const auto bit = static_cast<std::uint8_t>(1u << static_cast<unsigned>(e->kind));
            return (adjacency[binding[e->src] * n + binding[e->dst]] & bit) != 0;
          });
      if (!edges_ok) continue;
      used[v] = true;
      if (extend(i + 1)) return true;
      used[v] = false;
    }
    return false;
  };
  if (!extend(0)) return std::nullopt;
  return binding;
}

std::optional<NarrativeGraph> rewrite(const NarrativeGraph& g,
                                      const ProductionRule& rule,
                                      const Binding& binding) {
  const auto& lhs = rule.lhs;
  const auto& rhs = rule.rhs;

  std::vector<std::optional<std::size_t>> preimage(rhs.nodes.size());
  std::size_t doomed_count = 0;
  for (std::size_t i = 0; i < lhs.nodes.size(); ++i) {
    if (rule.correspondence[i]) preimage[*rule.correspondence[i]] = i;
    else ++doomed_count;
  }
  const std::size_t created = static_cast<std::size_t>(
      std::count(preimage.begin(), preimage.end(), std::nullopt));
  if (g.node_count() - doomed_count + created == 0) return std::nullopt;

  NarrativeGraph out = g;
  std::vector<std::string> bound_ids(lhs.nodes.size());
  for (std::size_t i = 0; i < lhs.nodes.size(); ++i) {
    bound_ids[i] = g.nodes()[binding[i]].id;
  }

  // Retype survivors.
  for (std::size_t i = 0; i < lhs.nodes.size(); ++i) {
    if (auto j = rule.correspondence[i]) {
      const Trope current = g.nodes()[binding[i]].trope;
      out.retype_node(bound_ids[i], rhs.nodes[*j].resolve(current));
    }
  }
  // Drop pattern edges between survivors that the rhs does not keep.
  for (const auto& e : lhs.edges) {
    const auto cs = rule.correspondence[e.src];
    const auto cd = rule.correspondence[e.dst];
    if (cs && cd && !rhs.has_edge(*cs, *cd, e.kind)) {
      Edge edge{bound_ids[e.src], bound_ids[e.dst], e.kind};
      if (out.has_edge(edge.src, edge.dst, edge.kind)) out.remove_edge(edge);
    }
  }
  // Create new nodes, then delete the unmapped matched ones.
  std::vector<std::string> rhs_ids(rhs.nodes.size());
  for (std::size_t j = 0; j < rhs.nodes.size(); ++j) {
    if (preimage[j]) {
      rhs_ids[j] = bound_ids[*preimage[j]];
    } else {
      rhs_ids[j] = out.add_node(rhs.nodes[j].resolve(std::nullopt)).id;
    }
  }
  if (doomed_count > 0) {
    std::vector<bool> doomed(out.node_count(), false);
    for (std::size_t i = 0; i < lhs.nodes.size(); ++i) {
      if (!rule.correspondence[i]) doomed[binding[i]] = true;
    }
    out.remove_nodes(doomed);
  }
  for (const auto& e : rhs.edges) {
    if (!out.has_edge(rhs_ids[e.src], rhs_ids[e.dst], e.kind)) {
      out.add_edge(Edge{rhs_ids[e.src], rhs_ids[e.dst], e.kind});
    }
  }
  return out;
}

std::size_t ApplicationTrace::applied() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const Entry& e) { return e.applied; }));
}

std::size_t ApplicationTrace::skipped() const { return entries.size() - applied(); }

NarrativeGraph apply_recipe(const NarrativeGraph& target, const GraphGrammar& grammar,
                            const Recipe& recipe, ApplicationTrace* trace) {
  NarrativeGraph current = target;
  for (std::size_t s = 0; s < recipe.steps().size(); ++s) {
    const auto& step = recipe.steps()[s];
    const auto& rule = grammar.rules.at(step.rule);
    for (int c = 0; c < step.count; ++c) {
      bool applied = false;
      if (auto binding = match_rule(current, rule)) {
        if (auto next = rewrite(current, rule, *binding)) {
          current = std::move(*next);
          applied = true;
        }
      }
      if (trace) trace->entries.push_back({s, step.rule, applied});
    }
  }
  return current;
}

// ---------------------------------------------------------------------------
// Variation
// ---------------------------------------------------------------------------

ProductionRule random_rule(Rng& rng) {
  ProductionRule rule;
  rule.lhs.nodes.push_back(random_label(rng));
  if (coin(rng)) {
    rule.lhs.nodes.push_back(random_label(rng));
    PatternEdge e{0, 1, random_kind(rng)};
    if (coin(rng)) std::swap(e.src, e.dst);
    rule.lhs.edges.push_back(e);
  }
  rule.rhs = rule.lhs;
  for (std::size_t i = 0; i < rule.lhs.nodes.size(); ++i) {
    rule.correspondence.emplace_back(i);
  }
  modify_rule(rule, rng, Side::Rhs);
  return rule;
}

GraphGrammar random_grammar(Rng& rng) {
  GraphGrammar g;
  const int rules = uniform_int(rng, 1, static_cast<int>(kMaxInitialRules));
  for (int i = 0; i < rules; ++i) g.rules.push_back(random_rule(rng));
  return g;
}

std::vector<Recipe> sample_recipes(const GraphGrammar& grammar, std::size_t n, Rng& rng) {
  std::vector<Recipe> out;
  out.reserve(n);
  const int rules = static_cast<int>(grammar.rules.size());
  for (std::size_t r = 0; r < n; ++r) {
    Recipe recipe;
    const int draws = uniform_int(rng, 1, rules);
    for (int d = 0; d < draws; ++d) {
      const auto rule = static_cast<std::size_t>(uniform_int(rng, 0, rules - 1));
      recipe.add(rule, uniform_int(rng, 1, kMaxStepRepetitions));
    }
    out.push_back(std::move(recipe));
  }
  return out;
}

std::pair<GraphGrammar, GraphGrammar> crossover(const GraphGrammar& a,
                                                const GraphGrammar& b, Rng& rng) {
  GraphGrammar x = a, y = b;
  const std::size_t shared = std::min(a.rules.size(), b.rules.size());
  const std::size_t i = uniform_index(rng, shared);
  auto& rx = x.rules[i];
  auto& ry = y.rules[i];
  if (coin(rng)) {
    std::swap(rx.lhs, ry.lhs);
  } else {
    std::swap(rx.rhs, ry.rhs);
  }
  rx.repair();
  ry.repair();
  return {std::move(x), std::move(y)};
}

MutationResult mutate_traced(const GraphGrammar& g, Rng& rng) {
  MutationResult result{g, MutationKind::ModifyRule};
  auto& rules = result.grammar.rules;
  if (coin(rng, kStructuralMutationRate)) {
    bool add = coin(rng);
    if (rules.size() <= 1) add = true;
    if (rules.size() >= kMaxRules) add = false;
    if (add) {
      rules.push_back(random_rule(rng));
      result.kind = MutationKind::AddRule;
    } else {
      rules.erase(rules.begin() +
                  static_cast<std::ptrdiff_t>(uniform_index(rng, rules.size())));
      result.kind = MutationKind::RemoveRule;
    }
    return result;
  }
  modify_rule(rules[uniform_index(rng, rules.size())], rng);
  return result;
}

GraphGrammar mutate(const GraphGrammar& g, Rng& rng) {
  return mutate_traced(g, rng).grammar;
}

}  // namespace story
