#include "story/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "story/error.hpp"

namespace story {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double mean_quality(const PatternSet& p, PatternKind k) {
  const auto instances = p.of(k);
  if (instances.empty()) return 0.0;
  double sum = 0.0;
  for (const auto* inst : instances) sum += inst->quality;
  return sum / static_cast<double>(instances.size());
}

std::size_t explicit_conflicts(const PatternSet& p) {
  std::size_t n = 0;
  for (const auto* inst : p.of(PatternKind::Conflict)) {
    if (!inst->fake && !inst->self_conflict) ++n;
  }
  return n;
}

}  // namespace

void LevelConstraints::validate() const {
  if (heroes < 0 || enemies < 0 || quest_items < 0) {
    throw InvalidArgument("level constraint counts must be non-negative");
  }
}

std::string_view dimension_id(Dimension d) noexcept {
  switch (d) {
    case Dimension::Step: return "step";
    case Dimension::Interestingness: return "interestingness";
    case Dimension::Diversity: return "diversity";
    case Dimension::Conflicts: return "conflicts";
    case Dimension::PlotPoints: return "plot_points";
    case Dimension::PlotTwists: return "plot_twists";
    case Dimension::PlotDevices: return "plot_devices";
  }
  return "?";
}

Dimension parse_dimension(std::string_view id) {
  for (auto d : kAllDimensions) {
    if (dimension_id(d) == id) return d;
  }
  throw UnknownDimension("unknown dimension '" + std::string(id) + "'");
}

DimensionSpec DimensionSpec::pair() { return DimensionSpec{}; }

DimensionSpec DimensionSpec::all() {
  return DimensionSpec{{kAllDimensions.begin(), kAllDimensions.end()}, 5};
}

void DimensionSpec::validate() const {
  if (selected.empty()) throw InvalidArgument("no dimensions selected");
  std::set<Dimension> seen(selected.begin(), selected.end());
  if (seen.size() != selected.size()) {
    throw InvalidArgument("dimension selected twice");
  }
  if (granularity < 2) throw InvalidArgument("granularity must be at least 2");
}

EvaluationContext::EvaluationContext(NarrativeGraph target,
                                     std::optional<LevelConstraints> constraints)
    : target_(std::move(target)),
      target_tokens_(canonical_tokens(target_)),
      constraints_(constraints) {
  if (constraints_) constraints_->validate();
}

double cohesion(const NarrativeGraph& g, const PatternSet& patterns) {
  const double gaps = static_cast<double>(patterns.count(PatternKind::Nothing) +
                                          patterns.count(PatternKind::BrokenLink));
  const double size = static_cast<double>(g.node_count() + g.edge_count());
  return clamp01(1.0 - gaps / size);
}

double consistency(const NarrativeGraph&, const PatternSet& patterns) {
  double sum = 0.0;
  std::size_t micro = 0;
  for (const auto& inst : patterns.instances()) {
    if (level_of(inst.kind) != PatternLevel::Micro) continue;
    sum += inst.quality;
    ++micro;
  }
  const double mean = micro ? sum / static_cast<double>(micro) : 0.0;

  double penalty = 0.0;
  const auto conflicts = patterns.of(PatternKind::Conflict);
  if (!conflicts.empty()) {
    const auto fakes = std::count_if(conflicts.begin(), conflicts.end(),
                                     [](const auto* c) { return c->fake; });
    penalty = kFakeConflictPenalty * static_cast<double>(fakes) /
              static_cast<double>(conflicts.size());
  }
  return clamp01(mean - penalty);
}

double coherence(const NarrativeGraph& g, const PatternSet& patterns) {
  return clamp01(0.5 * consistency(g, patterns) + 0.5 * cohesion(g, patterns));
}

double coherence(const NarrativeGraph& g) { return coherence(g, detect_patterns(g)); }

std::size_t invalid_self_conflicts(const NarrativeGraph& g,
                                   const PatternSet& patterns) {
  std::vector<std::size_t> per_node(g.node_count(), 0);
  for (const auto* inst : patterns.of(PatternKind::Conflict)) {
    if (inst->self_conflict) ++per_node[inst->nodes.front()];
  }
  std::size_t surplus = 0;
  for (auto c : per_node) surplus += c > 1 ? c - 1 : 0;
  return surplus;
}

double infeasible_fitness(const NarrativeGraph& g, const PatternSet& patterns) {
  const double n = static_cast<double>(g.node_count());
  const double invalid = static_cast<double>(invalid_self_conflicts(g, patterns));
  return clamp01(kInfeasibleCohesionWeight * cohesion(g, patterns) +
                 kInfeasibleReachWeight * connectivity(g).reachable_fraction +
                 kInfeasibleSelfConflictWeight * (1.0 - invalid / n));
}

double infeasible_fitness(const NarrativeGraph& g) {
  return infeasible_fitness(g, detect_patterns(g));
}

FeasibilityReport check_feasibility(
    const NarrativeGraph& g, const std::optional<LevelConstraints>& constraints,
    const PatternSet& patterns) {
  FeasibilityReport report;
  if (!connectivity(g).fully_connected) report.violations.emplace_back("connectivity");
  if (invalid_self_conflicts(g, patterns) > 0) {
    report.violations.emplace_back("self_conflict");
  }
  if (constraints) {
    int heroes = 0, villains = 0, devices = 0;
    for (const auto& node : g.nodes()) {
      switch (class_of(node.trope)) {
        case TropeClass::Hero: ++heroes; break;
        case TropeClass::Villain: ++villains; break;
        case TropeClass::PlotDevice: ++devices; break;
        case TropeClass::Structure: break;
      }
    }
    if (heroes > constraints->heroes) report.violations.emplace_back("heroes");
    if (villains > constraints->enemies) report.violations.emplace_back("enemies");
    if (devices > constraints->quest_items) {
      report.violations.emplace_back("quest_items");
    }
  }
  report.feasible = report.violations.empty();
  return report;
}

FeasibilityReport check_feasibility(
    const NarrativeGraph& g, const std::optional<LevelConstraints>& constraints) {
  return check_feasibility(g, constraints, detect_patterns(g));
}

double interestingness(const PatternSet& patterns) {
  return clamp01(mean_quality(patterns, PatternKind::ActiveDevice) / 3.0 +
                 mean_quality(patterns, PatternKind::PlotPoint) / 3.0 +
                 mean_quality(patterns, PatternKind::PlotTwist) / 3.0);
}

double diversity(const NarrativeGraph& g) {
  std::array<bool, 4> present{};
  for (const auto& node : g.nodes()) {
    present[static_cast<std::size_t>(class_of(node.trope))] = true;
  }
  const auto classes = std::count(present.begin(), present.end(), true);
  return clamp01(static_cast<double>(classes) / kBaseTropeClasses);
}

double step_value(const std::vector<std::string>& tokens,
                  const std::vector<std::string>& target_tokens) {
  const double theta =
      static_cast<double>(std::max(tokens.size(), target_tokens.size()));
  if (theta == 0.0) return 0.0;
  return clamp01(static_cast<double>(levenshtein(tokens, target_tokens)) / theta);
}

namespace {

std::array<double, kDimensionCount> all_dimensions(
    const NarrativeGraph& g, const PatternSet& patterns,
    const std::vector<std::string>& tokens,
    const std::vector<std::string>& target_tokens) {
  std::array<double, kDimensionCount> d{};
  auto set = [&d](Dimension dim, double v) {
    d[static_cast<std::size_t>(dim)] = clamp01(v);
  };
  set(Dimension::Step, step_value(tokens, target_tokens));
  set(Dimension::Interestingness, interestingness(patterns));
  set(Dimension::Diversity, diversity(g));
  set(Dimension::Conflicts,
      static_cast<double>(explicit_conflicts(patterns)) / kConflictThreshold);
  set(Dimension::PlotPoints,
      static_cast<double>(patterns.count(PatternKind::PlotPoint)) / kPatternThreshold);
  set(Dimension::PlotTwists,
      static_cast<double>(patterns.count(PatternKind::PlotTwist)) / kPatternThreshold);
  set(Dimension::PlotDevices,
      static_cast<double>(patterns.count(PatternKind::ActiveDevice)) /
          kPatternThreshold);
  return d;
}

}  // namespace

double dimension_value(Dimension d, const NarrativeGraph& g,
                       const NarrativeGraph& target) {
  const auto patterns = detect_patterns(g);
  const auto dims =
      all_dimensions(g, patterns, canonical_tokens(g), canonical_tokens(target));
  return dims[static_cast<std::size_t>(d)];
}

double dimension_value(std::string_view id, const NarrativeGraph& g,
                       const NarrativeGraph& target) {
  return dimension_value(parse_dimension(id), g, target);
}

Evaluation evaluate(const NarrativeGraph& g, const PatternSet& patterns,
                    const std::vector<std::string>& tokens,
                    const EvaluationContext& ctx) {
  Evaluation e;
  e.cohesion = cohesion(g, patterns);
  e.consistency = consistency(g, patterns);
  e.coherence = clamp01(0.5 * e.consistency + 0.5 * e.cohesion);
  e.infeasible_fitness = infeasible_fitness(g, patterns);
  auto report = check_feasibility(g, ctx.constraints(), patterns);
  e.feasible = report.feasible;
  e.violations = std::move(report.violations);
  e.fitness = e.feasible ? e.coherence : e.infeasible_fitness;
  e.dimensions = all_dimensions(g, patterns, tokens, ctx.target_tokens());
  return e;
}

Evaluation evaluate(const NarrativeGraph& g, const EvaluationContext& ctx) {
  return evaluate(g, detect_patterns(g), canonical_tokens(g), ctx);
}

int bucketize(double value, int granularity) {
  const double v = clamp01(value);
  const int idx = static_cast<int>(std::floor(v * granularity));
  return std::min(idx, granularity - 1);
}

nlohmann::ordered_json evaluation_to_json(const Evaluation& e) {
  nlohmann::ordered_json doc;
  doc["feasible"] = e.feasible;
  doc["fitness"] = e.fitness;
  doc["cohesion"] = e.cohesion;
  doc["consistency"] = e.consistency;
  doc["coherence"] = e.coherence;
  doc["infeasible_fitness"] = e.infeasible_fitness;
  doc["dimensions"] = nlohmann::ordered_json::object();
  for (auto d : kAllDimensions) {
    doc["dimensions"][std::string(dimension_id(d))] = e.dimension(d);
  }
  doc["violations"] = e.violations;
  return doc;
}

nlohmann::ordered_json constraints_to_json(const LevelConstraints& c) {
  nlohmann::ordered_json doc;
  doc["heroes"] = c.heroes;
  doc["enemies"] = c.enemies;
  doc["quest_items"] = c.quest_items;
  return doc;
}

LevelConstraints constraints_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("", "constraints must be an object");
  LevelConstraints c;
  auto read = [&doc](const char* key, int& out) {
    auto it = doc.find(key);
    if (it == doc.end()) throw ParseError("", std::string("missing key '") + key + "'");
    if (!it->is_number_integer()) {
      throw ParseError(std::string("/") + key, "expected an integer");
    }
    out = it->get<int>();
  };
  read("heroes", c.heroes);
  read("enemies", c.enemies);
  read("quest_items", c.quest_items);
  c.validate();
  return c;
}

nlohmann::ordered_json dimensions_to_json(const DimensionSpec& spec) {
  nlohmann::ordered_json doc;
  doc["selected"] = nlohmann::ordered_json::array();
  for (auto d : spec.selected) doc["selected"].push_back(std::string(dimension_id(d)));
  doc["granularity"] = spec.granularity;
  return doc;
}

DimensionSpec dimensions_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("", "dimension spec must be an object");
  DimensionSpec spec;
  auto it = doc.find("selected");
  if (it == doc.end() || !it->is_array()) {
    throw ParseError("/selected", "expected an array of dimension ids");
  }
  spec.selected.clear();
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_string()) {
      throw ParseError("/selected/" + std::to_string(i), "expected a string");
    }
    spec.selected.push_back(parse_dimension((*it)[i].get<std::string>()));
  }
  if (auto g = doc.find("granularity"); g != doc.end()) {
    if (!g->is_number_integer()) throw ParseError("/granularity", "expected an integer");
    spec.granularity = g->get<int>();
  }
  spec.validate();
  return spec;
}

}  // namespace story
