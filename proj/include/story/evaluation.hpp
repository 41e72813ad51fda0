// Fitness, feasibility and behaviour dimensions for narrative graphs.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "story/graph.hpp"
#include "story/patterns.hpp"

namespace story {

/// Per-facet element budgets taken from the level being designed.
struct LevelConstraints {
  int heroes = 0;
  int enemies = 0;
  int quest_items = 0;

  /// Throws InvalidArgument on negative counts.
  void validate() const;

  friend bool operator==(const LevelConstraints&, const LevelConstraints&) = default;
};

enum class Dimension : std::uint8_t {
  Step,
  Interestingness,
  Diversity,
  Conflicts,
  PlotPoints,
  PlotTwists,
  PlotDevices,
};

inline constexpr std::size_t kDimensionCount = 7;
inline constexpr std::array<Dimension, kDimensionCount> kAllDimensions = {
    Dimension::Step,       Dimension::Interestingness, Dimension::Diversity,
    Dimension::Conflicts,  Dimension::PlotPoints,      Dimension::PlotTwists,
    Dimension::PlotDevices};

/// Wire ids: step, interestingness, diversity, conflicts, plot_points,
/// plot_twists, plot_devices.
std::string_view dimension_id(Dimension d) noexcept;
Dimension parse_dimension(std::string_view id);  // throws UnknownDimension

struct DimensionSpec {
  std::vector<Dimension> selected{Dimension::Step, Dimension::Interestingness};
  int granularity = 5;

  static DimensionSpec pair();
  static DimensionSpec all();

  /// Throws InvalidArgument when empty, duplicated, or granularity < 2.
  void validate() const;

  friend bool operator==(const DimensionSpec&, const DimensionSpec&) = default;
};

// Weights and thresholds.
inline constexpr double kFakeConflictPenalty = 0.3;
inline constexpr double kInfeasibleCohesionWeight = 0.5;
inline constexpr double kInfeasibleReachWeight = 0.25;
inline constexpr double kInfeasibleSelfConflictWeight = 0.25;
inline constexpr double kConflictThreshold = 5.0;  // omega
inline constexpr double kPatternThreshold = 5.0;   // delta
inline constexpr double kBaseTropeClasses = 4.0;

struct Evaluation {
  bool feasible = true;
  double fitness = 0.0;
  double cohesion = 0.0;
  double consistency = 0.0;
  double coherence = 0.0;
  double infeasible_fitness = 0.0;
  std::array<double, kDimensionCount> dimensions{};
  std::vector<std::string> violations;

  double dimension(Dimension d) const noexcept {
    return dimensions[static_cast<std::size_t>(d)];
  }
};

/// Everything an evaluation needs besides the graph itself. Caches the
/// target's canonical tokens so the step dimension costs one Levenshtein.
class EvaluationContext {
 public:
  EvaluationContext(NarrativeGraph target,
                    std::optional<LevelConstraints> constraints = {});

  const NarrativeGraph& target() const noexcept { return target_; }
  const std::vector<std::string>& target_tokens() const noexcept {
    return target_tokens_;
  }
  const std::optional<LevelConstraints>& constraints() const noexcept {
    return constraints_;
  }

 private:
  NarrativeGraph target_;
  std::vector<std::string> target_tokens_;
  std::optional<LevelConstraints> constraints_;
};

double cohesion(const NarrativeGraph& g, const PatternSet& patterns);
double consistency(const NarrativeGraph& g, const PatternSet& patterns);
double coherence(const NarrativeGraph& g, const PatternSet& patterns);
double coherence(const NarrativeGraph& g);

/// Number of nodes in more than one self-conflict, counting the surplus:
/// sum over nodes of max(0, self-ConfP count - 1).
std::size_t invalid_self_conflicts(const NarrativeGraph& g,
                                   const PatternSet& patterns);

double infeasible_fitness(const NarrativeGraph& g, const PatternSet& patterns);
double infeasible_fitness(const NarrativeGraph& g);

struct FeasibilityReport {
  bool feasible = true;
  /// Subset of "connectivity", "self_conflict", "heroes", "enemies",
  /// "quest_items", in that order.
  std::vector<std::string> violations;
};

FeasibilityReport check_feasibility(
    const NarrativeGraph& g, const std::optional<LevelConstraints>& constraints,
    const PatternSet& patterns);
FeasibilityReport check_feasibility(
    const NarrativeGraph& g,
    const std::optional<LevelConstraints>& constraints = {});

double interestingness(const PatternSet& patterns);
double diversity(const NarrativeGraph& g);

double step_value(const std::vector<std::string>& tokens,
                  const std::vector<std::string>& target_tokens);

double dimension_value(Dimension d, const NarrativeGraph& g,
                       const NarrativeGraph& target);
double dimension_value(std::string_view dimension_id, const NarrativeGraph& g,
                       const NarrativeGraph& target);

/// Full evaluation against a target snapshot and optional budgets.
Evaluation evaluate(const NarrativeGraph& g, const EvaluationContext& ctx);
Evaluation evaluate(const NarrativeGraph& g, const PatternSet& patterns,
                    const std::vector<std::string>& tokens,
                    const EvaluationContext& ctx);

/// min(floor(value * granularity), granularity - 1), value clamped to [0,1].
int bucketize(double value, int granularity);

nlohmann::ordered_json evaluation_to_json(const Evaluation& e);
nlohmann::ordered_json constraints_to_json(const LevelConstraints& c);
LevelConstraints constraints_from_json(const nlohmann::json& doc);
nlohmann::ordered_json dimensions_to_json(const DimensionSpec& spec);
DimensionSpec dimensions_from_json(const nlohmann::json& doc);

}  // namespace story
