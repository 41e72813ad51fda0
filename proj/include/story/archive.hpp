// Interactive constrained MAP-Elites archive.
//
// Cells are keyed by the bucketed values of the selected behaviour
// dimensions. Each cell keeps two bounded populations: feasible individuals
// ranked by coherence and infeasible ones ranked by infeasible fitness.
// The designer's graph (the target) seeds every phenotype and can be swapped
// at any time; constraints and dimensions can be changed the same way.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "story/evaluation.hpp"
#include "story/grammar.hpp"
#include "story/graph.hpp"

namespace story {

struct ArchiveConfig {
  DimensionSpec dims;
  std::size_t cell_capacity = 25;
  /// Parent pairs drawn per generation; each pair yields two children.
  std::size_t offspring_per_generation = 100;
  double mutation_probability = 0.5;
  std::size_t initial_population = 1000;
  std::size_t recipes_per_individual = 5;
  std::optional<LevelConstraints> constraints;
  std::uint64_t seed = 0;
  /// Worker threads for evaluating a generation's children. Results do not
  /// depend on this value.
  std::size_t eval_threads = 1;

  void validate() const;
};

nlohmann::ordered_json config_to_json(const ArchiveConfig& c);
ArchiveConfig config_from_json(const nlohmann::json& doc);  // throws ParseError

using CellCoords = std::vector<int>;

struct Individual {
  GraphGrammar genotype;
  Recipe best_recipe;
  NarrativeGraph phenotype;
  Evaluation evaluation;
  std::string digest;
  CellCoords coords;
};

/// Samples `recipes` recipes, applies each to the context's target and keeps
/// the best outcome (feasible first, then higher fitness; first one wins
/// ties).
Individual evaluate_genotype(GraphGrammar genotype, const EvaluationContext& ctx,
                             std::size_t recipes, Rng& rng);

/// Individual whose phenotype is given directly (used for the target itself).
Individual make_individual(GraphGrammar genotype, Recipe recipe,
                           NarrativeGraph phenotype, const EvaluationContext& ctx);

struct Cell {
  CellCoords coords;
  std::vector<Individual> feasible;
  std::vector<Individual> infeasible;

  const Individual* elite() const noexcept {
    return feasible.empty() ? nullptr : &feasible.front();
  }
  bool empty() const noexcept { return feasible.empty() && infeasible.empty(); }
  std::size_t size() const noexcept { return feasible.size() + infeasible.size(); }
};

struct GenerationReport {
  std::uint64_t generation = 0;
  std::size_t children = 0;
  std::size_t feasible_inserted = 0;
  std::size_t infeasible_inserted = 0;
  std::size_t rejected = 0;
  std::size_t new_uniques = 0;
  std::size_t feasible_children = 0;
  /// Means over this generation's feasible children (0 when there are none).
  double child_fitness = 0.0;
  double child_interestingness = 0.0;
};

struct ProjectedCell {
  int x = 0;
  int y = 0;
  double fitness = 0.0;
  std::string digest;
};

struct Snapshot {
  std::uint64_t generation = 0;
  double coverage = 0.0;
  Dimension x = Dimension::Step;
  Dimension y = Dimension::Interestingness;
  int granularity = 5;
  std::vector<ProjectedCell> grid;  // occupied cells, sorted by (x, y)
};

/// { "generation", "coverage", "grid": [{"cell": [i, j], "fitness",
/// "digest"}], "dims": [x, y], "granularity" }
nlohmann::ordered_json snapshot_to_json(const Snapshot& s);

struct ArchiveStats {
  std::size_t feasible = 0;
  std::size_t infeasible = 0;
  double mean_feasible_fitness = 0.0;
  double mean_fitness = 0.0;
  double mean_feasible_interestingness = 0.0;
};

class Archive {
 public:
  /// Creates `initial_population` random grammars, evaluates them against
  /// `target` and inserts them.
  Archive(ArchiveConfig config, NarrativeGraph target);

  GenerationReport step_generation();

  /// Swaps the target, refreshes every step value, re-buckets, and inserts an
  /// individual whose phenotype is the new target.
  void inject_target(NarrativeGraph target);

  /// Re-buckets every individual under `dims` (throws on invalid specs).
  void set_dimensions(DimensionSpec dims);

  /// Re-evaluates feasibility for every individual and re-buckets.
  void set_constraints(std::optional<LevelConstraints> constraints);

  Snapshot snapshot(Dimension x, Dimension y) const;
  Snapshot snapshot() const;  // first two selected dimensions

  /// Best feasible individual whose projection lands on (i, j).
  const Individual* projected_elite(Dimension x, Dimension y, int i, int j) const;

  /// Empty when every archive invariant holds.
  std::vector<std::string> check_invariants() const;

  ArchiveStats stats() const;

  const ArchiveConfig& config() const noexcept { return config_; }
  const NarrativeGraph& target() const noexcept { return ctx_.target(); }
  const EvaluationContext& context() const noexcept { return ctx_; }
  const std::map<CellCoords, Cell>& cells() const noexcept { return cells_; }
  std::uint64_t generation() const noexcept { return generation_; }
  std::size_t uniques() const noexcept { return uniques_.size(); }
  std::size_t individual_count() const noexcept;

  /// Checkpoint document; evaluations are recomputed on restore.
  nlohmann::ordered_json to_json() const;
  static Archive from_json(const nlohmann::json& doc);

 private:
  struct RestoreTag {};
  Archive(RestoreTag, ArchiveConfig config, NarrativeGraph target);

  CellCoords coords_for(const Evaluation& e) const;
  /// Returns true when the individual was kept.
  bool insert(Individual ind);
  void rebuild();
  const Individual& pick_parent();

  ArchiveConfig config_;
  EvaluationContext ctx_;
  Rng rng_;
  std::map<CellCoords, Cell> cells_;
  std::uint64_t generation_ = 0;
  std::set<std::string> uniques_;
};

}  // namespace story
