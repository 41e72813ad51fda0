// Headless experiment runner: repeated archive runs on a target, metric
// series, expressive-range matrices and CSV export.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "story/archive.hpp"
#include "story/evaluation.hpp"
#include "story/graph.hpp"

namespace story {

inline constexpr std::size_t kCheckpointEvery = 50;

struct ExperimentConfig {
  /// "1", "2", "3", a single design step such as "4.2", "4" for the whole
  /// design schedule, or a path to a graph document.
  std::string experiment = "1";
  std::size_t runs = 5;
  /// Generations per run; per design step when experiment is "4".
  std::size_t generations = 500;
  bool all_dims = false;
  bool constraints = true;
  /// Budgets for custom graph files (builtins carry their own).
  std::optional<LevelConstraints> budgets;
  std::uint64_t seed = 0;
  std::size_t offspring_per_generation = 100;
  std::size_t initial_population = 1000;
  std::size_t cell_capacity = 25;
  /// Concurrent runs; 0 picks the hardware concurrency.
  std::size_t threads = 0;
  /// When set, each run checkpoints here and resumes from it.
  std::optional<std::filesystem::path> checkpoint_dir;

  /// Three runs of 100 generations (50 per design step for "4").
  static ExperimentConfig desk(std::string experiment);
  /// Five runs; 500 generations for pair dims, 250 for all dims, 50 per
  /// design step.
  static ExperimentConfig full(std::string experiment, bool all_dims);

  void validate() const;
  bool is_schedule() const { return experiment == "4"; }
  std::string label() const;
};

nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& c);

struct GenerationRecord {
  std::size_t generation = 0;
  std::size_t step = 0;  // index into the design schedule, 0 otherwise
  double coverage = 0.0;
  std::size_t uniques = 0;
  double fitness = 0.0;      // mean over feasible individuals
  double fitness_all = 0.0;  // mean over every individual
  double interestingness = 0.0;
  std::size_t feasible = 0;
  std::size_t infeasible = 0;
};

/// Best feasible fitness per projected step x interestingness cell.
struct EraMatrix {
  std::size_t run = 0;
  std::size_t generation = 0;
  int granularity = 5;
  std::vector<std::optional<double>> cells;  // row-major, row = y bucket

  std::optional<double> at(int x, int y) const {
    return cells[static_cast<std::size_t>(y * granularity + x)];
  }
};

EraMatrix era_from_snapshot(const Snapshot& s, std::size_t run);

struct RunSummary {
  double coverage = 0.0;
  double uniques = 0.0;
  double fitness = 0.0;
  double fitness_all = 0.0;
  double interestingness = 0.0;
};

struct RunResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<GenerationRecord> series;  // generation 0 is the initial state
  std::vector<EraMatrix> eras;

  /// Final coverage and uniques; fitness and interestingness averaged over
  /// generations 1..G.
  RunSummary overall() const;
  /// Same quantities restricted to one design step. Uniques counts the
  /// digests first seen during the step.
  RunSummary step(std::size_t s) const;
};

struct MetricStat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

MetricStat mean_std(const std::vector<double>& xs);

struct MetricRow {
  std::string label;
  MetricStat coverage, uniques, fitness, fitness_all, interestingness;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::string> target_ids;  // one per design step
  std::vector<NarrativeGraph> targets;
  std::vector<RunResult> runs;
  std::vector<MetricRow> rows;  // overall first, then one per design step
};

using ProgressFn = std::function<void(std::size_t run, const GenerationRecord&)>;

/// Throws InvalidArgument, NotFound or IoError.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const ProgressFn& progress = {});

/// Recomputes summary rows from the per-run series.
std::vector<MetricRow> summarize(const ExperimentConfig& config,
                                 const std::vector<std::string>& target_ids,
                                 const std::vector<RunResult>& runs);

/// Writes summary.csv, run_<k>_series.csv, run_<k>/era_<gen>.csv and
/// target.graph.json (plus one graph per design step). Throws IoError.
void export_report(const ExperimentReport& report, const std::filesystem::path& out);

std::string summary_csv(const std::vector<MetricRow>& rows);
std::string series_csv(const RunResult& run);
std::string era_csv(const EraMatrix& era);

}  // namespace story
