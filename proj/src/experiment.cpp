#include "story/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "story/error.hpp"
#include "story/graph_io.hpp"
#include "story/targets.hpp"

namespace story {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

ExperimentConfig ExperimentConfig::desk(std::string experiment) {
  ExperimentConfig c;
  c.experiment = std::move(experiment);
  c.runs = 3;
  c.generations = c.is_schedule() ? 50 : 100;
  return c;
}

ExperimentConfig ExperimentConfig::full(std::string experiment, bool all_dims) {
  ExperimentConfig c;
  c.experiment = std::move(experiment);
  c.all_dims = all_dims;
  c.runs = 5;
  c.generations = c.is_schedule() ? 50 : (all_dims ? 250 : 500);
  return c;
}

void ExperimentConfig::validate() const {
  if (experiment.empty()) throw InvalidArgument("experiment id is empty");
  if (runs < 1) throw InvalidArgument("runs must be at least 1");
  if (generations < 1) throw InvalidArgument("generations must be at least 1");
  if (offspring_per_generation < 1)
    throw InvalidArgument("offspring_per_generation must be at least 1");
  if (cell_capacity < 1) throw InvalidArgument("cell_capacity must be at least 1");
  if (budgets) budgets->validate();
}

std::string ExperimentConfig::label() const {
  std::string id = experiment;
  if (!is_schedule()) {
    const auto ids = builtin_target_ids();
    if (std::find(ids.begin(), ids.end(), experiment) == ids.end())
      id = fs::path(experiment).stem().string();
  }
  return id + "/" + (all_dims ? "all" : "pair") + "/" +
         (constraints ? "constrained" : "unconstrained");
}

nlohmann::ordered_json experiment_config_to_json(const ExperimentConfig& c) {
  ojson doc;
  doc["experiment"] = c.experiment;
  doc["runs"] = c.runs;
  doc["generations"] = c.generations;
  doc["dims"] = c.all_dims ? "all" : "pair";
  doc["constraints"] = c.constraints;
  doc["budgets"] = c.budgets ? constraints_to_json(*c.budgets) : ojson(nullptr);
  doc["seed"] = c.seed;
  doc["offspring_per_generation"] = c.offspring_per_generation;
  doc["initial_population"] = c.initial_population;
  doc["cell_capacity"] = c.cell_capacity;
  return doc;
}

EraMatrix era_from_snapshot(const Snapshot& s, std::size_t run) {
  EraMatrix m;
  m.run = run;
  m.generation = s.generation;
  m.granularity = s.granularity;
  m.cells.assign(static_cast<std::size_t>(s.granularity * s.granularity), std::nullopt);
  for (const auto& c : s.grid)
    m.cells[static_cast<std::size_t>(c.y * s.granularity + c.x)] = c.fitness;
  return m;
}

namespace {

RunSummary summarize_rows(const std::vector<GenerationRecord>& series,
                          std::size_t first, std::size_t last) {
  // Rows [first, last] are generations; row first-1 is the state before.
  RunSummary s;
  const auto& end = series[last];
  s.coverage = end.coverage;
  s.uniques = static_cast<double>(end.uniques);
  if (first > 0) s.uniques -= static_cast<double>(series[first - 1].uniques);
  const double n = static_cast<double>(last - first + 1);
  for (std::size_t i = first; i <= last; ++i) {
    s.fitness += series[i].fitness;
    s.fitness_all += series[i].fitness_all;
    s.interestingness += series[i].interestingness;
  }
  s.fitness /= n;
  s.fitness_all /= n;
  s.interestingness /= n;
  return s;
}

}  // namespace

RunSummary RunResult::overall() const {
  if (series.size() < 2) throw InvalidArgument("run has no generations");
  auto s = summarize_rows(series, 1, series.size() - 1);
  s.uniques = static_cast<double>(series.back().uniques);
  return s;
}

RunSummary RunResult::step(std::size_t st) const {
  std::size_t first = 0, last = 0;
  bool found = false;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].step != st) continue;
    if (!found) first = i;
    last = i;
    found = true;
  }
  if (!found) throw NotFound("design step " + std::to_string(st) + " has no generations");
  return summarize_rows(series, first, last);
}

MetricStat mean_std(const std::vector<double>& xs) {
  MetricStat m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return m;
}

std::vector<MetricRow> summarize(const ExperimentConfig& config,
                                 const std::vector<std::string>& target_ids,
                                 const std::vector<RunResult>& runs) {
  auto row = [&](std::string label, auto&& pick) {
    std::vector<double> cov, uni, fit, fit_all, intr;
    for (const auto& r : runs) {
      RunSummary s = pick(r);
      cov.push_back(s.coverage);
      uni.push_back(s.uniques);
      fit.push_back(s.fitness);
      fit_all.push_back(s.fitness_all);
      intr.push_back(s.interestingness);
    }
    return MetricRow{std::move(label), mean_std(cov), mean_std(uni), mean_std(fit),
                     mean_std(fit_all), mean_std(intr)};
  };
  std::vector<MetricRow> rows;
  rows.push_back(row(config.label(), [](const RunResult& r) { return r.overall(); }));
  if (config.is_schedule()) {
    const std::string suffix = config.label().substr(config.experiment.size());
    for (std::size_t s = 0; s < target_ids.size(); ++s)
      rows.push_back(row(target_ids[s] + suffix, [s](const RunResult& r) { return r.step(s); }));
  }
  return rows;
}

namespace {

struct ResolvedTargets {
  std::vector<std::string> ids;
  std::vector<NarrativeGraph> graphs;
  std::optional<LevelConstraints> constraints;
};

ResolvedTargets resolve_targets(const ExperimentConfig& c) {
  ResolvedTargets t;
  const auto ids = builtin_target_ids();
  if (c.is_schedule()) {
    t.ids = design_schedule();
  } else if (std::find(ids.begin(), ids.end(), c.experiment) != ids.end()) {
    t.ids = {c.experiment};
  } else {
    if (!fs::exists(c.experiment))
      throw NotFound("'" + c.experiment + "' is neither a builtin target nor a file");
    t.ids = {fs::path(c.experiment).stem().string()};
    t.graphs.push_back(load_graph(c.experiment));
    if (c.constraints) {
      if (!c.budgets)
        throw InvalidArgument("constraints on a custom target need explicit budgets");
      t.constraints = c.budgets;
    }
    return t;
  }
  for (const auto& id : t.ids) {
    auto b = builtin_target(id);
    t.graphs.push_back(std::move(b.graph));
    if (c.constraints) t.constraints = c.budgets ? *c.budgets : b.constraints;
  }
  return t;
}

ojson record_to_json(const GenerationRecord& r) {
  return ojson::array({r.generation, r.step, r.coverage, r.uniques, r.fitness,
                       r.fitness_all, r.interestingness, r.feasible, r.infeasible});
}

GenerationRecord record_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 9) throw ParseError("/series", "malformed record");
  GenerationRecord r;
  r.generation = j[0].get<std::size_t>();
  r.step = j[1].get<std::size_t>();
  r.coverage = j[2].get<double>();
  r.uniques = j[3].get<std::size_t>();
  r.fitness = j[4].get<double>();
  r.fitness_all = j[5].get<double>();
  r.interestingness = j[6].get<double>();
  r.feasible = j[7].get<std::size_t>();
  r.infeasible = j[8].get<std::size_t>();
  return r;
}

ojson era_to_json(const EraMatrix& m) {
  ojson cells = ojson::array();
  for (const auto& c : m.cells) cells.push_back(c ? ojson(*c) : ojson(nullptr));
  return {{"generation", m.generation}, {"granularity", m.granularity}, {"cells", cells}};
}

EraMatrix era_from_json(const nlohmann::json& j, std::size_t run) {
  EraMatrix m;
  m.run = run;
  m.generation = j.at("generation").get<std::size_t>();
  m.granularity = j.at("granularity").get<int>();
  for (const auto& c : j.at("cells"))
    m.cells.push_back(c.is_null() ? std::nullopt : std::optional<double>(c.get<double>()));
  return m;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, content);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string() + ": " + ec.message());
}

GenerationRecord record_of(const Archive& a, std::size_t step) {
  GenerationRecord r;
  r.generation = a.generation();
  r.step = step;
  r.coverage = a.snapshot(Dimension::Step, Dimension::Interestingness).coverage;
  r.uniques = a.uniques();
  auto st = a.stats();
  r.fitness = st.mean_feasible_fitness;
  r.fitness_all = st.mean_fitness;
  r.interestingness = st.mean_feasible_interestingness;
  r.feasible = st.feasible;
  r.infeasible = st.infeasible;
  return r;
}

class RunWorker {
 public:
  RunWorker(const ExperimentConfig& cfg, const ResolvedTargets& targets, std::size_t k,
            const ProgressFn& progress)
      : cfg_(cfg), targets_(targets), k_(k), progress_(progress) {}

  RunResult run() {
    RunResult result;
    result.index = k_;
    result.seed = cfg_.seed + k_;
    const std::size_t total = cfg_.generations * targets_.graphs.size();

    std::optional<Archive> archive = resume(result);
    if (!archive) {
      archive.emplace(archive_config(result.seed), targets_.graphs.front());
      result.series.push_back(record_of(*archive, 0));
    }
    while (archive->generation() < total) {
      const std::size_t g = archive->generation();
      const std::size_t step = g / cfg_.generations;
      if (g > 0 && g % cfg_.generations == 0) archive->inject_target(targets_.graphs[step]);
      archive->step_generation();
      result.series.push_back(record_of(*archive, step));
      if (progress_) progress_(k_, result.series.back());
      const std::size_t done = archive->generation();
      if (done % kCheckpointEvery == 0) {
        result.eras.push_back(era_from_snapshot(
            archive->snapshot(Dimension::Step, Dimension::Interestingness), k_));
      }
      if (done % kCheckpointEvery == 0 || done == total) save(*archive, result);
    }
    return result;
  }

 private:
  ArchiveConfig archive_config(std::uint64_t seed) const {
    ArchiveConfig ac;
    ac.dims = cfg_.all_dims ? DimensionSpec::all() : DimensionSpec::pair();
    ac.cell_capacity = cfg_.cell_capacity;
    ac.offspring_per_generation = cfg_.offspring_per_generation;
    ac.initial_population = cfg_.initial_population;
    ac.constraints = targets_.constraints;
    ac.seed = seed;
    return ac;
  }

  std::optional<fs::path> checkpoint_path() const {
    if (!cfg_.checkpoint_dir) return std::nullopt;
    return *cfg_.checkpoint_dir / ("run_" + std::to_string(k_) + ".json");
  }

  std::optional<Archive> resume(RunResult& result) const {
    auto path = checkpoint_path();
    if (!path || !fs::exists(*path)) return std::nullopt;
    std::ifstream in(*path, std::ios::binary);
    if (!in) throw IoError(path->string() + ": cannot open for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path->string(), e.what());
    }
    if (nlohmann::json(experiment_config_to_json(cfg_)) != doc.at("experiment"))
      throw InvalidArgument(path->string() + ": written by a different configuration");
    for (const auto& r : doc.at("series")) result.series.push_back(record_from_json(r));
    for (const auto& e : doc.at("eras")) result.eras.push_back(era_from_json(e, k_));
    return Archive::from_json(doc.at("archive"));
  }

  void save(const Archive& archive, const RunResult& result) const {
    auto path = checkpoint_path();
    if (!path) return;
    ojson doc;
    doc["experiment"] = experiment_config_to_json(cfg_);
    doc["run"] = k_;
    doc["series"] = ojson::array();
    for (const auto& r : result.series) doc["series"].push_back(record_to_json(r));
    doc["eras"] = ojson::array();
    for (const auto& e : result.eras) doc["eras"].push_back(era_to_json(e));
    doc["archive"] = archive.to_json();
    write_atomic(*path, doc.dump());
  }

  const ExperimentConfig& cfg_;
  const ResolvedTargets& targets_;
  std::size_t k_;
  const ProgressFn& progress_;
};

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  ResolvedTargets targets = resolve_targets(config);
  if (config.checkpoint_dir) {
    std::error_code ec;
    fs::create_directories(*config.checkpoint_dir, ec);
    if (ec) throw IoError(config.checkpoint_dir->string() + ": " + ec.message());
  }

  std::mutex progress_mutex;
  ProgressFn guarded;
  if (progress) {
    guarded = [&](std::size_t run, const GenerationRecord& r) {
      std::lock_guard lock(progress_mutex);
      progress(run, r);
    };
  }

  std::vector<RunResult> results(config.runs);
  std::vector<std::exception_ptr> errors(config.runs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < config.runs; k = next++) {
      try {
        results[k] = RunWorker(config, targets, k, guarded).run();
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads
                                       : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, config.runs);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport report;
  report.config = config;
  report.target_ids = targets.ids;
  report.targets = targets.graphs;
  report.runs = std::move(results);
  report.rows = summarize(config, report.target_ids, report.runs);
  return report;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string summary_csv(const std::vector<MetricRow>& rows) {
  std::string out =
      "config,coverage_mean,coverage_std,uniques_mean,uniques_std,fitness_mean,"
      "fitness_std,fitness_all_mean,fitness_all_std,interestingness_mean,"
      "interestingness_std\n";
  for (const auto& r : rows) {
    out += r.label;
    for (const auto* m : {&r.coverage, &r.uniques, &r.fitness, &r.fitness_all,
                          &r.interestingness}) {
      out += "," + fmt(m->mean) + "," + fmt(m->std);
    }
    out += "\n";
  }
  return out;
}

std::string series_csv(const RunResult& run) {
  std::string out =
      "generation,step,coverage,uniques,fitness,fitness_all,interestingness,feasible,"
      "infeasible\n";
  for (const auto& r : run.series) {
    out += std::to_string(r.generation) + "," + std::to_string(r.step) + "," +
           fmt(r.coverage) + "," + std::to_string(r.uniques) + "," + fmt(r.fitness) +
           "," + fmt(r.fitness_all) + "," + fmt(r.interestingness) + "," +
           std::to_string(r.feasible) + "," + std::to_string(r.infeasible) + "\n";
  }
  return out;
}

std::string era_csv(const EraMatrix& era) {
  std::string out;
  for (int y = 0; y < era.granularity; ++y) {
    for (int x = 0; x < era.granularity; ++x) {
      if (x) out += ",";
      if (auto v = era.at(x, y)) out += fmt(*v);
    }
    out += "\n";
  }
  return out;
}

void export_report(const ExperimentReport& report, const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError(out.string() + ": " + ec.message());
  write_file(out / "summary.csv", summary_csv(report.rows));
  for (const auto& run : report.runs) {
    const std::string stem = "run_" + std::to_string(run.index);
    write_file(out / (stem + "_series.csv"), series_csv(run));
    fs::create_directories(out / stem, ec);
    if (ec) throw IoError((out / stem).string() + ": " + ec.message());
    for (const auto& era : run.eras)
      write_file(out / stem / ("era_" + std::to_string(era.generation) + ".csv"),
                 era_csv(era));
  }
  write_file(out / "target.graph.json", serialize(report.targets.front()));
  if (report.targets.size() > 1) {
    for (std::size_t s = 0; s < report.targets.size(); ++s)
      write_file(out / ("target_" + report.target_ids[s] + ".graph.json"),
                 serialize(report.targets[s]));
  }
}

}  // namespace story
