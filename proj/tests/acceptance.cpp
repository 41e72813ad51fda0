// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "story/archive.hpp"
#include "story/evaluation.hpp"
#include "story/experiment.hpp"
#include "story/patterns.hpp"
#include "story/targets.hpp"
#include "support.hpp"

using namespace story;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

ExperimentReport desk(const std::string& id, bool constraints, bool all_dims) {
  auto c = ExperimentConfig::desk(id);
  c.constraints = constraints;
  c.all_dims = all_dims;
  c.threads = 1;
  return run_experiment(c);
}

// Lazily computed desk runs shared by several criteria.
class DeskRuns {
 public:
  const ExperimentReport& get(const std::string& id, bool constraints, bool all_dims) {
    auto key = id + (constraints ? "/on" : "/off") + (all_dims ? "/all" : "/pair");
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, desk(id, constraints, all_dims)).first;
    return it->second;
  }

 private:
  std::map<std::string, ExperimentReport> cache_;
};

Outcome anchors() {
  auto d = default_graph();
  auto last = builtin_target("4.5").graph;
  double a = dimension_value(Dimension::Interestingness, d, d);
  double b = dimension_value(Dimension::Interestingness, last, last);
  return {a == 0.0 && b >= 0.32 && b <= 0.34,
          format("default %.6f, step 4.5 %.6f", a, b)};
}

Outcome oracle() {
  std::mt19937_64 rng(20240);
  const int total = 10000;
  int mismatches = 0;
  std::string first;
  for (int i = 0; i < total; ++i) {
    auto g = i % 2 ? testing::random_graph(rng, 7, 0.2 + 0.05 * (i % 5))
                   : testing::random_connected_graph(rng, 7);
    auto diffs = testing::compare_with_oracle(g);
    if (!diffs.empty()) {
      if (mismatches == 0) first = diffs.front();
      ++mismatches;
    }
  }
  return {mismatches == 0,
          format("%d graphs, %d mismatches%s%s", total, mismatches, first.empty() ? "" : ": ",
                 first.c_str())};
}

Outcome bounds() {
  std::mt19937_64 rng(515);
  const int total = 10000;
  int violations = 0;
  EvaluationContext free_ctx(default_graph());
  EvaluationContext tight_ctx(builtin_target("1").graph, LevelConstraints{1, 1, 1});
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  for (int i = 0; i < total; ++i) {
    auto g = i % 3 ? testing::random_graph(rng, 8, 0.05 + 0.05 * (i % 6))
                   : testing::random_connected_graph(rng, 8);
    const auto& ctx = i % 2 ? free_ctx : tight_ctx;
    auto e = evaluate(g, ctx);
    bool ok = in_unit(e.coherence) && in_unit(e.infeasible_fitness) && in_unit(e.fitness) &&
              in_unit(e.cohesion) && in_unit(e.consistency);
    for (double v : e.dimensions) ok = ok && in_unit(v);
    violations += !ok;
  }
  double coh = coherence(default_graph());
  return {violations == 0 && coh == 1.0,
          format("%d graphs, %d out of range, coherence(default) %.6f", total, violations, coh)};
}

Outcome constraint_direction(DeskRuns& runs) {
  bool pass = true;
  std::string detail;
  for (const char* id : {"1", "2", "3"}) {
    const auto& on = runs.get(id, true, false).rows.front();
    const auto& off = runs.get(id, false, false).rows.front();
    bool cov = off.coverage.mean > on.coverage.mean;
    bool uni = off.uniques.mean > on.uniques.mean;
    double dfit = std::abs(off.fitness.mean - on.fitness.mean);
    bool fit = dfit < 0.1;
    pass = pass && cov && uni && fit;
    detail += format("%sexp %s coverage off %.3f %s on %.3f, uniques off %.1f %s on %.1f, |dfit| %.3f",
                     detail.empty() ? "" : "; ", id, off.coverage.mean, cov ? ">" : "<=",
                     on.coverage.mean, off.uniques.mean, uni ? ">" : "<=", on.uniques.mean, dfit);
  }
  return {pass, detail};
}

Outcome dimension_tradeoff(DeskRuns& runs) {
  bool pass = true;
  std::string detail;
  for (const char* id : {"1", "2", "3"}) {
    const auto& pair = runs.get(id, false, false).rows.front();
    const auto& all = runs.get(id, false, true).rows.front();
    double uni = all.uniques.mean / pair.uniques.mean;
    double cov = all.coverage.mean / pair.coverage.mean;
    bool fit = all.fitness.mean <= pair.fitness.mean + 0.02;
    pass = pass && uni >= 1.2 && cov >= 1.1 && fit;
    detail += format("%sexp %s uniques x%.2f, coverage x%.2f (%.3f vs %.3f), fitness %.3f vs %.3f",
                     detail.empty() ? "" : "; ", id, uni, cov, all.coverage.mean,
                     pair.coverage.mean, all.fitness.mean, pair.fitness.mean);
  }
  return {pass, detail};
}

std::vector<double> ranks(const std::vector<double>& xs) {
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return va == 0 || vb == 0 ? 0.0 : cov / std::sqrt(va * vb);
}

Outcome adaptability(DeskRuns& runs) {
  const auto& report = runs.get("4", true, false);
  std::vector<double> steps, interest;
  std::string detail = "step means";
  for (std::size_t s = 0; s < report.target_ids.size(); ++s) {
    double mean = 0.0;
    for (const auto& r : report.runs) mean += r.step(s).interestingness;
    mean /= static_cast<double>(report.runs.size());
    steps.push_back(static_cast<double>(s));
    interest.push_back(mean);
    detail += format(" %s=%.3f", report.target_ids[s].c_str(), mean);
  }
  double rho = spearman(steps, interest);
  return {rho >= 0.8, format("rho %.3f; ", rho) + detail};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  auto base = fs::temp_directory_path() / "story_acceptance_determinism";
  fs::remove_all(base);
  for (const char* run : {"a", "b"}) export_report(desk("2", true, false), base / run);
  auto a = read_file(base / "a" / "summary.csv");
  auto b = read_file(base / "b" / "summary.csv");
  bool series = read_file(base / "a" / "run_2_series.csv") == read_file(base / "b" / "run_2_series.csv");
  fs::remove_all(base);
  return {!a.empty() && a == b && series,
          format("summary.csv %zu bytes, %s", a.size(), a == b ? "identical" : "different")};
}

Outcome archive_invariants() {
  auto target = builtin_target("1");
  ArchiveConfig c;
  c.seed = 0;
  c.constraints = target.constraints;
  Archive a(c, target.graph);
  std::size_t problems = 0, regressions = 0, over = 0;
  std::string first;
  for (int g = 0; g < 100; ++g) {
    std::map<CellCoords, double> before;
    for (const auto& [coords, cell] : a.cells())
      if (const auto* e = cell.elite()) before[coords] = e->evaluation.fitness;
    a.step_generation();
    auto issues = a.check_invariants();
    if (!issues.empty() && first.empty()) first = issues.front();
    problems += issues.size();
    for (const auto& [coords, f] : before) {
      auto it = a.cells().find(coords);
      if (it == a.cells().end() || !it->second.elite() || it->second.elite()->evaluation.fitness < f)
        ++regressions;
    }
    for (const auto& [coords, cell] : a.cells()) {
      over += cell.feasible.size() > c.cell_capacity;
      over += cell.infeasible.size() > c.cell_capacity;
      for (const auto& ind : cell.feasible)
        problems += !check_feasibility(ind.phenotype, target.constraints).feasible;
    }
  }
  return {problems == 0 && regressions == 0 && over == 0,
          format("100 generations, %zu invariant violations, %zu elite regressions, %zu over capacity%s%s",
                 problems, regressions, over, first.empty() ? "" : ": ", first.c_str())};
}

Outcome budgets() {
  const std::map<std::string, LevelConstraints> table{
      {"1", {2, 2, 2}},   {"2", {2, 2, 3}},   {"3", {4, 1, 1}},   {"4.1", {2, 2, 2}},
      {"4.2", {2, 2, 2}}, {"4.3", {2, 2, 2}}, {"4.4", {2, 2, 2}}, {"4.5", {2, 2, 2}}};
  std::string failed;
  for (const auto& [id, budget] : table) {
    auto t = builtin_target(id);
    if (!(t.constraints == budget) || !check_feasibility(t.graph, budget).feasible)
      failed += " " + id;
  }
  return {failed.empty(), failed.empty() ? "8 targets feasible" : "failing:" + failed};
}

}  // namespace

int main() {
  DeskRuns runs;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"anchor values", anchors},
      {"pattern oracle equivalence", oracle},
      {"fitness and dimension bounds", bounds},
      {"constraint direction", [&] { return constraint_direction(runs); }},
      {"dimension-count tradeoff", [&] { return dimension_tradeoff(runs); }},
      {"adaptability", [&] { return adaptability(runs); }},
      {"determinism", determinism},
      {"archive invariants", archive_invariants},
      {"builtin target budgets", budgets},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
