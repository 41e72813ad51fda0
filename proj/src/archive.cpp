#include "story/archive.hpp"

#include <algorithm>
#include <cassert>
#include <thread>
#include <utility>

#include "story/error.hpp"
#include "story/patterns.hpp"

namespace story {

void ArchiveConfig::validate() const {
  dims.validate();
  if (cell_capacity < 1) throw InvalidArgument("cell_capacity must be at least 1");
  if (offspring_per_generation < 1)
    throw InvalidArgument("offspring_per_generation must be at least 1");
  if (recipes_per_individual < 1)
    throw InvalidArgument("recipes_per_individual must be at least 1");
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0))
    throw InvalidArgument("mutation_probability must lie in [0, 1]");
  if (eval_threads < 1) throw InvalidArgument("eval_threads must be at least 1");
  if (constraints) constraints->validate();
}

namespace {

struct Scored {
  NarrativeGraph graph;
  Evaluation evaluation;
  std::string digest;
};

Scored score(NarrativeGraph g, const EvaluationContext& ctx) {
  auto tokens = canonical_tokens(g);
  auto patterns = detect_patterns(g);
  auto ev = evaluate(g, patterns, tokens, ctx);
  auto digest = digest_tokens(tokens);
  return {std::move(g), std::move(ev), std::move(digest)};
}

// Feasible beats infeasible; then the population's own fitness.
bool outranks(const Evaluation& a, const Evaluation& b) {
  if (a.feasible != b.feasible) return a.feasible;
  return a.fitness > b.fitness;
}

// Population order: fitness descending, digest ascending.
bool before(const Individual& a, const Individual& b) {
  if (a.evaluation.fitness != b.evaluation.fitness)
    return a.evaluation.fitness > b.evaluation.fitness;
  return a.digest < b.digest;
}

}  // namespace

Individual evaluate_genotype(GraphGrammar genotype, const EvaluationContext& ctx,
                             std::size_t recipes, Rng& rng) {
  auto plans = sample_recipes(genotype, recipes, rng);
  std::optional<Scored> best;
  Recipe best_recipe;
  for (auto& plan : plans) {
    auto s = score(apply_recipe(ctx.target(), genotype, plan), ctx);
    if (!best || outranks(s.evaluation, best->evaluation)) {
      best = std::move(s);
      best_recipe = plan;
    }
  }
  if (!best) {
    best = score(ctx.target(), ctx);
    best_recipe = Recipe{};
  }
  return Individual{std::move(genotype), std::move(best_recipe), std::move(best->graph),
                    std::move(best->evaluation), std::move(best->digest), {}};
}

Individual make_individual(GraphGrammar genotype, Recipe recipe,
                           NarrativeGraph phenotype, const EvaluationContext& ctx) {
  auto s = score(std::move(phenotype), ctx);
  return Individual{std::move(genotype), std::move(recipe), std::move(s.graph),
                    std::move(s.evaluation), std::move(s.digest), {}};
}

nlohmann::ordered_json snapshot_to_json(const Snapshot& s) {
  nlohmann::ordered_json grid = nlohmann::ordered_json::array();
  for (const auto& c : s.grid) {
    grid.push_back({{"cell", {c.x, c.y}}, {"fitness", c.fitness}, {"digest", c.digest}});
  }
  return {{"generation", s.generation},
          {"coverage", s.coverage},
          {"grid", std::move(grid)},
          {"dims", {dimension_id(s.x), dimension_id(s.y)}},
          {"granularity", s.granularity}};
}

Archive::Archive(RestoreTag, ArchiveConfig config, NarrativeGraph target)
    : config_(std::move(config)),
      ctx_(std::move(target), config_.constraints),
      rng_(config_.seed) {
  config_.validate();
}

Archive::Archive(ArchiveConfig config, NarrativeGraph target)
    : Archive(RestoreTag{}, std::move(config), std::move(target)) {
  for (std::size_t i = 0; i < config_.initial_population; ++i) {
    auto genotype = random_grammar(rng_);
    insert(evaluate_genotype(std::move(genotype), ctx_, config_.recipes_per_individual,
                             rng_));
  }
}

CellCoords Archive::coords_for(const Evaluation& e) const {
  CellCoords c;
  c.reserve(config_.dims.selected.size());
  for (auto d : config_.dims.selected)
    c.push_back(bucketize(e.dimension(d), config_.dims.granularity));
  return c;
}

bool Archive::insert(Individual ind) {
  ind.coords = coords_for(ind.evaluation);
  auto [it, created] = cells_.try_emplace(ind.coords);
  Cell& cell = it->second;
  if (created) cell.coords = ind.coords;
  auto& pop = ind.evaluation.feasible ? cell.feasible : cell.infeasible;

  if (pop.size() >= config_.cell_capacity) {
    if (!(ind.evaluation.fitness > pop.back().evaluation.fitness)) {
      if (cell.empty()) cells_.erase(it);
      return false;
    }
    pop.pop_back();
  }
  assert(!ind.evaluation.feasible ||
         check_feasibility(ind.phenotype, ctx_.constraints()).feasible);
  if (ind.evaluation.feasible) uniques_.insert(ind.digest);
  auto pos = std::upper_bound(pop.begin(), pop.end(), ind, before);
  pop.insert(pos, std::move(ind));
  return true;
}

void Archive::rebuild() {
  std::vector<Individual> all;
  all.reserve(individual_count());
  for (auto& [coords, cell] : cells_) {
    for (auto& i : cell.feasible) all.push_back(std::move(i));
    for (auto& i : cell.infeasible) all.push_back(std::move(i));
  }
  cells_.clear();
  // Best first, so capacity only ever trims the weakest members.
  std::stable_sort(all.begin(), all.end(), [](const Individual& a, const Individual& b) {
    if (a.evaluation.feasible != b.evaluation.feasible) return a.evaluation.feasible;
    return before(a, b);
  });
  for (auto& ind : all) insert(std::move(ind));
}

std::size_t Archive::individual_count() const noexcept {
  std::size_t n = 0;
  for (const auto& [coords, cell] : cells_) n += cell.size();
  return n;
}

const Individual& Archive::pick_parent() {
  // Called only with a non-empty archive.
  std::uniform_int_distribution<std::size_t> pick_cell(0, cells_.size() - 1);
  auto it = std::next(cells_.begin(), static_cast<std::ptrdiff_t>(pick_cell(rng_)));
  const Cell& cell = it->second;
  std::uniform_int_distribution<std::size_t> pick_member(0, cell.size() - 1);
  std::size_t k = pick_member(rng_);
  return k < cell.feasible.size() ? cell.feasible[k]
                                  : cell.infeasible[k - cell.feasible.size()];
}

GenerationReport Archive::step_generation() {
  GenerationReport report;
  std::vector<GraphGrammar> children;
  if (!cells_.empty()) {
    children.reserve(2 * config_.offspring_per_generation);
    std::bernoulli_distribution mutate_coin(config_.mutation_probability);
    for (std::size_t p = 0; p < config_.offspring_per_generation; ++p) {
      const auto& a = pick_parent().genotype;
      const auto& b = pick_parent().genotype;
      auto [c1, c2] = crossover(a, b, rng_);
      for (auto* c : {&c1, &c2}) {
        if (mutate_coin(rng_)) *c = mutate(*c, rng_);
        children.push_back(std::move(*c));
      }
    }
  }

  // Per-child seeds keep the result independent of the thread count.
  std::vector<std::uint64_t> seeds(children.size());
  for (auto& s : seeds) s = rng_();
  std::vector<std::optional<Individual>> evaluated(children.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng local(seeds[i]);
      evaluated[i] = evaluate_genotype(std::move(children[i]), ctx_,
                                       config_.recipes_per_individual, local);
    }
  };
  std::size_t threads = std::min(config_.eval_threads, children.size());
  if (threads <= 1) {
    work(0, children.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (children.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      std::size_t b = t * chunk, e = std::min(children.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::size_t uniques_before = uniques_.size();
  for (auto& ind : evaluated) {
    bool feasible = ind->evaluation.feasible;
    if (feasible) {
      ++report.feasible_children;
      report.child_fitness += ind->evaluation.fitness;
      report.child_interestingness += ind->evaluation.dimension(Dimension::Interestingness);
    }
    if (insert(std::move(*ind))) {
      ++(feasible ? report.feasible_inserted : report.infeasible_inserted);
    } else {
      ++report.rejected;
    }
  }
  if (report.feasible_children > 0) {
    report.child_fitness /= static_cast<double>(report.feasible_children);
    report.child_interestingness /= static_cast<double>(report.feasible_children);
  }
  report.children = evaluated.size();
  report.new_uniques = uniques_.size() - uniques_before;
  report.generation = ++generation_;
  return report;
}

void Archive::inject_target(NarrativeGraph target) {
  ctx_ = EvaluationContext(std::move(target), config_.constraints);
  auto step = static_cast<std::size_t>(Dimension::Step);
  for (auto& [coords, cell] : cells_) {
    for (auto* pop : {&cell.feasible, &cell.infeasible})
      for (auto& ind : *pop)
        ind.evaluation.dimensions[step] =
            step_value(canonical_tokens(ind.phenotype), ctx_.target_tokens());
  }
  rebuild();
  insert(make_individual(random_grammar(rng_), Recipe{}, ctx_.target(), ctx_));
}

void Archive::set_dimensions(DimensionSpec dims) {
  dims.validate();
  config_.dims = std::move(dims);
  rebuild();
}

void Archive::set_constraints(std::optional<LevelConstraints> constraints) {
  if (constraints) constraints->validate();
  config_.constraints = constraints;
  ctx_ = EvaluationContext(ctx_.target(), constraints);
  for (auto& [coords, cell] : cells_) {
    for (auto* pop : {&cell.feasible, &cell.infeasible})
      for (auto& ind : *pop) ind.evaluation = evaluate(ind.phenotype, ctx_);
  }
  rebuild();
}

Snapshot Archive::snapshot(Dimension x, Dimension y) const {
  Snapshot s;
  s.generation = generation_;
  s.x = x;
  s.y = y;
  s.granularity = config_.dims.granularity;
  std::map<std::pair<int, int>, const Individual*> best;
  for (const auto& [coords, cell] : cells_) {
    for (const auto& ind : cell.feasible) {
      std::pair<int, int> key{bucketize(ind.evaluation.dimension(x), s.granularity),
                              bucketize(ind.evaluation.dimension(y), s.granularity)};
      auto [it, fresh] = best.try_emplace(key, &ind);
      if (!fresh && before(ind, *it->second)) it->second = &ind;
    }
  }
  for (const auto& [key, ind] : best)
    s.grid.push_back({key.first, key.second, ind->evaluation.fitness, ind->digest});
  s.coverage = static_cast<double>(best.size()) /
               static_cast<double>(s.granularity * s.granularity);
  return s;
}

Snapshot Archive::snapshot() const {
  const auto& sel = config_.dims.selected;
  Dimension x = sel.empty() ? Dimension::Step : sel[0];
  Dimension y = sel.size() > 1 ? sel[1] : Dimension::Interestingness;
  return snapshot(x, y);
}

const Individual* Archive::projected_elite(Dimension x, Dimension y, int i,
                                           int j) const {
  const Individual* found = nullptr;
  int g = config_.dims.granularity;
  for (const auto& [coords, cell] : cells_) {
    for (const auto& ind : cell.feasible) {
      if (bucketize(ind.evaluation.dimension(x), g) != i ||
          bucketize(ind.evaluation.dimension(y), g) != j)
        continue;
      if (!found || before(ind, *found)) found = &ind;
    }
  }
  return found;
}

std::vector<std::string> Archive::check_invariants() const {
  std::vector<std::string> out;
  auto where = [](const CellCoords& c) {
    std::string s = "cell [";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    return s + "]";
  };
  for (const auto& [coords, cell] : cells_) {
    if (cell.empty()) out.push_back(where(coords) + " is empty");
    if (cell.coords != coords) out.push_back(where(coords) + " has mismatched coords");
    for (bool feasible : {true, false}) {
      const auto& pop = feasible ? cell.feasible : cell.infeasible;
      const char* label = feasible ? " feasible" : " infeasible";
      if (pop.size() > config_.cell_capacity)
        out.push_back(where(coords) + label + " population over capacity");
      if (!std::is_sorted(pop.begin(), pop.end(), before))
        out.push_back(where(coords) + label + " population out of order");
      for (const auto& ind : pop) {
        if (ind.evaluation.feasible != feasible)
          out.push_back(where(coords) + label + " population holds a misfiled member");
        if (ind.coords != coords || coords_for(ind.evaluation) != coords)
          out.push_back(where(coords) + " member " + ind.digest + " has stale coords");
        auto fresh = evaluate(ind.phenotype, ctx_);
        if (fresh.feasible != feasible)
          out.push_back(where(coords) + " member " + ind.digest +
                        " disagrees with check_feasibility");
        if (fresh.fitness != ind.evaluation.fitness ||
            fresh.dimensions != ind.evaluation.dimensions)
          out.push_back(where(coords) + " member " + ind.digest + " has stale evaluation");
        if (feasible && !uniques_.count(ind.digest))
          out.push_back(where(coords) + " member " + ind.digest + " missing from uniques");
      }
    }
  }
  return out;
}

ArchiveStats Archive::stats() const {
  ArchiveStats st;
  double feasible_fit = 0.0, all_fit = 0.0, interest = 0.0;
  for (const auto& [coords, cell] : cells_) {
    for (const auto& ind : cell.feasible) {
      feasible_fit += ind.evaluation.fitness;
      interest += ind.evaluation.dimension(Dimension::Interestingness);
    }
    for (const auto& ind : cell.infeasible) all_fit += ind.evaluation.fitness;
    st.feasible += cell.feasible.size();
    st.infeasible += cell.infeasible.size();
  }
  all_fit += feasible_fit;
  if (st.feasible) {
    st.mean_feasible_fitness = feasible_fit / static_cast<double>(st.feasible);
    st.mean_feasible_interestingness = interest / static_cast<double>(st.feasible);
  }
  if (st.feasible + st.infeasible)
    st.mean_fitness = all_fit / static_cast<double>(st.feasible + st.infeasible);
  return st;
}

}  // namespace story
