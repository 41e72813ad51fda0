// Checkpoint documents for the archive. Only genotypes, recipes and
// phenotypes are stored; evaluations are recomputed against the stored
// target on restore so a checkpoint can never carry stale scores.

#include <sstream>

#include "story/archive.hpp"
#include "story/error.hpp"
#include "story/grammar_io.hpp"
#include "story/graph_io.hpp"

namespace story {

namespace {

using ojson = nlohmann::ordered_json;
constexpr const char* kFormat = "story-archive/1";

const nlohmann::json& require(const nlohmann::json& doc, const char* key,
                              const std::string& where) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(where, std::string("missing key '") + key + "'");
  return *it;
}

std::uint64_t read_u64(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_unsigned()) throw ParseError(where, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

template <typename F>
auto with_location(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(where + e.location(), e.what());
  }
}

}  // namespace

nlohmann::ordered_json config_to_json(const ArchiveConfig& c) {
  ojson doc;
  doc["dims"] = dimensions_to_json(c.dims);
  doc["cell_capacity"] = c.cell_capacity;
  doc["offspring_per_generation"] = c.offspring_per_generation;
  doc["mutation_probability"] = c.mutation_probability;
  doc["initial_population"] = c.initial_population;
  doc["recipes_per_individual"] = c.recipes_per_individual;
  doc["constraints"] = c.constraints ? constraints_to_json(*c.constraints) : ojson(nullptr);
  doc["seed"] = c.seed;
  return doc;
}

ArchiveConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("", "config must be an object");
  ArchiveConfig c;
  c.dims = with_location("/dims", [&] { return dimensions_from_json(require(doc, "dims", "")); });
  c.cell_capacity = read_u64(require(doc, "cell_capacity", ""), "/cell_capacity");
  c.offspring_per_generation =
      read_u64(require(doc, "offspring_per_generation", ""), "/offspring_per_generation");
  const auto& mp = require(doc, "mutation_probability", "");
  if (!mp.is_number()) throw ParseError("/mutation_probability", "expected a number");
  c.mutation_probability = mp.get<double>();
  c.initial_population = read_u64(require(doc, "initial_population", ""), "/initial_population");
  c.recipes_per_individual =
      read_u64(require(doc, "recipes_per_individual", ""), "/recipes_per_individual");
  const auto& cons = require(doc, "constraints", "");
  if (!cons.is_null())
    c.constraints = with_location("/constraints", [&] { return constraints_from_json(cons); });
  c.seed = read_u64(require(doc, "seed", ""), "/seed");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError("", e.what());
  }
  return c;
}

nlohmann::ordered_json Archive::to_json() const {
  ojson doc;
  doc["format"] = kFormat;
  doc["config"] = config_to_json(config_);
  doc["target"] = graph_to_json(ctx_.target());
  doc["generation"] = generation_;
  std::ostringstream rng_state;
  rng_state << rng_;
  doc["rng"] = rng_state.str();
  doc["uniques"] = ojson::array();
  for (const auto& d : uniques_) doc["uniques"].push_back(d);
  doc["cells"] = ojson::array();
  for (const auto& [coords, cell] : cells_) {
    ojson c;
    c["coords"] = coords;
    for (bool feasible : {true, false}) {
      ojson pop = ojson::array();
      for (const auto& ind : feasible ? cell.feasible : cell.infeasible) {
        ojson i;
        i["digest"] = ind.digest;
        i["genotype"] = grammar_to_json(ind.genotype);
        i["recipe"] = recipe_to_json(ind.best_recipe);
        i["phenotype"] = graph_to_json(ind.phenotype);
        pop.push_back(std::move(i));
      }
      c[feasible ? "feasible" : "infeasible"] = std::move(pop);
    }
    doc["cells"].push_back(std::move(c));
  }
  return doc;
}

Archive Archive::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("", "checkpoint must be an object");
  const auto& format = require(doc, "format", "");
  if (!format.is_string() || format.get<std::string>() != kFormat)
    throw ParseError("/format", std::string("expected '") + kFormat + "'");

  auto config = with_location("/config", [&] { return config_from_json(require(doc, "config", "")); });
  auto target = with_location("/target", [&] { return graph_from_json(require(doc, "target", "")); });
  Archive a(RestoreTag{}, std::move(config), std::move(target));
  a.generation_ = read_u64(require(doc, "generation", ""), "/generation");

  const auto& rng = require(doc, "rng", "");
  if (!rng.is_string()) throw ParseError("/rng", "expected a string");
  std::istringstream rng_state(rng.get<std::string>());
  rng_state >> a.rng_;
  if (rng_state.fail()) throw ParseError("/rng", "malformed generator state");

  const auto& uniques = require(doc, "uniques", "");
  if (!uniques.is_array()) throw ParseError("/uniques", "expected an array");
  for (const auto& u : uniques) {
    if (!u.is_string()) throw ParseError("/uniques", "expected strings");
    a.uniques_.insert(u.get<std::string>());
  }

  const auto& cells = require(doc, "cells", "");
  if (!cells.is_array()) throw ParseError("/cells", "expected an array");
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    const std::string at = "/cells/" + std::to_string(ci);
    const auto& c = cells[ci];
    if (!c.is_object()) throw ParseError(at, "expected an object");
    const auto& coords_doc = require(c, "coords", at);
    if (!coords_doc.is_array()) throw ParseError(at + "/coords", "expected an array");
    CellCoords coords = coords_doc.get<CellCoords>();
    Cell cell;
    cell.coords = coords;
    for (bool feasible : {true, false}) {
      const char* key = feasible ? "feasible" : "infeasible";
      const auto& pop = require(c, key, at);
      if (!pop.is_array()) throw ParseError(at + "/" + key, "expected an array");
      for (std::size_t k = 0; k < pop.size(); ++k) {
        const std::string iat = at + "/" + key + "/" + std::to_string(k);
        const auto& i = pop[k];
        auto genotype = with_location(iat + "/genotype",
                                      [&] { return grammar_from_json(require(i, "genotype", "")); });
        auto recipe = with_location(iat + "/recipe",
                                    [&] { return recipe_from_json(require(i, "recipe", "")); });
        auto phenotype = with_location(iat + "/phenotype",
                                       [&] { return graph_from_json(require(i, "phenotype", "")); });
        auto ind = make_individual(std::move(genotype), std::move(recipe),
                                   std::move(phenotype), a.ctx_);
        const auto& digest = require(i, "digest", iat);
        if (!digest.is_string() || digest.get<std::string>() != ind.digest)
          throw ParseError(iat + "/digest", "does not match the phenotype");
        if (ind.evaluation.feasible != feasible)
          throw ParseError(iat, "stored in the wrong population");
        ind.coords = a.coords_for(ind.evaluation);
        if (ind.coords != coords) throw ParseError(iat, "does not belong to this cell");
        (feasible ? cell.feasible : cell.infeasible).push_back(std::move(ind));
      }
    }
    if (cell.empty()) throw ParseError(at, "cell is empty");
    if (!a.cells_.emplace(coords, std::move(cell)).second)
      throw ParseError(at + "/coords", "duplicate cell");
  }
  return a;
}

}  // namespace story
