#include <filesystem>
#include <thread>

#include "doctest.h"
#include "story/error.hpp"
#include "story/patterns.hpp"
#include "story/session.hpp"
#include "story/targets.hpp"

using namespace story;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

SessionOptions quick(bool paused = true) {
  SessionOptions o;
  o.initial_population = 120;
  o.offspring_per_generation = 10;
  o.start_paused = paused;
  o.seed = 4;
  return o;
}

std::uint64_t wait_for_generation(Session& s, std::uint64_t at_least) {
  for (int i = 0; i < 2000; ++i) {
    auto g = s.info().generation;
    if (g >= at_least) return g;
    std::this_thread::sleep_for(5ms);
  }
  return s.info().generation;
}

}  // namespace

TEST_CASE("create options") {
  auto o = session_options_from_json(nlohmann::json::parse("{}"));
  CHECK_FALSE(o.graph);
  CHECK(o.initial_population == 1000);
  CHECK_FALSE(o.start_paused);
  o = session_options_from_json(nlohmann::json());
  CHECK_FALSE(o.constraints);

  o = session_options_from_json(nlohmann::json::parse(
      R"({"constraints":{"heroes":1,"enemies":1,"quest_items":0},"dims":{"selected":["step","conflicts"],"granularity":4},"seed":9,"paused":true})"));
  CHECK(o.constraints == LevelConstraints{1, 1, 0});
  REQUIRE(o.dims);
  CHECK(o.dims->granularity == 4);
  CHECK(o.seed == std::optional<std::uint64_t>(9));
  CHECK(o.start_paused);

  try {
    session_options_from_json(nlohmann::json::parse(R"({"paused":1})"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.location() == "/paused");
  }
  try {
    session_options_from_json(nlohmann::json::parse(R"({"graph":{"nodes":[{"id":"a","trope":"X"}]}})"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.location() == "/graph/nodes/0/trope");
  }
  CHECK_THROWS_AS(session_options_from_json(nlohmann::json::parse(R"({"seed":-1})")), ParseError);
  CHECK_THROWS_AS(session_options_from_json(nlohmann::json::parse(R"({"initial_population":0})")),
                  ParseError);
  CHECK_THROWS_AS(session_options_from_json(nlohmann::json::parse(R"({"dims":{"selected":["novelty"]}})")),
                  UnknownDimension);
}

TEST_CASE("pause freezes the generation counter") {
  Session s("t", quick(true), 0);
  std::this_thread::sleep_for(50ms);
  CHECK(s.info().generation == 0);
  CHECK(s.info().status == SessionStatus::Paused);
  CHECK_FALSE(s.wait_published(1, 30ms));

  s.resume();
  CHECK(wait_for_generation(s, 3) >= 3);
  CHECK(s.info().status == SessionStatus::Running);
  auto published = s.wait_published(1, 2000ms);
  REQUIRE(published);
  CHECK(published->first > 1);

  s.pause();
  auto frozen = s.info().generation;
  std::this_thread::sleep_for(60ms);
  CHECK(s.info().generation == frozen);
  CHECK(s.info().status == SessionStatus::Paused);
}

TEST_CASE("target acknowledgements") {
  Session s("t", quick(), 0);
  auto ack = s.target();
  CHECK(ack.target == default_graph());
  CHECK(ack.evaluation.fitness == 1.0);
  CHECK(ack.digest == canonical_hash(default_graph()));
  CHECK(ack.patterns["ConfP"] == 1);

  auto next = builtin_target("4.5").graph;
  auto updated = s.update_target(next);
  CHECK(updated.digest == canonical_hash(next));
  CHECK(updated.evaluation.dimension(Dimension::Interestingness) == doctest::Approx(1.0 / 3.0));
  CHECK(s.target().digest == updated.digest);
  auto doc = ack_to_json(updated);
  CHECK(doc["digest"] == updated.digest);
  CHECK(doc["evaluation"]["fitness"] == updated.evaluation.fitness);

  // The identity individual sits in the zero-step column.
  bool identity = false;
  for (const auto& c : s.grid().grid) identity |= c.digest == updated.digest && c.x == 0;
  CHECK(identity);
}

TEST_CASE("elites and adoption") {
  Session s("t", quick(), 0);
  auto grid = s.grid(Dimension::Step, Dimension::Interestingness);
  REQUIRE_FALSE(grid.grid.empty());
  const auto cell = grid.grid.back();
  auto view = s.elite(cell.x, cell.y);
  CHECK(view.digest == cell.digest);
  CHECK(canonical_hash(view.phenotype) == view.digest);
  // Recompute independently of the session.
  EvaluationContext ctx(default_graph());
  auto fresh = evaluate(view.phenotype, ctx);
  CHECK(view.evaluation.fitness == fresh.fitness);
  CHECK(view.evaluation.dimensions == fresh.dimensions);
  CHECK(view.patterns == pattern_summary(detect_patterns(view.phenotype)));
  auto doc = elite_to_json(view);
  CHECK(doc["cell"][0] == cell.x);
  CHECK(doc["fitness"] == fresh.fitness);

  bool found_empty = false;
  for (int i = 0; i < 5 && !found_empty; ++i) {
    for (int j = 0; j < 5 && !found_empty; ++j) {
      bool occupied = false;
      for (const auto& c : grid.grid) occupied |= c.x == i && c.y == j;
      if (occupied) continue;
      found_empty = true;
      CHECK_THROWS_AS(s.elite(i, j), NoElite);
      CHECK_THROWS_AS(s.adopt(i, j), NoElite);
    }
  }
  CHECK(found_empty);
  CHECK_THROWS_AS(s.elite(-1, 40), NoElite);

  auto ack = s.adopt(cell.x, cell.y);
  CHECK(ack.digest == cell.digest);
  CHECK(s.target().target == view.phenotype);
}

TEST_CASE("dimension and constraint changes") {
  Session s("t", quick(), 0);
  DimensionSpec spec;
  spec.selected = {Dimension::Conflicts, Dimension::PlotDevices, Dimension::Step};
  spec.granularity = 4;
  s.set_dimensions(spec);
  auto info = s.info();
  CHECK(info.dims == spec);
  auto g = s.grid();
  CHECK(g.x == Dimension::Conflicts);
  CHECK(g.y == Dimension::PlotDevices);
  CHECK(g.granularity == 4);
  DimensionSpec bad;
  bad.selected = {};
  CHECK_THROWS_AS(s.set_dimensions(bad), InvalidArgument);

  s.set_constraints(LevelConstraints{1, 1, 1});
  CHECK(s.info().constraints == LevelConstraints{1, 1, 1});
  CHECK_THROWS_AS(s.set_constraints(LevelConstraints{1, -1, 1}), InvalidArgument);
  s.set_constraints(std::nullopt);
  CHECK_FALSE(s.info().constraints);
  auto doc = info_to_json(s.info());
  CHECK(doc["status"] == "paused");
  CHECK(doc["constraints"].is_null());
}

TEST_CASE("checkpoints restore identically") {
  auto o = quick(false);
  Session s("t", o, 0);
  wait_for_generation(s, 4);
  s.pause();
  auto doc = s.checkpoint();
  CHECK(doc["status"] == "paused");
  Session restored(nlohmann::json::parse(doc.dump()));
  CHECK(restored.id() == "t");
  CHECK(restored.checkpoint().dump() == doc.dump());
  CHECK(restored.info().generation == s.info().generation);
  CHECK(snapshot_to_json(restored.grid()).dump() == snapshot_to_json(s.grid()).dump());
  CHECK_THROWS_AS(Session(nlohmann::json::parse(R"({"format":"other"})")), ParseError);
}

TEST_CASE("stopped sessions refuse work") {
  Session s("t", quick(), 0);
  s.stop();
  CHECK_THROWS_AS(s.info(), Error);
}

TEST_CASE("manager persistence") {
  auto dir = fs::temp_directory_path() / "story_session_state";
  fs::remove_all(dir);
  std::string first_doc, second_doc;
  {
    SessionManager m(dir);
    auto a = m.create(quick());
    auto b = m.create(quick());
    CHECK(a->id() == "s1");
    CHECK(b->id() == "s2");
    b->update_target(builtin_target("2").graph);
    CHECK(m.ids() == std::vector<std::string>{"s1", "s2"});
    CHECK_THROWS_AS(m.get("s9"), NotFound);
    m.persist();
    first_doc = a->checkpoint().dump();
    second_doc = b->checkpoint().dump();
  }
  CHECK(fs::exists(dir / "s1.session.json"));
  {
    SessionManager m(dir);
    CHECK(m.ids() == std::vector<std::string>{"s1", "s2"});
    CHECK(m.get("s1")->checkpoint().dump() == first_doc);
    CHECK(m.get("s2")->checkpoint().dump() == second_doc);
    CHECK(m.get("s2")->target().target == builtin_target("2").graph);
    CHECK(m.create(quick())->id() == "s3");
  }
  fs::remove_all(dir);

  SessionManager memory;
  auto s = memory.create(quick());
  CHECK(s->id() == "s1");
  memory.persist();  // no state directory, nothing to write
}
