#include "story/targets.hpp"

#include "story/error.hpp"

namespace story {

namespace {

constexpr auto P = EdgeKind::Plain;
constexpr auto E = EdgeKind::Entail;

// Platformer: the hero fights a fake villain first, and the real villain
// holds the princess.
NarrativeGraph platformer() {
  return NarrativeGraph(
      {{"mario", Trope::Hero},
       {"peach", Trope::Hero},
       {"bowser", Trope::Bad},
       {"dra", Trope::Dra},
       {"c1", Trope::Conflict},
       {"c2", Trope::Conflict}},
      {{"mario", "c1", P},
       {"c1", "bowser", P},
       {"mario", "c2", P},
       {"c2", "dra", P},
       {"dra", "bowser", E},
       {"bowser", "peach", E}});
}

// Top-down adventure: the hero's goal is a quest item guarded by a chain of
// villains.
NarrativeGraph adventure() {
  return NarrativeGraph(
      {{"link", Trope::Hero},
       {"mcg", Trope::Mcg},
       {"enemy", Trope::Enemy},
       {"bad", Trope::Bad},
       {"c1", Trope::Conflict},
       {"c2", Trope::Conflict}},
      {{"link", "mcg", P},
       {"link", "c1", P},
       {"c1", "enemy", P},
       {"link", "c2", P},
       {"c2", "bad", P},
       {"enemy", "bad", E},
       {"bad", "mcg", E}});
}

// Time-travel adventure: the quest item turns the hero into their older self,
// and a disguised hero reveals the princess.
NarrativeGraph time_travel() {
  return NarrativeGraph(
      {{"link", Trope::Hero},
       {"ocarina", Trope::Mcg},
       {"adult", Trope::Neo},
       {"sheik", Trope::Sh},
       {"zelda", Trope::Hero},
       {"ganon", Trope::Bad},
       {"c1", Trope::Conflict},
       {"c2", Trope::Conflict}},
      {{"link", "ocarina", P},
       {"ocarina", "adult", E},
       {"adult", "c1", P},
       {"c1", "ganon", P},
       {"sheik", "c2", P},
       {"c2", "ganon", P},
       {"sheik", "zelda", P}});
}

NarrativeGraph design_step(int step) {
  NarrativeGraph g = default_graph();
  if (step >= 2) g.retype_node("n2", Trope::Bad);
  if (step >= 3) {
    g.add_node(Trope::Mcg, "n3");
    g.add_edge({"n0", "n3", P});
  }
  if (step >= 4) {
    g.add_node(Trope::Dra, "n4");
    g.add_node(Trope::Conflict, "n5");
    g.add_edge({"n0", "n5", P});
    g.add_edge({"n5", "n4", P});
  }
  if (step >= 5) g.add_edge({"n4", "n3", E});
  return g;
}

}  // namespace

BuiltinTarget builtin_target(std::string_view id) {
  if (id == "1") return {"1", platformer(), {2, 2, 2}};
  if (id == "2") return {"2", adventure(), {2, 2, 3}};
  if (id == "3") return {"3", time_travel(), {4, 1, 1}};
  for (int step = 1; step <= 5; ++step) {
    if (id == "4." + std::to_string(step))
      return {std::string(id), design_step(step), {2, 2, 2}};
  }
  throw NotFound("unknown builtin target '" + std::string(id) + "'");
}

std::vector<std::string> builtin_target_ids() {
  return {"1", "2", "3", "4.1", "4.2", "4.3", "4.4", "4.5"};
}

std::vector<std::string> design_schedule() {
  return {"4.1", "4.2", "4.3", "4.4", "4.5"};
}

}  // namespace story
