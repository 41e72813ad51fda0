// Grammar document format:
//   { "rules": [ { "lhs": RuleGraph, "rhs": RuleGraph,
//                  "correspondence": [int|null, ...] } ] }
// RuleGraph nodes carry either "trope": code or "class": name (wildcard);
// edges use integer node positions.

#pragma once

#include "json.hpp"
#include "story/grammar.hpp"

namespace story {

nlohmann::ordered_json grammar_to_json(const GraphGrammar& g);
GraphGrammar grammar_from_json(const nlohmann::json& doc);  // throws ParseError

nlohmann::ordered_json recipe_to_json(const Recipe& r);
Recipe recipe_from_json(const nlohmann::json& doc);

}  // namespace story
