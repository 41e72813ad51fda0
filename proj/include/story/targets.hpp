// Built-in targets for the reproduction experiments.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "story/evaluation.hpp"
#include "story/graph.hpp"

namespace story {

struct BuiltinTarget {
  std::string id;
  NarrativeGraph graph;
  LevelConstraints constraints;
};

/// Ids "1", "2", "3" and the design steps "4.1" to "4.5". Throws NotFound.
BuiltinTarget builtin_target(std::string_view id);

/// Every id accepted by builtin_target, in order.
std::vector<std::string> builtin_target_ids();

/// Design steps of the fourth experiment, injected one after another.
std::vector<std::string> design_schedule();

}  // namespace story
