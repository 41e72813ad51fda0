// Graph document format:
//   { "nodes": [{"id": str, "trope": code}],
//     "edges": [{"src": str, "dst": str, "kind": "PLAIN"|"ENTAIL"}] }
// Keys are written in that order.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "story/graph.hpp"

namespace story {

using ordered_json = nlohmann::ordered_json;

ordered_json graph_to_json(const NarrativeGraph& g);

/// Throws ParseError (with a JSON pointer location) on schema problems and
/// IntegrityError on dangling edges or duplicate ids.
NarrativeGraph graph_from_json(const nlohmann::json& doc);

std::string serialize(const NarrativeGraph& g);

/// Throws ParseError with the byte offset for malformed JSON.
NarrativeGraph deserialize(std::string_view document);

NarrativeGraph load_graph(const std::filesystem::path& path);
void save_graph(const NarrativeGraph& g, const std::filesystem::path& path);

}  // namespace story
