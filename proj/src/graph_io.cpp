#include "story/graph_io.hpp"

#include <fstream>
#include <sstream>

#include "story/error.hpp"

namespace story {

namespace {

const nlohmann::json& require(const nlohmann::json& obj, const char* key,
                              const std::string& where) {
  if (!obj.is_object()) throw ParseError(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where, std::string("missing key '") + key + "'");
  }
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key,
                           const std::string& where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) {
    throw ParseError(where + "/" + key, "expected a string");
  }
  return v.get<std::string>();
}

}  // namespace

ordered_json graph_to_json(const NarrativeGraph& g) {
  ordered_json doc;
  doc["nodes"] = ordered_json::array();
  for (const auto& n : g.nodes()) {
    ordered_json node;
    node["id"] = n.id;
    node["trope"] = std::string(code(n.trope));
    doc["nodes"].push_back(std::move(node));
  }
  doc["edges"] = ordered_json::array();
  for (const auto& e : g.edges()) {
    ordered_json edge;
    edge["src"] = e.src;
    edge["dst"] = e.dst;
    edge["kind"] = std::string(kind_name(e.kind));
    doc["edges"].push_back(std::move(edge));
  }
  return doc;
}

NarrativeGraph graph_from_json(const nlohmann::json& doc) {
  const auto& nodes_doc = require(doc, "nodes", "");
  if (!nodes_doc.is_array()) throw ParseError("/nodes", "expected an array");
  std::vector<Node> nodes;
  nodes.reserve(nodes_doc.size());
  for (std::size_t i = 0; i < nodes_doc.size(); ++i) {
    const std::string where = "/nodes/" + std::to_string(i);
    auto id = require_string(nodes_doc[i], "id", where);
    auto trope_code = require_string(nodes_doc[i], "trope", where);
    auto trope = parse_trope(trope_code);
    if (!trope) {
      throw ParseError(where + "/trope", "unknown trope code '" + trope_code + "'");
    }
    nodes.push_back(Node{std::move(id), *trope});
  }

  std::vector<Edge> edges;
  if (doc.contains("edges")) {
    const auto& edges_doc = doc["edges"];
    if (!edges_doc.is_array()) throw ParseError("/edges", "expected an array");
    edges.reserve(edges_doc.size());
    for (std::size_t i = 0; i < edges_doc.size(); ++i) {
      const std::string where = "/edges/" + std::to_string(i);
      auto src = require_string(edges_doc[i], "src", where);
      auto dst = require_string(edges_doc[i], "dst", where);
      auto kind_text = require_string(edges_doc[i], "kind", where);
      auto kind = parse_edge_kind(kind_text);
      if (!kind) {
        throw ParseError(where + "/kind", "unknown edge kind '" + kind_text + "'");
      }
      edges.push_back(Edge{std::move(src), std::move(dst), *kind});
    }
  }
  try {
    return NarrativeGraph(std::move(nodes), std::move(edges));
  } catch (const Duplicate& e) {
    throw IntegrityError(e.what());
  }
}

std::string serialize(const NarrativeGraph& g) {
  return graph_to_json(g).dump(2) + "\n";
}

NarrativeGraph deserialize(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document.begin(), document.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), e.what());
  }
  return graph_from_json(doc);
}

NarrativeGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void save_graph(const NarrativeGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize(g);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace story
