#include "story/grammar_io.hpp"

#include "story/error.hpp"

namespace story {

namespace {

using ojson = nlohmann::ordered_json;

ojson rule_graph_to_json(const RuleGraph& g) {
  ojson doc;
  doc["nodes"] = ojson::array();
  for (const auto& label : g.nodes) {
    ojson node;
    if (label.trope) node["trope"] = std::string(code(*label.trope));
    else node["class"] = std::string(class_name(label.cls));
    doc["nodes"].push_back(std::move(node));
  }
  doc["edges"] = ojson::array();
  for (const auto& e : g.edges) {
    ojson edge;
    edge["src"] = e.src;
    edge["dst"] = e.dst;
    edge["kind"] = std::string(kind_name(e.kind));
    doc["edges"].push_back(std::move(edge));
  }
  return doc;
}

std::size_t read_index(const nlohmann::json& v, const std::string& where) {
  if (!v.is_number_unsigned()) throw ParseError(where, "expected a node position");
  return v.get<std::size_t>();
}

RuleGraph rule_graph_from_json(const nlohmann::json& doc, const std::string& where) {
  if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
    throw ParseError(where, "expected {nodes, edges}");
  }
  RuleGraph g;
  const auto& nodes = doc["nodes"];
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string at = where + "/nodes/" + std::to_string(i);
    const auto& n = nodes[i];
    if (n.contains("trope") && n["trope"].is_string()) {
      auto t = parse_trope(n["trope"].get<std::string>());
      if (!t) throw ParseError(at + "/trope", "unknown trope code");
      g.nodes.push_back(NodeLabel::exact(*t));
    } else if (n.contains("class") && n["class"].is_string()) {
      auto c = parse_trope_class(n["class"].get<std::string>());
      if (!c) throw ParseError(at + "/class", "unknown trope class");
      g.nodes.push_back(NodeLabel::wildcard(*c));
    } else {
      throw ParseError(at, "node needs 'trope' or 'class'");
    }
  }
  if (doc.contains("edges")) {
    const auto& edges = doc["edges"];
    if (!edges.is_array()) throw ParseError(where + "/edges", "expected an array");
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string at = where + "/edges/" + std::to_string(i);
      const auto& e = edges[i];
      if (!e.is_object() || !e.contains("src") || !e.contains("dst") ||
          !e.contains("kind") || !e["kind"].is_string()) {
        throw ParseError(at, "expected {src, dst, kind}");
      }
      auto kind = parse_edge_kind(e["kind"].get<std::string>());
      if (!kind) throw ParseError(at + "/kind", "unknown edge kind");
      g.edges.push_back({read_index(e["src"], at + "/src"),
                         read_index(e["dst"], at + "/dst"), *kind});
    }
  }
  return g;
}

}  // namespace

nlohmann::ordered_json grammar_to_json(const GraphGrammar& g) {
  ojson doc;
  doc["rules"] = ojson::array();
  for (const auto& rule : g.rules) {
    ojson r;
    r["lhs"] = rule_graph_to_json(rule.lhs);
    r["rhs"] = rule_graph_to_json(rule.rhs);
    r["correspondence"] = ojson::array();
    for (const auto& c : rule.correspondence) {
      if (c) r["correspondence"].push_back(*c);
      else r["correspondence"].push_back(nullptr);
    }
    doc["rules"].push_back(std::move(r));
  }
  return doc;
}

GraphGrammar grammar_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array()) {
    throw ParseError("", "expected {rules: [...]}");
  }
  GraphGrammar g;
  const auto& rules = doc["rules"];
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const std::string at = "/rules/" + std::to_string(i);
    const auto& r = rules[i];
    if (!r.is_object() || !r.contains("lhs") || !r.contains("rhs")) {
      throw ParseError(at, "rule needs lhs and rhs");
    }
    ProductionRule rule;
    rule.lhs = rule_graph_from_json(r["lhs"], at + "/lhs");
    rule.rhs = rule_graph_from_json(r["rhs"], at + "/rhs");
    if (!r.contains("correspondence") || !r["correspondence"].is_array()) {
      throw ParseError(at + "/correspondence", "expected an array");
    }
    const auto& corr = r["correspondence"];
    for (std::size_t k = 0; k < corr.size(); ++k) {
      if (corr[k].is_null()) rule.correspondence.emplace_back();
      else rule.correspondence.emplace_back(
          read_index(corr[k], at + "/correspondence/" + std::to_string(k)));
    }
    if (auto problems = rule.problems(); !problems.empty()) {
      throw ParseError(at, problems.front());
    }
    g.rules.push_back(std::move(rule));
  }
  if (auto problems = g.problems(); !problems.empty()) {
    throw ParseError("/rules", problems.front());
  }
  return g;
}

nlohmann::ordered_json recipe_to_json(const Recipe& r) {
  ojson doc = ojson::array();
  for (const auto& step : r.steps()) doc.push_back({step.rule, step.count});
  return doc;
}

Recipe recipe_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParseError("", "recipe must be an array");
  Recipe r;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& step = doc[i];
    if (!step.is_array() || step.size() != 2 || !step[0].is_number_unsigned() ||
        !step[1].is_number_integer() || step[1].get<int>() < 1) {
      throw ParseError("/" + std::to_string(i), "expected [rule, count]");
    }
    r.add(step[0].get<std::size_t>(), step[1].get<int>());
  }
  return r;
}

}  // namespace story
