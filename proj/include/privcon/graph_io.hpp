#pragma once

// Graph documents: {"n": 3, "edges": [[1, 2, 1.0], [2, 3, 1.0], [3, 1, 1.0]]}
// Node labels are 1-based. An optional "undirected": true mirrors every edge.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "privcon/graph.hpp"

namespace privcon {

using Json = nlohmann::json;

/// Malformed structured-text input (syntax or schema), with a location prefix.
class FormatError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

inline WeightedDigraph graph_from_json(const Json& doc) {
  if (!doc.is_object()) throw GraphError("graph: document must be an object");
  if (!doc.contains("n")) throw GraphError("graph: missing field 'n'");
  if (!doc.at("n").is_number_integer() || doc.at("n").get<long long>() < 1) {
    throw GraphError("graph: field 'n' must be a positive integer");
  }
  const auto n = doc.at("n").get<std::size_t>();
  if (!doc.contains("edges") || !doc.at("edges").is_array()) {
    throw GraphError("graph: field 'edges' must be an array");
  }
  std::vector<Edge> edges;
  const auto& list = doc.at("edges");
  for (std::size_t e = 0; e < list.size(); ++e) {
    const auto& item = list[e];
    const std::string where = "graph: edges[" + std::to_string(e) + "]";
    if (!item.is_array() || item.size() != 3) {
      throw GraphError(where + ": expected [from, to, weight]");
    }
    for (int c = 0; c < 2; ++c) {
      if (!item[c].is_number_integer()) {
        throw GraphError(where + "[" + std::to_string(c) + "]: node label must be an integer");
      }
      const auto label = item[c].get<long long>();
      if (label < 1 || static_cast<std::size_t>(label) > n) {
        throw GraphError(where + "[" + std::to_string(c) + "]: node " + std::to_string(label) +
                         " out of range [1.." + std::to_string(n) + "]");
      }
    }
    if (!item[2].is_number()) throw GraphError(where + "[2]: weight must be a number");
    edges.push_back({item[0].get<std::size_t>() - 1, item[1].get<std::size_t>() - 1, item[2].get<double>()});
  }
  try {
    if (doc.value("undirected", false)) return WeightedDigraph::undirected(n, edges);
    return WeightedDigraph::from_edges(n, edges);
  } catch (const GraphError& err) {
    throw GraphError(std::string("graph: ") + err.what());
  }
}

inline Json graph_to_json(const WeightedDigraph& g) {
  Json edges = Json::array();
  for (const auto& e : g.edges()) edges.push_back({e.from + 1, e.to + 1, e.weight});
  return {{"n", g.size()}, {"edges", std::move(edges)}};
}

/// Parses JSON text; syntax errors are reported with line and column.
inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < err.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw FormatError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": malformed JSON (" + err.what() + ")");
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline WeightedDigraph load_graph(const std::string& path) {
  const Json doc = parse_json_text(read_text_file(path), path);
  try {
    return graph_from_json(doc);
  } catch (const GraphError& err) {
    throw GraphError(path + ": " + err.what());
  }
}

}  // namespace privcon
