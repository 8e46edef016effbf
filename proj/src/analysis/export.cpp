#include <sstream>

#include <json.hpp>

#include "sercg/analysis.hpp"

namespace sercg::analysis {

std::string to_json(const Solver& solver) {
  using nlohmann::json;
  json nodes = json::array();
  for (NodeId n = 0; n < solver.node_count(); ++n) {
    json node{{"id", n},
              {"method", solver.node_method_name(n)},
              {"context", solver.context_label(solver.node_context(n))},
              {"synthetic", solver.is_model_node(n)}};
    if (const auto* m = solver.model_of(n)) {
      json instrs = json::array();
      for (const auto& b : m->body.blocks)
        for (const auto& i : b.instrs) instrs.push_back(b.label + ": " + sir::print_instruction(m->body, i));
      node["instructions"] = instrs;
    }
    nodes.push_back(node);
  }
  json edges = json::array();
  for (const auto& e : solver.edges()) edges.push_back({{"from", e.from}, {"site", e.site}, {"to", e.to}});
  json models = json::array();
  for (const auto* m : solver.models())
    models.push_back({{"site", m->site},
                      {"kind", m->kind == SerKind::Serialize ? "serialize" : "deserialize"},
                      {"node", m->node},
                      {"body", sir::print_method(solver.program(), m->body)}});
  json out{{"schema", "sercg.callgraph/1"},
           {"policy", to_string(solver.options().policy)},
           {"mode", to_string(solver.options().mode)},
           {"nodes", nodes},
           {"edges", edges},
           {"models", models},
           {"stats",
            {{"nodes", solver.node_count()},
             {"edges", solver.edges().size()},
             {"phase1_edges", solver.phase1_edge_count()},
             {"extra_rounds", solver.extra_rounds()},
             {"visits", solver.visits()},
             {"side_effect_edges", solver.side_effect_edges().size()}}}};
  return out.dump(2) + "\n";
}

std::string to_dot(const Solver& solver) {
  auto esc = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out;
  };
  std::ostringstream os;
  os << "digraph callgraph {\n  node [shape=box];\n";
  for (NodeId n = 0; n < solver.node_count(); ++n) {
    os << "  n" << n << " [label=\"" << esc(solver.node_method_name(n)) << "\\n"
       << esc(solver.context_label(solver.node_context(n))) << "\"";
    if (solver.is_model_node(n)) os << ", style=dashed";
    os << "];\n";
  }
  for (const auto& e : solver.edges())
    os << "  n" << e.from << " -> n" << e.to << " [label=\"" << esc(e.site) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace sercg::analysis
