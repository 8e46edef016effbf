#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sercg/vuln.hpp"

namespace sercg::vuln {

namespace {

std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

constexpr std::string_view kDefaultSinks =
    "Sys.exec(String),command-execution\n"
    "Sys.writeFile(String,String),file-write\n"
    "Sys.eval(String),code-evaluation\n";

}  // namespace

bool SinkSpec::matches(std::string_view q) const {
  if (pattern.size() >= 2 && pattern.compare(pattern.size() - 2, 2, ".*") == 0) {
    auto owner = pattern.substr(0, pattern.size() - 2);
    auto paren = q.find('(');
    auto dot = q.rfind('.', paren);
    return dot != std::string_view::npos && q.substr(0, dot) == owner;
  }
  return q == pattern;
}

std::string_view default_sinks_csv() { return kDefaultSinks; }

SinkList load_sinks(std::string_view csv) {
  SinkList out;
  std::set<std::string> seen;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos) throw MalformedSinkLine(n, "expected 'signature,category'");
    SinkSpec s{trim(line.substr(0, comma)), trim(line.substr(comma + 1))};
    if (s.category.empty()) throw MalformedSinkLine(n, "empty category");
    bool wildcard = s.pattern.size() > 2 && s.pattern.compare(s.pattern.size() - 2, 2, ".*") == 0;
    if (!wildcard && !sir::parse_method_signature(s.pattern))
      throw MalformedSinkLine(n, "bad signature '" + s.pattern + "'");
    if (!seen.insert(s.pattern).second) {
      out.warnings.push_back("line " + std::to_string(n) + ": duplicate sink " + s.pattern + " ignored");
      continue;
    }
    out.sinks.push_back(std::move(s));
  }
  return out;
}

SearchResult find_vulnerable_paths(const analysis::Solver& solver, const std::vector<SinkSpec>& sinks,
                                   std::size_t max_nodes, std::size_t budget) {
  using analysis::NodeId;
  SearchResult res;
  std::vector<std::vector<NodeId>> succ(solver.node_count());
  for (const auto& e : solver.edges()) succ[e.from].push_back(e.to);
  for (auto& s : succ) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
  }
  std::vector<std::string> sink_of(solver.node_count());
  for (NodeId n = 0; n < solver.node_count(); ++n)
    for (const auto& s : sinks)
      if (s.matches(solver.node_method_name(n))) {
        sink_of[n] = s.category;
        break;
      }

  std::vector<NodeId> sources;
  for (const auto* m : solver.models())
    if (m->kind == analysis::SerKind::Deserialize) sources.push_back(m->node);
  std::sort(sources.begin(), sources.end());

  std::vector<NodeId> path;
  std::vector<bool> on_path(solver.node_count(), false);
  std::size_t expansions = 0;
  std::function<void(NodeId)> dfs = [&](NodeId n) {
    if (++expansions > budget) {
      res.truncated = true;
      return;
    }
    path.push_back(n);
    on_path[n] = true;
    if (path.size() > 1 && !sink_of[n].empty()) {
      res.paths.push_back({path, sink_of[n]});
    } else if (path.size() < max_nodes) {
      for (NodeId m : succ[n]) {
        if (on_path[m]) continue;
        dfs(m);
        if (res.truncated) break;
      }
    }
    on_path[n] = false;
    path.pop_back();
  };
  for (NodeId s : sources) {
    if (res.truncated) break;
    dfs(s);
  }
  return res;
}

std::string paths_to_json(const analysis::Solver& solver, const SearchResult& result) {
  using nlohmann::ordered_json;
  ordered_json paths = ordered_json::array();
  for (const auto& p : result.paths) {
    ordered_json nodes = ordered_json::array();
    for (auto n : p.nodes)
      nodes.push_back({{"id", n},
                       {"method", solver.node_method_name(n)},
                       {"context", solver.context_label(solver.node_context(n))}});
    paths.push_back({{"category", p.category}, {"length", p.nodes.size()}, {"nodes", nodes}});
  }
  ordered_json out{{"schema", "sercg.vuln/1"},
                   {"policy", analysis::to_string(solver.options().policy)},
                   {"mode", analysis::to_string(solver.options().mode)},
                   {"truncated", result.truncated},
                   {"paths", paths}};
  return out.dump(2) + "\n";
}

std::string render_chains(const analysis::Solver& solver, const SearchResult& result) {
  std::string out;
  for (const auto& p : result.paths) {
    for (std::size_t i = 0; i < p.nodes.size(); ++i) {
      if (i) out += " -> ";
      out += solver.node_method_name(p.nodes[i]);
      auto ctx = solver.context_label(solver.node_context(p.nodes[i]));
      if (ctx != "global") out += "[" + ctx + "]";
    }
    out += "  (" + p.category + ")\n";
  }
  if (result.truncated) out += "(search truncated)\n";
  return out;
}

}  // namespace sercg::vuln
