#pragma once

// Paths from deserialization points to security-sensitive sinks.

#include <stdexcept>
#include <string>
#include <vector>

#include "sercg/analysis.hpp"

namespace sercg::vuln {

class MalformedSinkLine : public std::runtime_error {
 public:
  MalformedSinkLine(std::size_t line, const std::string& what)
      : std::runtime_error("sinks line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// `Owner.name(T,...)` or `Owner.*` for every method of a class.
struct SinkSpec {
  std::string pattern;
  std::string category;
  bool matches(std::string_view qualified_method) const;
  bool operator==(const SinkSpec&) const = default;
};

struct SinkList {
  std::vector<SinkSpec> sinks;
  std::vector<std::string> warnings;
};

/// Lines `signature-pattern,category`; blank lines and `#` comments skipped.
SinkList load_sinks(std::string_view csv);
std::string_view default_sinks_csv();

struct VulnPath {
  std::vector<analysis::NodeId> nodes;  // model node first, sink node last
  std::string category;
};

struct SearchResult {
  std::vector<VulnPath> paths;
  bool truncated = false;
};

/// Bounded DFS over simple paths from every deserialization model node.
SearchResult find_vulnerable_paths(const analysis::Solver& solver, const std::vector<SinkSpec>& sinks,
                                   std::size_t max_nodes = 15, std::size_t expansion_budget = 1'000'000);

std::string paths_to_json(const analysis::Solver& solver, const SearchResult& result);
/// One arrow-joined line per path.
std::string render_chains(const analysis::Solver& solver, const SearchResult& result);

}  // namespace sercg::vuln
