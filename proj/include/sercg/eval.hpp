#pragma once

// Static versus dynamic call-graph comparison and call-site annotations.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sercg/analysis.hpp"
#include "sercg/oracle.hpp"

namespace sercg::eval {

using Edge = std::pair<std::string, std::string>;  // caller, callee (qualified)
using EdgeSet = std::set<Edge>;

class ProgramMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownAnnotationTarget : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedAnnotation : public std::runtime_error {
 public:
  MalformedAnnotation(std::size_t line, const std::string& what)
      : std::runtime_error("annotations line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct Filter {
  bool drop_clinit = true;
  bool drop_intrinsic = true;  // intrinsic -> intrinsic
  bool drop_excluded = true;
  bool drop_lib_lib = true;

  static Filter none() { return {false, false, false, false}; }
};

enum class Category { AppApp, AppLib, LibApp, LibLib };
std::string_view to_string(Category c);

EdgeSet static_edges(const analysis::Solver& solver);
EdgeSet dynamic_edges(const oracle::DynamicCallGraph& dcg);

/// Throws ProgramMismatch when an endpoint is not a method of `program`.
EdgeSet apply_filter(const sir::Program& program, const EdgeSet& edges, const Filter& filter);
Category category(const sir::Program& program, const Edge& e);
std::map<Category, std::size_t> categorize(const sir::Program& program, const EdgeSet& edges);

/// Dynamic edges not in the static graph, both filtered.
EdgeSet missing_edges(const sir::Program& program, const EdgeSet& stat, const EdgeSet& dyn, const Filter& f);
/// Static edges not observed at run time, both filtered.
EdgeSet spurious_edges(const sir::Program& program, const EdgeSet& stat, const EdgeSet& dyn, const Filter& f);

/// Edges of `graph` that serialization makes reachable: the caller is a
/// protocol method, or the caller is not reachable from `roots` without
/// passing through a protocol method.
EdgeSet serialization_reachable(const EdgeSet& graph, const std::vector<std::string>& roots);

enum class Polarity { MustReach, MustNotReach };

struct Annotation {
  std::string site;
  std::string callee;  // qualified signature
  Polarity polarity = Polarity::MustReach;
};

/// CSV `site-id,callee-signature,polarity`; blank lines and `#` comments skipped.
std::vector<Annotation> parse_annotations(std::string_view text);

struct Verdict {
  Annotation annotation;
  bool reached = false;
  bool pass = false;
};

/// A site reaches a callee when the callee is a target of the site, or a
/// target of a synthetic model the site calls.
std::vector<Verdict> check_annotations(const analysis::Solver& solver, const std::vector<Annotation>& annotations);

struct FixtureReport {
  std::string name;
  std::string policy;
  std::string mode;
  EdgeSet missing;
  EdgeSet spurious;
  EdgeSet missing_serialization;  // missing edges that serialization makes reachable
  std::map<Category, std::size_t> missing_by_category;
  std::map<Category, std::size_t> spurious_by_category;
  std::vector<Verdict> verdicts;
  std::size_t static_edge_count = 0;
  std::size_t dynamic_edge_count = 0;
};

FixtureReport compare(const std::string& name, const analysis::Solver& solver,
                      const oracle::DynamicCallGraph* dcg, const std::vector<std::string>& roots,
                      const std::vector<Annotation>& annotations, const Filter& filter = {});

std::string reports_to_json(const std::vector<FixtureReport>& reports);
std::string reports_to_table(const std::vector<FixtureReport>& reports);

}  // namespace sercg::eval
