#pragma once

// On-the-fly call-graph construction with a pluggable pointer-analysis
// policy, plus serialization models and taint-driven refinement.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sercg/hierarchy.hpp"
#include "sercg/sir.hpp"

namespace sercg::analysis {

enum class Policy { CHA, RTA, ZeroCFA, ZeroOneCFA, OneCFA };
enum class Mode { Seneca, Baseline, Downcast };

std::string_view to_string(Policy p);
std::string_view to_string(Mode m);
std::optional<Policy> parse_policy(std::string_view text);
std::optional<Mode> parse_mode(std::string_view text);

using ObjId = std::uint32_t;
using ContextId = std::uint32_t;
using NodeId = std::uint32_t;
inline constexpr std::uint32_t kNone = 0xffffffffu;

class IterationCeiling : public std::runtime_error {
 public:
  explicit IterationCeiling(std::size_t visits)
      : std::runtime_error("analysis exceeded " + std::to_string(visits) + " method visits") {}
};

class UnknownEntrypoint : public std::runtime_error {
 public:
  explicit UnknownEntrypoint(const std::string& sig)
      : std::runtime_error("unknown entrypoint " + sig) {}
};

/// Heap abstraction. `site` identifies the allocation (or the synthetic
/// origin); equality is on all fields.
struct AbstractObject {
  std::string site;
  std::string type;
  bool synthetic = false;
  auto operator<=>(const AbstractObject&) const = default;
};

enum class ContextKind { Global, CallString, AllocSite, OneCallsite };

struct Context {
  ContextKind kind = ContextKind::Global;
  std::vector<std::string> sites;  // CallString
  ObjId object = kNone;            // AllocSite
  std::string site;                // OneCallsite
  auto operator<=>(const Context&) const = default;
};

/// Context for a callee reached from `caller` at `site`.
Context select_context(Policy policy, const Context& caller, std::string_view site, bool callee_is_model,
                       bool callee_is_static, std::optional<ObjId> receiver);

/// Dispatch of name/arity: points-to policies resolve each receiver object's
/// class; CHA uses the cone of the static type; RTA restricts CHA to
/// instantiated classes.
std::vector<sir::MethodId> dispatch(const hierarchy::Hierarchy& h, Policy policy,
                                    const std::vector<AbstractObject>& pts, std::string_view static_type,
                                    std::string_view name, std::size_t arity,
                                    const std::set<std::string, std::less<>>& instantiated);

enum class SerKind { Serialize, Deserialize };

/// Generated body standing in for ObjOut.writeObject / ObjIn.readObject at one site.
struct SyntheticModel {
  SerKind kind = SerKind::Deserialize;
  std::string site;
  NodeId node = kNone;
  sir::MethodDecl body;
  std::set<std::string> keys;  // refinement keys already emitted
};

struct SerPoint {
  std::string site;
  SerKind kind;
  NodeId caller;
  NodeId model;
  auto operator<=>(const SerPoint&) const = default;
};

struct Edge {
  NodeId from;
  std::string site;
  NodeId to;
  auto operator<=>(const Edge&) const = default;
};

struct Options {
  Policy policy = Policy::ZeroOneCFA;
  Mode mode = Mode::Seneca;
  std::size_t visit_ceiling = 10000;
};

/// A taint entity becoming true, in the order it happened.
struct TaintEvent {
  std::string entity;
};

class Solver {
 public:
  Solver(const sir::Program& program, Options options);
  ~Solver();
  Solver(const Solver&) = delete;
  Solver& operator=(const Solver&) = delete;

  const sir::Program& program() const { return program_; }
  const hierarchy::Hierarchy& hierarchy() const { return hier_; }
  const Options& options() const { return options_; }

  /// Entrypoints enter the worklist under the global context, deduplicated.
  void init_worklist(const std::vector<sir::MethodSignature>& entrypoints);
  std::vector<NodeId> pending() const;

  /// Phase 1: plain propagation with empty models.
  void run_phase1();
  /// Phase 2: refine models and propagate until nothing changes. Returns the
  /// number of refinement rounds that changed a model.
  std::size_t run_phase2();
  /// Both phases (Phase 2 skipped in baseline mode).
  void run();

  /// One refinement + drain round; false when no model changed.
  bool refine_round();

  // Results.
  std::size_t node_count() const;
  sir::MethodId node_method(NodeId n) const;
  const Context& node_context(NodeId n) const;
  std::optional<NodeId> find_node(sir::MethodId m, const Context& c) const;
  /// Qualified method name; model nodes report the stream method they replace.
  std::string node_method_name(NodeId n) const;
  std::string context_label(const Context& c) const;
  /// `method@context`, stable across runs.
  std::string node_key(NodeId n) const;
  bool is_model_node(NodeId n) const;
  const SyntheticModel* model_of(NodeId n) const;
  const std::vector<Edge>& edges() const { return edge_list_; }
  std::vector<SerPoint> ser_points() const;
  std::vector<const SyntheticModel*> models() const;

  const AbstractObject& object(ObjId o) const { return objects_.at(o); }
  std::size_t object_count() const { return objects_.size(); }
  std::vector<ObjId> points_to(NodeId n, sir::ValueId v) const;
  std::vector<ObjId> field_points_to(ObjId o, std::string_view field) const;
  bool value_tainted(NodeId n, sir::ValueId v) const;
  bool field_tainted(ObjId o, std::string_view field) const;
  bool static_tainted(std::string_view owner_dot_field) const;
  bool return_tainted(NodeId n) const;
  const std::vector<TaintEvent>& taint_events() const { return taint_events_; }
  /// Every pointer-like entity currently tainted, keyed by method, context and name.
  std::set<std::string> tainted_entities() const;

  std::size_t visits() const { return visits_; }
  std::size_t phase1_edge_count() const { return phase1_edges_; }
  std::size_t extra_rounds() const { return extra_rounds_; }
  /// Edges created by the tainted-call side effect: (edge index).
  const std::set<std::size_t>& side_effect_edges() const { return side_effect_edges_; }

  /// Marks a value tainted in a node and enqueues it (for tests and seeding).
  void seed_value_taint(NodeId n, sir::ValueId v);
  void drain();

 private:
  struct NodeState;
  struct ModelBuild;
  struct Impl;

  const sir::Program& program_;
  hierarchy::Hierarchy hier_;
  Options options_;

  std::vector<AbstractObject> objects_;
  std::map<AbstractObject, ObjId> object_index_;
  std::vector<Context> contexts_;
  std::map<Context, ContextId> context_index_;
  std::vector<std::unique_ptr<NodeState>> nodes_;
  std::map<std::pair<sir::MethodId, ContextId>, NodeId> node_index_;
  std::vector<Edge> edge_list_;
  std::set<Edge> edge_set_;
  std::set<std::size_t> side_effect_edges_;
  std::vector<std::unique_ptr<SyntheticModel>> models_;
  std::vector<std::unique_ptr<ModelBuild>> builds_;
  std::map<std::string, std::size_t, std::less<>> model_by_site_;
  std::set<SerPoint> ser_points_;

  std::map<std::pair<ObjId, std::string>, std::vector<ObjId>> heap_;
  std::map<std::pair<ObjId, std::string>, bool> heap_taint_;
  std::map<std::pair<ObjId, std::string>, std::set<NodeId>> heap_readers_;
  std::map<std::string, std::vector<ObjId>, std::less<>> statics_;
  std::map<std::string, bool, std::less<>> static_taint_;
  std::map<std::string, std::set<NodeId>, std::less<>> static_readers_;
  std::set<std::string, std::less<>> instantiated_;

  std::deque<NodeId> worklist_;
  std::vector<bool> queued_;
  std::size_t visits_ = 0;
  std::size_t phase1_edges_ = 0;
  std::size_t extra_rounds_ = 0;
  bool instantiated_grew_ = false;
  std::vector<TaintEvent> taint_events_;

  friend struct Impl;
};

/// Convenience: parse-free end-to-end run.
std::unique_ptr<Solver> analyze(const sir::Program& program,
                                const std::vector<sir::MethodSignature>& entrypoints, Options options);

/// Collapsed (caller-method, callee-method) pairs of a solved graph.
std::set<std::pair<std::string, std::string>> collapsed_edges(const Solver& solver);

/// JSON and Graphviz renderings of the call graph (models included).
std::string to_json(const Solver& solver);
std::string to_dot(const Solver& solver);

}  // namespace sercg::analysis
