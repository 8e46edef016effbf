#pragma once

// Reference interpreter for SIR with the concrete serialization protocol.
// Records every executed invocation as a dynamic call graph.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sercg/sir.hpp"

namespace sercg::oracle {

enum class ErrorKind {
  StepBudgetExceeded,
  NullDeref,
  CastFailure,
  MissingMain,
  NotSerializable,
  MissingClass,
  IndexOutOfBounds,
  EndOfStream,
  AbstractCall,
};
std::string_view to_string(ErrorKind k);

class OracleError : public std::runtime_error {
 public:
  OracleError(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// --- serialized forms --------------------------------------------------------

struct RecordRef {
  std::size_t id;
  bool operator==(const RecordRef&) const = default;
};

/// Field value inside a form: null, primitive, or a shared reference to a record.
using FormValue = std::variant<std::monostate, std::int64_t, bool, std::string, RecordRef>;

enum class RecordKind { Object, Array, List, Set, Map };

struct Record {
  RecordKind kind = RecordKind::Object;
  std::string type;  // class name, or element type for arrays
  std::vector<std::pair<std::string, FormValue>> fields;
  std::vector<FormValue> elems;   // arrays, lists, sets; maps store key, value pairs
  std::vector<FormValue> custom;  // values written by writeObject callbacks
  std::vector<std::string> missing_supers;  // superclasses whose data is absent (mismatch mode)
  bool operator==(const Record&) const = default;
};

struct SerializedForm {
  std::string channel;
  FormValue root;
  std::vector<Record> records;
  bool operator==(const SerializedForm&) const = default;
};

std::string form_to_json(const SerializedForm& form);
/// Throws std::invalid_argument on malformed input.
SerializedForm form_from_json(std::string_view text);

/// Assembles forms without a writer, as an attacker crafting a stream would.
class FormBuilder {
 public:
  explicit FormBuilder(std::string channel) { form_.channel = std::move(channel); }
  RecordRef object(std::string cls);
  RecordRef array(std::string elem_type);
  RecordRef container(RecordKind kind);
  FormBuilder& set(RecordRef r, std::string field, FormValue v);
  FormBuilder& add(RecordRef r, FormValue v);
  FormBuilder& custom(RecordRef r, FormValue v);
  FormBuilder& missing_super(RecordRef r, std::string cls);
  SerializedForm build(FormValue root) const;

 private:
  SerializedForm form_;
};

// --- dynamic call graph ------------------------------------------------------

struct DynamicCallGraph {
  std::map<std::pair<std::string, std::string>, std::size_t> edges;  // (caller, callee) -> hits

  void hit(const std::string& caller, const std::string& callee) { ++edges[{caller, callee}]; }
  bool has(const std::string& caller, const std::string& callee) const {
    return edges.count({caller, callee}) > 0;
  }
  std::string to_json() const;
  std::string to_csv() const;
};

struct Options {
  std::size_t step_budget = 1'000'000;
  /// Honour `missing_supers` in forms by running readObjectNoData.
  bool mismatch = false;
  /// Forms placed on channels before execution starts.
  std::vector<SerializedForm> preload;
};

struct Result {
  DynamicCallGraph dcg;
  std::optional<ErrorKind> error;
  std::string error_message;
  /// Invocation order: "call A -> B", plus "sink Sys.exec(arg)" and "error Kind" lines.
  std::vector<std::string> trace;
  std::vector<std::string> output;  // Sys.print lines
  std::size_t steps = 0;
  /// Forms written during the run, in order.
  std::vector<SerializedForm> written;
};

/// Runs entry with argv as a String[] argument (if the entry takes one).
/// Runtime errors end the run and are reported in the result; the call graph
/// up to that point is kept. Throws OracleError(MissingMain) if the entry does
/// not resolve to a method with a body.
Result interpret(const sir::Program& program, const sir::MethodSignature& entry,
                 const std::vector<std::string>& argv, const Options& options = {});

}  // namespace sercg::oracle
