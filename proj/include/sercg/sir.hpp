#pragma once

// SIR: a small Java-like SSA intermediate representation with serialization
// markers. A Program is built once by the parser and is read-only afterwards.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace sercg::sir {

using ValueId = std::uint32_t;
using BlockId = std::uint32_t;
using MethodId = std::uint32_t;
using ClassId = std::uint32_t;

inline constexpr std::uint32_t kInvalidId = 0xffffffffu;

enum class Scope { Application, Library, Excluded };
enum class Visibility { Public, Package };
enum class ContainerKind { List, Set, Map };

std::string_view to_string(Scope s);
std::string_view to_string(ContainerKind k);
std::optional<Scope> parse_scope(std::string_view text);

/// Names of the built-in declarations every Program carries.
namespace names {
inline constexpr std::string_view kObject = "Object";
inline constexpr std::string_view kSerializable = "Serializable";
inline constexpr std::string_view kValidation = "ObjectInputValidation";
inline constexpr std::string_view kObjOut = "ObjOut";
inline constexpr std::string_view kObjIn = "ObjIn";
inline constexpr std::string_view kSys = "Sys";
inline constexpr std::string_view kInit = "<init>";
inline constexpr std::string_view kClinit = "<clinit>";

inline constexpr std::string_view kWriteObject = "writeObject";
inline constexpr std::string_view kWriteReplace = "writeReplace";
inline constexpr std::string_view kReadObject = "readObject";
inline constexpr std::string_view kReadObjectNoData = "readObjectNoData";
inline constexpr std::string_view kReadResolve = "readResolve";
inline constexpr std::string_view kValidateObject = "validateObject";
inline constexpr std::string_view kDefaultReadObject = "defaultReadObject";
inline constexpr std::string_view kDefaultWriteObject = "defaultWriteObject";
inline constexpr std::string_view kRegisterValidation = "registerValidation";
}  // namespace names

/// Primitive literal. monostate encodes `null`.
struct Literal {
  std::variant<std::monostate, std::int64_t, bool, std::string> value;

  bool is_null() const { return std::holds_alternative<std::monostate>(value); }
  bool operator==(const Literal&) const = default;
};

namespace ins {
struct New { ValueId dst; std::string type; bool operator==(const New&) const = default; };
struct Const { ValueId dst; Literal value; bool operator==(const Const&) const = default; };
struct LoadStatic {
  ValueId dst; std::string owner; std::string field;
  bool operator==(const LoadStatic&) const = default;
};
struct LoadInstance {
  ValueId dst; ValueId base; std::string field;
  bool operator==(const LoadInstance&) const = default;
};
struct StoreStatic {
  std::string owner; std::string field; ValueId src;
  bool operator==(const StoreStatic&) const = default;
};
struct StoreInstance {
  ValueId base; std::string field; ValueId src;
  bool operator==(const StoreInstance&) const = default;
};
struct InstanceInvoke {
  std::optional<ValueId> dst; std::string site; ValueId receiver;
  std::string method; std::vector<ValueId> args;
  bool operator==(const InstanceInvoke&) const = default;
};
// Non-virtual call of owner.method on receiver (constructors, model callbacks).
struct SpecialInvoke {
  std::optional<ValueId> dst; std::string site; ValueId receiver;
  std::string owner; std::string method; std::vector<ValueId> args;
  bool operator==(const SpecialInvoke&) const = default;
};
struct StaticInvoke {
  std::optional<ValueId> dst; std::string site; std::string owner;
  std::string method; std::vector<ValueId> args;
  bool operator==(const StaticInvoke&) const = default;
};
struct Return { std::optional<ValueId> value; bool operator==(const Return&) const = default; };
struct ArrayNew {
  ValueId dst; std::string elem_type; ValueId length;
  bool operator==(const ArrayNew&) const = default;
};
struct ArrayLoad {
  ValueId dst; ValueId array; ValueId index;
  bool operator==(const ArrayLoad&) const = default;
};
struct ArrayStore {
  ValueId array; ValueId index; ValueId src;
  bool operator==(const ArrayStore&) const = default;
};
struct Phi {
  ValueId dst; std::vector<std::pair<ValueId, BlockId>> operands;
  bool operator==(const Phi&) const = default;
};
struct CheckCast {
  ValueId dst; std::string type; ValueId src;
  bool operator==(const CheckCast&) const = default;
};
struct Branch {
  ValueId cond; BlockId then_block; BlockId else_block;
  bool operator==(const Branch&) const = default;
};
struct Goto { BlockId target; bool operator==(const Goto&) const = default; };
struct ContainerNew {
  ValueId dst; ContainerKind kind;
  bool operator==(const ContainerNew&) const = default;
};
struct ContainerAdd {
  ValueId container; ValueId value;
  bool operator==(const ContainerAdd&) const = default;
};
struct ContainerPut {
  ValueId container; ValueId key; ValueId value;
  bool operator==(const ContainerPut&) const = default;
};
struct ContainerGet {
  ValueId dst; ValueId container; ValueId key;
  bool operator==(const ContainerGet&) const = default;
};
}  // namespace ins

using Instruction =
    std::variant<ins::New, ins::Const, ins::LoadStatic, ins::LoadInstance,
                 ins::StoreStatic, ins::StoreInstance, ins::InstanceInvoke,
                 ins::SpecialInvoke, ins::StaticInvoke, ins::Return,
                 ins::ArrayNew, ins::ArrayLoad, ins::ArrayStore, ins::Phi,
                 ins::CheckCast, ins::Branch, ins::Goto, ins::ContainerNew,
                 ins::ContainerAdd, ins::ContainerPut, ins::ContainerGet>;

/// Value defined by an instruction, if any.
std::optional<ValueId> defined_value(const Instruction& instr);
/// Values read by an instruction (phi operands included).
std::vector<ValueId> used_values(const Instruction& instr);
bool is_terminator(const Instruction& instr);
/// Call-site id for the three invoke forms, empty otherwise.
std::string_view site_of(const Instruction& instr);

struct BasicBlock {
  std::string label;
  std::vector<Instruction> instrs;
  std::vector<int> lines;  // parallel to instrs; 0 for generated code

  bool operator==(const BasicBlock& o) const {
    return label == o.label && instrs == o.instrs;
  }
};

struct Param {
  std::string type;
  std::string name;
  bool operator==(const Param&) const = default;
};

struct ValueInfo {
  std::string name;
  std::string type;  // static type; "null" for the null literal
  bool operator==(const ValueInfo&) const = default;
};

struct MethodDecl {
  std::string owner;
  std::string name;
  std::vector<Param> params;
  std::string return_type = "void";
  bool is_static = false;
  bool is_intrinsic = false;  // built-in behaviour, no body
  std::vector<BasicBlock> blocks;
  std::vector<ValueInfo> values;  // this (instance methods), then params, then locals
  int line = 0;

  bool has_body() const { return !blocks.empty(); }
  bool is_abstract() const { return blocks.empty() && !is_intrinsic; }
  std::size_t arity() const { return params.size(); }
  /// `name(T1,T2)`
  std::string signature() const;
  /// `Owner.name(T1,T2)`
  std::string qualified() const;
  std::optional<ValueId> this_value() const {
    return is_static ? std::nullopt : std::optional<ValueId>(0);
  }
  ValueId param_value(std::size_t i) const {
    return static_cast<ValueId>(i + (is_static ? 0 : 1));
  }
  std::optional<ValueId> find_value(std::string_view name) const;
  std::optional<BlockId> find_block(std::string_view label) const;

  bool operator==(const MethodDecl& o) const {
    return owner == o.owner && name == o.name && params == o.params &&
           return_type == o.return_type && is_static == o.is_static &&
           is_intrinsic == o.is_intrinsic && blocks == o.blocks;
  }
};

struct FieldDecl {
  std::string name;
  std::string type;
  bool is_static = false;
  bool is_transient = false;
  bool operator==(const FieldDecl&) const = default;
};

struct ClassDecl {
  std::string name;
  std::optional<std::string> superclass;
  std::vector<std::string> interfaces;
  Visibility visibility = Visibility::Public;
  bool is_abstract = false;
  bool is_interface = false;
  bool is_intrinsic = false;
  std::vector<FieldDecl> fields;
  std::vector<MethodId> methods;
  int line = 0;

  std::string package() const;
  bool is_concrete() const { return !is_abstract && !is_interface; }
};

/// Method reference parsed from `Class.name(T1,T2)`.
struct MethodSignature {
  std::string owner;
  std::string name;
  std::vector<std::string> param_types;

  std::string str() const;
  auto operator<=>(const MethodSignature&) const = default;
};
std::optional<MethodSignature> parse_method_signature(std::string_view text);

class Program {
 public:
  std::vector<ClassDecl> classes;
  std::vector<MethodDecl> methods;
  std::map<std::string, Scope, std::less<>> scope_map;

  std::optional<ClassId> find_class(std::string_view name) const;
  const ClassDecl& class_decl(ClassId id) const { return classes.at(id); }
  const ClassDecl* class_named(std::string_view name) const;
  const MethodDecl& method(MethodId id) const { return methods.at(id); }

  /// Method declared directly in `cls` with this name and arity.
  std::optional<MethodId> declared_method(std::string_view cls, std::string_view name,
                                          std::size_t arity) const;
  /// Nearest declaration walking the superclass chain upward from `cls`.
  /// Throws UnknownClass when `cls` is not declared.
  std::optional<MethodId> lookup_method(std::string_view cls, std::string_view name,
                                        std::size_t arity) const;
  /// Like lookup_method but also searches implemented interfaces (any
  /// declaration, abstract allowed); used for static resolution.
  std::optional<MethodId> resolve_declaration(std::string_view type, std::string_view name,
                                              std::size_t arity) const;
  std::optional<MethodId> resolve_signature(const MethodSignature& sig) const;
  /// Field declared in `cls` or a superclass.
  const FieldDecl* lookup_field(std::string_view cls, std::string_view field) const;
  /// Non-static fields of `cls` including inherited ones, superclass first.
  std::vector<const FieldDecl*> instance_fields(std::string_view cls) const;
  /// Superclass chain starting at `cls` itself.
  std::vector<std::string> superclass_chain(std::string_view cls) const;

  Scope scope_of(std::string_view cls) const;
  std::size_t user_class_count() const;
};

// Type helpers. Primitive types: int, long, bool, String, void.
bool is_primitive_type(std::string_view type);
bool is_array_type(std::string_view type);
std::string element_type(std::string_view array_type);
bool is_container_type(std::string_view type);
std::string package_of(std::string_view class_name);

enum class DiagnosticKind {
  SyntaxError,
  ResolutionError,
  SsaViolation,
  DuplicateClass,
  DuplicateField,
  DuplicateMethod,
  DuplicateSite,
  CyclicHierarchy,
  BadHierarchy,
  BadCallbackShape,
  MissingTerminator,
  MisplacedPhi,
  AbstractInConcrete,
};
std::string_view to_string(DiagnosticKind k);

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
  std::string class_name;
  std::string method;
  int block = -1;
  int index = -1;
  int line = 0;
  int column = 0;

  std::string str() const;
  bool operator==(const Diagnostic&) const = default;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags);
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

 private:
  std::vector<Diagnostic> diags_;
};

class UnknownClass : public std::runtime_error {
 public:
  explicit UnknownClass(std::string_view name)
      : std::runtime_error("unknown class " + std::string(name)) {}
};

/// Parses SIR text (prelude declarations are added automatically). Throws
/// ParseError on syntax, resolution or SSA errors.
Program parse_program(std::string_view text);

/// Full structural check; empty iff every invariant holds. Stable order.
std::vector<Diagnostic> validate(const Program& program);

/// Canonical text of the user (non-intrinsic) declarations.
std::string print_program(const Program& program);
std::string print_method(const Program& program, const MethodDecl& method);
std::string print_instruction(const MethodDecl& method, const Instruction& instr);

/// Reads a `class-name,scope` file into the program's scope map.
void apply_scope_file(Program& program, std::string_view text);
/// Entrypoint CSV: one method signature per line.
std::vector<MethodSignature> parse_entrypoints(std::string_view text);

/// The source of the built-in declarations.
std::string_view prelude_source();

}  // namespace sercg::sir
