#include "sercg/sir.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>
#include <sstream>

namespace sercg::sir {

std::string_view to_string(Scope s) {
  switch (s) {
    case Scope::Application: return "Application";
    case Scope::Library: return "Library";
    case Scope::Excluded: return "Excluded";
  }
  return "?";
}

std::string_view to_string(ContainerKind k) {
  switch (k) {
    case ContainerKind::List: return "List";
    case ContainerKind::Set: return "Set";
    case ContainerKind::Map: return "Map";
  }
  return "?";
}

std::optional<Scope> parse_scope(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "application" || lower == "app") return Scope::Application;
  if (lower == "library" || lower == "lib" || lower == "primordial") return Scope::Library;
  if (lower == "excluded") return Scope::Excluded;
  return std::nullopt;
}

std::string_view to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::SyntaxError: return "SyntaxError";
    case DiagnosticKind::ResolutionError: return "ResolutionError";
    case DiagnosticKind::SsaViolation: return "SsaViolation";
    case DiagnosticKind::DuplicateClass: return "DuplicateClass";
    case DiagnosticKind::DuplicateField: return "DuplicateField";
    case DiagnosticKind::DuplicateMethod: return "DuplicateMethod";
    case DiagnosticKind::DuplicateSite: return "DuplicateSite";
    case DiagnosticKind::CyclicHierarchy: return "CyclicHierarchy";
    case DiagnosticKind::BadHierarchy: return "BadHierarchy";
    case DiagnosticKind::BadCallbackShape: return "BadCallbackShape";
    case DiagnosticKind::MissingTerminator: return "MissingTerminator";
    case DiagnosticKind::MisplacedPhi: return "MisplacedPhi";
    case DiagnosticKind::AbstractInConcrete: return "AbstractInConcrete";
  }
  return "?";
}

std::string Diagnostic::str() const {
  std::ostringstream out;
  if (line > 0) out << line << ":" << column << ": ";
  out << to_string(kind) << ": " << message;
  if (!class_name.empty()) {
    out << " [" << class_name;
    if (!method.empty()) out << "." << method;
    if (block >= 0) out << " block " << block << " #" << index;
    out << "]";
  }
  return out.str();
}

namespace {
std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string msg;
  for (const auto& d : diags) {
    if (!msg.empty()) msg += "\n";
    msg += d.str();
  }
  return msg;
}
}  // namespace

ParseError::ParseError(std::vector<Diagnostic> diags)
    : std::runtime_error(join_diagnostics(diags)), diags_(std::move(diags)) {}

std::optional<ValueId> defined_value(const Instruction& instr) {
  return std::visit(
      [](const auto& i) -> std::optional<ValueId> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, ins::InstanceInvoke> ||
                      std::is_same_v<T, ins::SpecialInvoke> ||
                      std::is_same_v<T, ins::StaticInvoke>) {
          return i.dst;
        } else if constexpr (requires { i.dst; }) {
          return i.dst;
        } else {
          return std::nullopt;
        }
      },
      instr);
}

std::vector<ValueId> used_values(const Instruction& instr) {
  using namespace ins;
  return std::visit(
      [](const auto& i) -> std::vector<ValueId> {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, LoadInstance>) return {i.base};
        else if constexpr (std::is_same_v<T, StoreStatic>) return {i.src};
        else if constexpr (std::is_same_v<T, StoreInstance>) return {i.base, i.src};
        else if constexpr (std::is_same_v<T, InstanceInvoke> || std::is_same_v<T, SpecialInvoke>) {
          std::vector<ValueId> v{i.receiver};
          v.insert(v.end(), i.args.begin(), i.args.end());
          return v;
        } else if constexpr (std::is_same_v<T, StaticInvoke>) return i.args;
        else if constexpr (std::is_same_v<T, Return>) {
          return i.value ? std::vector<ValueId>{*i.value} : std::vector<ValueId>{};
        } else if constexpr (std::is_same_v<T, ArrayNew>) return {i.length};
        else if constexpr (std::is_same_v<T, ArrayLoad>) return {i.array, i.index};
        else if constexpr (std::is_same_v<T, ArrayStore>) return {i.array, i.index, i.src};
        else if constexpr (std::is_same_v<T, Phi>) {
          std::vector<ValueId> v;
          for (const auto& [val, blk] : i.operands) v.push_back(val);
          return v;
        } else if constexpr (std::is_same_v<T, CheckCast>) return {i.src};
        else if constexpr (std::is_same_v<T, Branch>) return {i.cond};
        else if constexpr (std::is_same_v<T, ContainerAdd>) return {i.container, i.value};
        else if constexpr (std::is_same_v<T, ContainerPut>) return {i.container, i.key, i.value};
        else if constexpr (std::is_same_v<T, ContainerGet>) return {i.container, i.key};
        else return {};
      },
      instr);
}

bool is_terminator(const Instruction& instr) {
  return std::holds_alternative<ins::Return>(instr) ||
         std::holds_alternative<ins::Branch>(instr) ||
         std::holds_alternative<ins::Goto>(instr);
}

std::string_view site_of(const Instruction& instr) {
  if (auto* i = std::get_if<ins::InstanceInvoke>(&instr)) return i->site;
  if (auto* i = std::get_if<ins::SpecialInvoke>(&instr)) return i->site;
  if (auto* i = std::get_if<ins::StaticInvoke>(&instr)) return i->site;
  return {};
}

std::string MethodDecl::signature() const {
  std::string s = name + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) s += ",";
    s += params[i].type;
  }
  return s + ")";
}

std::string MethodDecl::qualified() const { return owner + "." + signature(); }

std::optional<ValueId> MethodDecl::find_value(std::string_view n) const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i].name == n) return static_cast<ValueId>(i);
  return std::nullopt;
}

std::optional<BlockId> MethodDecl::find_block(std::string_view label) const {
  for (std::size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].label == label) return static_cast<BlockId>(i);
  return std::nullopt;
}

std::string ClassDecl::package() const { return package_of(name); }

std::string MethodSignature::str() const {
  std::string s = owner + "." + name + "(";
  for (std::size_t i = 0; i < param_types.size(); ++i) {
    if (i) s += ",";
    s += param_types[i];
  }
  return s + ")";
}

namespace {
std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}
}  // namespace

std::optional<MethodSignature> parse_method_signature(std::string_view text) {
  text = trim(text);
  auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')') return std::nullopt;
  auto head = text.substr(0, open);
  auto dot = head.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == head.size()) return std::nullopt;
  MethodSignature sig;
  sig.owner = std::string(trim(head.substr(0, dot)));
  sig.name = std::string(trim(head.substr(dot + 1)));
  auto params = trim(text.substr(open + 1, text.size() - open - 2));
  while (!params.empty()) {
    auto comma = params.find(',');
    auto piece = trim(params.substr(0, comma));
    if (piece.empty()) return std::nullopt;
    // Tolerate "String a[]" / "String[] args" styles by keeping the type only.
    std::string type(piece.substr(0, piece.find(' ')));
    if (piece.find("[]") != std::string_view::npos && type.find("[]") == std::string::npos)
      type += "[]";
    sig.param_types.push_back(type);
    if (comma == std::string_view::npos) break;
    params.remove_prefix(comma + 1);
  }
  return sig;
}

std::optional<ClassId> Program::find_class(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i].name == name) return static_cast<ClassId>(i);
  return std::nullopt;
}

const ClassDecl* Program::class_named(std::string_view name) const {
  auto id = find_class(name);
  return id ? &classes[*id] : nullptr;
}

std::optional<MethodId> Program::declared_method(std::string_view cls, std::string_view name,
                                                 std::size_t arity) const {
  const ClassDecl* c = class_named(cls);
  if (!c) return std::nullopt;
  for (MethodId m : c->methods) {
    const auto& md = methods[m];
    if (md.name == name && md.arity() == arity) return m;
  }
  return std::nullopt;
}

std::vector<std::string> Program::superclass_chain(std::string_view cls) const {
  std::vector<std::string> chain;
  std::set<std::string, std::less<>> seen;
  const ClassDecl* c = class_named(cls);
  while (c && seen.insert(c->name).second) {
    chain.push_back(c->name);
    c = c->superclass ? class_named(*c->superclass) : nullptr;
  }
  return chain;
}

std::optional<MethodId> Program::lookup_method(std::string_view cls, std::string_view name,
                                               std::size_t arity) const {
  if (!find_class(cls)) throw UnknownClass(cls);
  for (const auto& c : superclass_chain(cls))
    if (auto m = declared_method(c, name, arity)) return m;
  return std::nullopt;
}

std::optional<MethodId> Program::resolve_declaration(std::string_view type, std::string_view name,
                                                     std::size_t arity) const {
  const ClassDecl* start = class_named(type);
  if (!start) return std::nullopt;
  auto chain = superclass_chain(type);
  for (const auto& c : chain)
    if (auto m = declared_method(c, name, arity)) return m;
  std::deque<std::string> queue;
  std::set<std::string, std::less<>> seen;
  for (const auto& c : chain)
    for (const auto& i : class_named(c)->interfaces) queue.push_back(i);
  while (!queue.empty()) {
    auto i = queue.front();
    queue.pop_front();
    if (!seen.insert(i).second) continue;
    if (auto m = declared_method(i, name, arity)) return m;
    if (const ClassDecl* d = class_named(i))
      for (const auto& s : d->interfaces) queue.push_back(s);
  }
  if (start->is_interface) return declared_method(names::kObject, name, arity);
  return std::nullopt;
}

std::optional<MethodId> Program::resolve_signature(const MethodSignature& sig) const {
  auto m = declared_method(sig.owner, sig.name, sig.param_types.size());
  if (!m) return std::nullopt;
  const auto& md = methods[*m];
  for (std::size_t i = 0; i < md.params.size(); ++i)
    if (md.params[i].type != sig.param_types[i]) return std::nullopt;
  return m;
}

const FieldDecl* Program::lookup_field(std::string_view cls, std::string_view field) const {
  for (const auto& c : superclass_chain(cls))
    for (const auto& f : class_named(c)->fields)
      if (f.name == field) return &f;
  return nullptr;
}

std::vector<const FieldDecl*> Program::instance_fields(std::string_view cls) const {
  auto chain = superclass_chain(cls);
  std::vector<const FieldDecl*> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    for (const auto& f : class_named(*it)->fields)
      if (!f.is_static) out.push_back(&f);
  return out;
}

Scope Program::scope_of(std::string_view cls) const {
  if (auto it = scope_map.find(cls); it != scope_map.end()) return it->second;
  if (const ClassDecl* c = class_named(cls); c && c->is_intrinsic) return Scope::Library;
  return Scope::Application;
}

std::size_t Program::user_class_count() const {
  return static_cast<std::size_t>(
      std::count_if(classes.begin(), classes.end(), [](const auto& c) { return !c.is_intrinsic; }));
}

bool is_primitive_type(std::string_view type) {
  return type == "int" || type == "long" || type == "bool" || type == "String" ||
         type == "void";
}

bool is_array_type(std::string_view type) {
  return type.size() > 2 && type.substr(type.size() - 2) == "[]";
}

std::string element_type(std::string_view array_type) {
  if (!is_array_type(array_type)) return std::string(names::kObject);
  return std::string(array_type.substr(0, array_type.size() - 2));
}

bool is_container_type(std::string_view type) {
  return type == "List" || type == "Set" || type == "Map";
}

std::string package_of(std::string_view class_name) {
  auto dot = class_name.rfind('.');
  return dot == std::string_view::npos ? std::string() : std::string(class_name.substr(0, dot));
}

void apply_scope_file(Program& program, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto comma = t.find(',');
    if (comma == std::string_view::npos)
      throw ParseError({Diagnostic{DiagnosticKind::SyntaxError, "expected class-name,scope", "",
                                   "", -1, -1, lineno, 1}});
    auto scope = parse_scope(trim(t.substr(comma + 1)));
    if (!scope)
      throw ParseError({Diagnostic{DiagnosticKind::SyntaxError,
                                   "unknown scope '" + std::string(trim(t.substr(comma + 1))) + "'",
                                   "", "", -1, -1, lineno, static_cast<int>(comma + 2)}});
    program.scope_map[std::string(trim(t.substr(0, comma)))] = *scope;
  }
}

std::vector<MethodSignature> parse_entrypoints(std::string_view text) {
  std::vector<MethodSignature> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    // A signature may itself contain commas between parameter types, so the
    // whole line is the signature.
    auto sig = parse_method_signature(t);
    if (!sig)
      throw ParseError({Diagnostic{DiagnosticKind::SyntaxError,
                                   "malformed method signature '" + std::string(t) + "'", "", "",
                                   -1, -1, lineno, 1}});
    out.push_back(*sig);
  }
  return out;
}

}  // namespace sercg::sir
