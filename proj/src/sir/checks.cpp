#include "checks.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace sercg::sir::detail {

bool is_known_type(const Program& program, std::string_view type, bool allow_void) {
  if (type == "void") return allow_void;
  if (is_primitive_type(type)) return true;
  if (is_array_type(type)) return is_known_type(program, element_type(type), false);
  return program.find_class(type).has_value();
}

bool is_subtype(const Program& program, std::string_view sub, std::string_view super) {
  if (sub == super || super == names::kObject) return true;
  if (is_array_type(sub) || is_array_type(super)) {
    return is_array_type(sub) && is_array_type(super) &&
           is_subtype(program, element_type(sub), element_type(super));
  }
  std::deque<std::string> queue{std::string(sub)};
  std::set<std::string, std::less<>> seen;
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    if (cur == super) return true;
    if (!seen.insert(cur).second) continue;
    const ClassDecl* c = program.class_named(cur);
    if (!c) continue;
    if (c->superclass) queue.push_back(*c->superclass);
    for (const auto& i : c->interfaces) queue.push_back(i);
  }
  return false;
}

std::string join_types(const Program& program, const std::string& a, const std::string& b) {
  if (a.empty()) return b;
  if (b.empty() || a == b) return a;
  if (a == "null" && !is_primitive_type(b)) return b;
  if (b == "null" && !is_primitive_type(a)) return a;
  if (is_primitive_type(a) || is_primitive_type(b)) return std::string(names::kObject);
  if (is_array_type(a) || is_array_type(b)) return std::string(names::kObject);
  for (const auto& anc : program.superclass_chain(a))
    if (is_subtype(program, b, anc)) return anc;
  return std::string(names::kObject);
}

namespace {

struct Typer {
  const Program& program;
  const MethodDecl& method;
  std::vector<std::string>& types;
  std::vector<Diagnostic>* diags;
  std::size_t block = 0;
  std::size_t index = 0;

  void report(const std::string& msg) {
    if (!diags) return;
    int line = 0;
    const auto& b = method.blocks[block];
    if (index < b.lines.size()) line = b.lines[index];
    diags->push_back({DiagnosticKind::ResolutionError, msg, method.owner, method.name,
                      static_cast<int>(block), static_cast<int>(index), line, 1});
  }

  const std::string& type_of(ValueId v) const { return types.at(v); }

  bool is_class_type(const std::string& t) const {
    return !t.empty() && !is_primitive_type(t) && !is_array_type(t) && t != "null" &&
           program.find_class(t).has_value();
  }

  void set(ValueId v, std::string t) { types.at(v) = std::move(t); }

  const FieldDecl* field(const std::string& owner, const std::string& name, bool want_static) {
    if (!program.find_class(owner)) {
      report("unknown class '" + owner + "'");
      return nullptr;
    }
    const FieldDecl* f = program.lookup_field(owner, name);
    if (!f) {
      report("unknown field '" + owner + "." + name + "'");
      return nullptr;
    }
    if (f->is_static != want_static) {
      report("field '" + owner + "." + name + "' is " + (f->is_static ? "static" : "not static"));
    }
    return f;
  }

  void check_args(const MethodDecl& callee, std::size_t given) {
    if (callee.arity() != given) report("argument count mismatch calling " + callee.qualified());
  }

  void check_result(const std::optional<ValueId>& dst, const MethodDecl& callee) {
    if (!dst) return;
    if (callee.return_type == "void") {
      report("void method " + callee.qualified() + " used as a value");
      set(*dst, std::string(names::kObject));
    } else {
      set(*dst, callee.return_type);
    }
  }

  void operator()(const ins::New& i) {
    const ClassDecl* c = program.class_named(i.type);
    if (!c) {
      report("unknown class '" + i.type + "'");
    } else if (!c->is_concrete()) {
      report("cannot instantiate abstract type '" + i.type + "'");
    }
    set(i.dst, i.type);
  }
  void operator()(const ins::Const& i) {
    std::string t = std::visit(
        [](const auto& v) -> std::string {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::monostate>) return "null";
          else if constexpr (std::is_same_v<T, std::int64_t>) return "int";
          else if constexpr (std::is_same_v<T, bool>) return "bool";
          else return "String";
        },
        i.value.value);
    set(i.dst, t);
  }
  void operator()(const ins::LoadStatic& i) {
    const FieldDecl* f = field(i.owner, i.field, true);
    set(i.dst, f ? f->type : std::string(names::kObject));
  }
  void operator()(const ins::LoadInstance& i) {
    const auto& bt = type_of(i.base);
    const FieldDecl* f = nullptr;
    if (!is_class_type(bt)) {
      report("getfield on non-object value of type '" + bt + "'");
    } else {
      f = field(bt, i.field, false);
    }
    set(i.dst, f ? f->type : std::string(names::kObject));
  }
  void operator()(const ins::StoreStatic& i) { field(i.owner, i.field, true); }
  void operator()(const ins::StoreInstance& i) {
    const auto& bt = type_of(i.base);
    if (!is_class_type(bt)) {
      report("putfield on non-object value of type '" + bt + "'");
    } else {
      field(bt, i.field, false);
    }
  }
  void operator()(const ins::InstanceInvoke& i) {
    const auto& rt = type_of(i.receiver);
    if (!is_class_type(rt)) {
      report("invoke on non-object value of type '" + rt + "'");
      if (i.dst) set(*i.dst, std::string(names::kObject));
      return;
    }
    auto m = program.resolve_declaration(rt, i.method, i.args.size());
    if (!m) {
      report("no method '" + i.method + "/" + std::to_string(i.args.size()) + "' in '" + rt + "'");
      if (i.dst) set(*i.dst, std::string(names::kObject));
      return;
    }
    const auto& callee = program.method(*m);
    if (callee.is_static) report("invoke of static method " + callee.qualified());
    check_result(i.dst, callee);
  }
  void operator()(const ins::SpecialInvoke& i) {
    if (!program.find_class(i.owner)) {
      report("unknown class '" + i.owner + "'");
      if (i.dst) set(*i.dst, std::string(names::kObject));
      return;
    }
    auto m = program.lookup_method(i.owner, i.method, i.args.size());
    if (!m) {
      report("no method '" + i.method + "/" + std::to_string(i.args.size()) + "' in '" + i.owner + "'");
      if (i.dst) set(*i.dst, std::string(names::kObject));
      return;
    }
    const auto& callee = program.method(*m);
    if (callee.is_static) report("invokespecial of static method " + callee.qualified());
    check_result(i.dst, callee);
  }
  void operator()(const ins::StaticInvoke& i) {
    if (!program.find_class(i.owner)) {
      report("unknown class '" + i.owner + "'");
      if (i.dst) set(*i.dst, std::string(names::kObject));
      return;
    }
    auto m = program.lookup_method(i.owner, i.method, i.args.size());
    if (!m) {
      report("no method '" + i.method + "/" + std::to_string(i.args.size()) + "' in '" + i.owner + "'");
      if (i.dst) set(*i.dst, std::string(names::kObject));
      return;
    }
    const auto& callee = program.method(*m);
    if (!callee.is_static) report("invokestatic of instance method " + callee.qualified());
    check_result(i.dst, callee);
  }
  void operator()(const ins::Return& i) {
    bool is_void = method.return_type == "void";
    if (is_void && i.value) report("void method returns a value");
    if (!is_void && !i.value) report("missing return value");
  }
  void operator()(const ins::ArrayNew& i) {
    if (!is_known_type(program, i.elem_type)) report("unknown element type '" + i.elem_type + "'");
    set(i.dst, i.elem_type + "[]");
  }
  void operator()(const ins::ArrayLoad& i) {
    const auto& at = type_of(i.array);
    if (!is_array_type(at)) {
      report("aload on non-array value of type '" + at + "'");
      set(i.dst, std::string(names::kObject));
    } else {
      set(i.dst, element_type(at));
    }
  }
  void operator()(const ins::ArrayStore& i) {
    const auto& at = type_of(i.array);
    if (!is_array_type(at)) report("astore on non-array value of type '" + at + "'");
  }
  void operator()(const ins::Phi& i) {
    std::string t;
    for (const auto& [v, b] : i.operands) t = join_types(program, t, type_of(v));
    set(i.dst, t);
  }
  void operator()(const ins::CheckCast& i) {
    if (!is_known_type(program, i.type) || is_primitive_type(i.type))
      report("bad cast target '" + i.type + "'");
    set(i.dst, i.type);
  }
  void operator()(const ins::Branch&) {}
  void operator()(const ins::Goto&) {}
  void operator()(const ins::ContainerNew& i) { set(i.dst, std::string(to_string(i.kind))); }
  void operator()(const ins::ContainerAdd& i) {
    const auto& ct = type_of(i.container);
    if (ct != "List" && ct != "Set") report("add on non-list/set value of type '" + ct + "'");
  }
  void operator()(const ins::ContainerPut& i) {
    const auto& ct = type_of(i.container);
    if (ct != "Map") report("put on non-map value of type '" + ct + "'");
  }
  void operator()(const ins::ContainerGet& i) {
    const auto& ct = type_of(i.container);
    if (!is_container_type(ct)) report("get on non-container value of type '" + ct + "'");
    set(i.dst, std::string(names::kObject));
  }
};

}  // namespace

std::vector<std::string> infer_types(const Program& program, const MethodDecl& method,
                                     std::vector<Diagnostic>* diags) {
  std::vector<std::string> types(method.values.size());
  std::size_t fixed = method.is_static ? 0 : 1;
  if (!method.is_static) types[0] = method.owner;
  for (std::size_t i = 0; i < method.params.size(); ++i) {
    types[fixed + i] = method.params[i].type;
    if (diags && !is_known_type(program, method.params[i].type))
      diags->push_back({DiagnosticKind::ResolutionError,
                        "unknown parameter type '" + method.params[i].type + "'", method.owner,
                        method.name, -1, -1, method.line, 1});
  }
  if (diags && !is_known_type(program, method.return_type, true))
    diags->push_back({DiagnosticKind::ResolutionError,
                      "unknown return type '" + method.return_type + "'", method.owner, method.name,
                      -1, -1, method.line, 1});

  // Phi operands can be defined later in program order, so iterate to a
  // fixed point without reporting, then do one reporting pass.
  for (std::size_t round = 0; round <= method.values.size() + 1; ++round) {
    auto before = types;
    Typer typer{program, method, types, nullptr};
    for (typer.block = 0; typer.block < method.blocks.size(); ++typer.block)
      for (typer.index = 0; typer.index < method.blocks[typer.block].instrs.size(); ++typer.index)
        std::visit(typer, method.blocks[typer.block].instrs[typer.index]);
    if (before == types) break;
  }
  if (diags) {
    Typer typer{program, method, types, diags};
    for (typer.block = 0; typer.block < method.blocks.size(); ++typer.block)
      for (typer.index = 0; typer.index < method.blocks[typer.block].instrs.size(); ++typer.index)
        std::visit(typer, method.blocks[typer.block].instrs[typer.index]);
  }
  for (auto& t : types)
    if (t.empty()) t = std::string(names::kObject);
  return types;
}

namespace {

std::vector<std::vector<BlockId>> successors(const MethodDecl& m) {
  std::vector<std::vector<BlockId>> succ(m.blocks.size());
  for (std::size_t b = 0; b < m.blocks.size(); ++b) {
    if (m.blocks[b].instrs.empty()) continue;
    const auto& last = m.blocks[b].instrs.back();
    if (auto* br = std::get_if<ins::Branch>(&last)) {
      for (BlockId t : {br->then_block, br->else_block})
        if (t < m.blocks.size()) succ[b].push_back(t);
    } else if (auto* g = std::get_if<ins::Goto>(&last)) {
      if (g->target < m.blocks.size()) succ[b].push_back(g->target);
    }
  }
  return succ;
}

}  // namespace

void check_ssa(const Program&, const MethodDecl& m, std::vector<Diagnostic>& diags) {
  const std::size_t nb = m.blocks.size();
  auto diag = [&](DiagnosticKind k, std::string msg, std::size_t b, std::size_t i) {
    int line = i < m.blocks[b].lines.size() ? m.blocks[b].lines[i] : 0;
    diags.push_back({k, std::move(msg), m.owner, m.name, static_cast<int>(b), static_cast<int>(i),
                     line, 1});
  };

  // Terminators and phi placement.
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& instrs = m.blocks[b].instrs;
    if (instrs.empty() || !is_terminator(instrs.back()))
      diag(DiagnosticKind::MissingTerminator, "block '" + m.blocks[b].label + "' does not end in a terminator",
           b, instrs.empty() ? 0 : instrs.size() - 1);
    bool in_head = true;
    for (std::size_t i = 0; i < instrs.size(); ++i) {
      bool phi = std::holds_alternative<ins::Phi>(instrs[i]);
      if (phi && !in_head) diag(DiagnosticKind::MisplacedPhi, "phi after a non-phi instruction", b, i);
      if (!phi) in_head = false;
      if (i + 1 < instrs.size() && is_terminator(instrs[i]))
        diag(DiagnosticKind::MissingTerminator, "terminator in the middle of a block", b, i);
    }
  }

  // Definition sites; params and this are defined at entry.
  const std::size_t fixed = m.params.size() + (m.is_static ? 0 : 1);
  struct Site { std::size_t block; std::size_t index; };
  std::vector<std::optional<Site>> def(m.values.size());
  std::vector<int> def_count(m.values.size(), 0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t i = 0; i < m.blocks[b].instrs.size(); ++i)
      if (auto d = defined_value(m.blocks[b].instrs[i]); d && *d < m.values.size()) {
        if (++def_count[*d] == 1) def[*d] = Site{b, i};
        else if (def_count[*d] == 2 || *d < fixed)
          diag(DiagnosticKind::SsaViolation, "value '" + m.values[*d].name + "' defined more than once", b, i);
      }
  for (std::size_t v = 0; v < fixed && v < def_count.size(); ++v)
    if (def_count[v] == 1)
      diag(DiagnosticKind::SsaViolation, "parameter '" + m.values[v].name + "' redefined",
           def[v]->block, def[v]->index);

  // Dominators (iterative data-flow over bitsets) from block 0.
  auto succ = successors(m);
  std::vector<std::vector<BlockId>> pred(nb);
  for (std::size_t b = 0; b < nb; ++b)
    for (BlockId s : succ[b]) pred[s].push_back(static_cast<BlockId>(b));
  std::vector<bool> reachable(nb, false);
  if (nb > 0) {
    std::vector<BlockId> stack{0};
    reachable[0] = true;
    while (!stack.empty()) {
      BlockId b = stack.back();
      stack.pop_back();
      for (BlockId s : succ[b])
        if (!reachable[s]) {
          reachable[s] = true;
          stack.push_back(s);
        }
    }
  }
  std::vector<std::vector<bool>> dom(nb, std::vector<bool>(nb, true));
  if (nb > 0) {
    dom[0].assign(nb, false);
    dom[0][0] = true;
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t b = 1; b < nb; ++b) {
      if (!reachable[b]) continue;
      std::vector<bool> nd(nb, true);
      bool any = false;
      for (BlockId p : pred[b]) {
        if (!reachable[p]) continue;
        any = true;
        for (std::size_t k = 0; k < nb; ++k) nd[k] = nd[k] && dom[p][k];
      }
      if (!any) nd.assign(nb, false);
      nd[b] = true;
      if (nd != dom[b]) {
        dom[b] = std::move(nd);
        changed = true;
      }
    }
  }

  auto dominates_use = [&](ValueId v, std::size_t b, std::size_t i, bool at_end) {
    if (v >= m.values.size() || v < fixed) return true;
    if (!def[v]) return true;  // undefined names are reported by resolution
    const Site& d = *def[v];
    if (d.block == b) return at_end || d.index < i;
    return static_cast<bool>(dom[b][d.block]);
  };

  for (std::size_t b = 0; b < nb; ++b) {
    if (!reachable[b]) continue;
    for (std::size_t i = 0; i < m.blocks[b].instrs.size(); ++i) {
      const auto& instr = m.blocks[b].instrs[i];
      if (auto* phi = std::get_if<ins::Phi>(&instr)) {
        for (const auto& [v, from] : phi->operands) {
          if (from >= nb) continue;
          if (!reachable[from]) continue;
          if (!dominates_use(v, from, 0, true))
            diag(DiagnosticKind::SsaViolation,
                 "phi operand '" + m.values[v].name + "' does not dominate block '" +
                     m.blocks[from].label + "'",
                 b, i);
        }
        continue;
      }
      for (ValueId v : used_values(instr))
        if (!dominates_use(v, b, i, false))
          diag(DiagnosticKind::SsaViolation,
               "use of '" + m.values[v].name + "' is not dominated by its definition", b, i);
    }
  }
}

}  // namespace sercg::sir::detail
