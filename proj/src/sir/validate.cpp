#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "checks.hpp"
#include "sercg/sir.hpp"

namespace sercg::sir {

namespace {

struct CallbackShape {
  std::string_view name;
  std::size_t arity;
  std::string_view param;  // empty when arity is 0
  bool returns_value;
};

constexpr CallbackShape kCallbacks[] = {
    {names::kWriteObject, 1, names::kObjOut, false},
    {names::kReadObject, 1, names::kObjIn, false},
    {names::kReadObjectNoData, 0, "", false},
    {names::kValidateObject, 0, "", false},
    {names::kWriteReplace, 0, "", true},
    {names::kReadResolve, 0, "", true},
};

void check_hierarchy(const Program& program, const ClassDecl& cls, std::vector<Diagnostic>& out) {
  auto diag = [&](DiagnosticKind k, std::string msg) {
    out.push_back({k, std::move(msg), cls.name, "", -1, -1, cls.line, 1});
  };
  if (cls.superclass) {
    const ClassDecl* s = program.class_named(*cls.superclass);
    if (!s) {
      diag(DiagnosticKind::BadHierarchy, "unknown superclass '" + *cls.superclass + "'");
    } else if (s->is_interface) {
      diag(DiagnosticKind::BadHierarchy, "class extends interface '" + s->name + "'");
    }
  }
  for (const auto& i : cls.interfaces) {
    const ClassDecl* d = program.class_named(i);
    if (!d) {
      diag(DiagnosticKind::BadHierarchy, "unknown interface '" + i + "'");
    } else if (!d->is_interface) {
      diag(DiagnosticKind::BadHierarchy, "'" + i + "' is not an interface");
    }
  }

  // Cycle through superclass or interface edges back to this class.
  std::vector<std::string> stack;
  std::set<std::string> seen;
  auto push_parents = [&](const ClassDecl& c) {
    if (c.superclass) stack.push_back(*c.superclass);
    for (const auto& i : c.interfaces) stack.push_back(i);
  };
  push_parents(cls);
  while (!stack.empty()) {
    auto cur = stack.back();
    stack.pop_back();
    if (cur == cls.name) {
      diag(DiagnosticKind::CyclicHierarchy, "class '" + cls.name + "' inherits from itself");
      break;
    }
    if (!seen.insert(cur).second) continue;
    if (const ClassDecl* c = program.class_named(cur)) push_parents(*c);
  }
}

void check_members(const Program& program, const ClassDecl& cls, std::vector<Diagnostic>& out) {
  std::set<std::string> fields;
  for (const auto& f : cls.fields) {
    if (!fields.insert(f.name).second)
      out.push_back({DiagnosticKind::DuplicateField, "field '" + f.name + "' declared twice", cls.name,
                     "", -1, -1, cls.line, 1});
    if (!detail::is_known_type(program, f.type))
      out.push_back({DiagnosticKind::ResolutionError, "unknown field type '" + f.type + "'", cls.name,
                     "", -1, -1, cls.line, 1});
  }
  std::set<std::pair<std::string, std::size_t>> methods;
  for (MethodId id : cls.methods) {
    const auto& m = program.method(id);
    if (!methods.insert({m.name, m.arity()}).second)
      out.push_back({DiagnosticKind::DuplicateMethod, "method '" + m.signature() + "' declared twice",
                     cls.name, m.name, -1, -1, m.line, 1});
    if (m.is_abstract() && cls.is_concrete())
      out.push_back({DiagnosticKind::AbstractInConcrete,
                     "abstract method '" + m.signature() + "' in concrete class", cls.name, m.name, -1,
                     -1, m.line, 1});
    if (cls.is_intrinsic) continue;
    for (const auto& cb : kCallbacks) {
      if (m.name != cb.name) continue;
      bool ok = !m.is_static && m.arity() == cb.arity &&
                (cb.arity == 0 || m.params[0].type == cb.param) &&
                (cb.returns_value ? (m.return_type != "void" && !is_primitive_type(m.return_type))
                                  : m.return_type == "void");
      if (!ok)
        out.push_back({DiagnosticKind::BadCallbackShape,
                       "callback '" + m.signature() + "' has the wrong shape", cls.name, m.name, -1, -1,
                       m.line, 1});
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate(const Program& program) {
  std::vector<Diagnostic> out;
  std::set<std::string> class_names;
  for (const auto& cls : program.classes) {
    if (!class_names.insert(cls.name).second)
      out.push_back({DiagnosticKind::DuplicateClass, "class '" + cls.name + "' declared twice", cls.name,
                     "", -1, -1, cls.line, 1});
    check_hierarchy(program, cls, out);
    check_members(program, cls, out);
  }
  bool cyclic = std::any_of(out.begin(), out.end(),
                            [](const auto& d) { return d.kind == DiagnosticKind::CyclicHierarchy; });

  std::map<std::string, std::string> sites;
  for (const auto& cls : program.classes) {
    for (MethodId id : cls.methods) {
      const auto& m = program.method(id);
      if (!m.has_body()) continue;
      if (!cyclic) detail::infer_types(program, m, &out);
      detail::check_ssa(program, m, out);
      for (std::size_t b = 0; b < m.blocks.size(); ++b)
        for (std::size_t i = 0; i < m.blocks[b].instrs.size(); ++i) {
          auto site = site_of(m.blocks[b].instrs[i]);
          if (site.empty()) continue;
          auto [it, fresh] = sites.emplace(std::string(site), m.qualified());
          if (!fresh) {
            int line = i < m.blocks[b].lines.size() ? m.blocks[b].lines[i] : 0;
            out.push_back({DiagnosticKind::DuplicateSite,
                           "call site '@" + std::string(site) + "' already used in " + it->second,
                           m.owner, m.name, static_cast<int>(b), static_cast<int>(i), line, 1});
          }
        }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Diagnostic& a, const Diagnostic& b) {
    return std::tie(a.class_name, a.method, a.block, a.index) <
           std::tie(b.class_name, b.method, b.block, b.index);
  });
  return out;
}

}  // namespace sercg::sir
