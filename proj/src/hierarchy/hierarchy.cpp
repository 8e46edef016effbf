#include "sercg/hierarchy.hpp"

#include <algorithm>

namespace sercg::hierarchy {

using sir::MethodId;
namespace names = sir::names;

Hierarchy::Hierarchy(const sir::Program& program) : program_(program) {
  // Transitive supertypes per type (reflexive), guarded against cycles.
  for (const auto& cls : program.classes) {
    auto& sup = supers_[cls.name];
    std::vector<std::string> stack{cls.name};
    while (!stack.empty()) {
      auto cur = stack.back();
      stack.pop_back();
      if (!sup.insert(cur).second) continue;
      const sir::ClassDecl* c = program.class_named(cur);
      if (!c) continue;
      if (c->superclass) stack.push_back(*c->superclass);
      for (const auto& i : c->interfaces) stack.push_back(i);
    }
    if (!cls.is_interface) sup.insert(std::string(names::kObject));
  }
  for (const auto& [name, sup] : supers_) {
    for (const auto& s : sup) cones_[s].push_back(name);
    serializable_[name] = sup.count(names::kSerializable) > 0;
  }
  for (auto& [name, cone] : cones_) std::sort(cone.begin(), cone.end());
  for (const auto& cls : program.classes)
    if (cls.is_concrete()) concrete_.push_back(cls.name);
  std::sort(concrete_.begin(), concrete_.end());
  concrete_.erase(std::unique(concrete_.begin(), concrete_.end()), concrete_.end());
}

const sir::ClassDecl& Hierarchy::decl(std::string_view t) const {
  const sir::ClassDecl* c = program_.class_named(t);
  if (!c) throw UnknownType(t);
  return *c;
}

const std::vector<std::string>& Hierarchy::cone(std::string_view t) const {
  auto it = cones_.find(t);
  if (it == cones_.end()) throw UnknownType(t);
  return it->second;
}

bool Hierarchy::is_subtype(std::string_view sub, std::string_view super) const {
  if (sub == super) return true;
  auto it = supers_.find(sub);
  if (it == supers_.end()) return false;
  return it->second.count(super) > 0;
}

bool Hierarchy::is_serializable(std::string_view t) const {
  auto it = serializable_.find(t);
  if (it == serializable_.end()) throw UnknownType(t);
  return it->second;
}

bool Hierarchy::accessible(std::string_view target, std::string_view from) const {
  const auto& c = decl(target);
  if (c.visibility == sir::Visibility::Public) return true;
  return c.package() == sir::package_of(from);
}

std::optional<MethodId> Hierarchy::implementation(std::string_view c, std::string_view name,
                                                  std::size_t arity) const {
  const auto& d = decl(c);
  if (!d.is_concrete()) return std::nullopt;
  auto m = program_.lookup_method(c, name, arity);
  if (!m) return std::nullopt;
  const auto& md = program_.method(*m);
  if (md.is_abstract() || md.is_static) return std::nullopt;
  return m;
}

std::vector<Target> Hierarchy::cha_targets(std::string_view t, std::string_view name,
                                           std::size_t arity) const {
  std::vector<Target> out;
  for (const auto& c : cone(t))
    if (auto m = implementation(c, name, arity)) out.push_back({c, *m});
  return out;
}

std::vector<Target> Hierarchy::tainted_targets(std::string_view t, std::string_view name,
                                               std::size_t arity, std::string_view from) const {
  std::vector<Target> out;
  for (auto& target : cha_targets(t, name, arity))
    if (accessible(target.receiver_class, from) && is_serializable(target.receiver_class))
      out.push_back(std::move(target));
  return out;
}

namespace {

std::vector<MethodId> distinct(const sir::Program& p, const std::vector<Target>& targets) {
  std::vector<MethodId> out;
  for (const auto& t : targets) out.push_back(t.method);
  std::sort(out.begin(), out.end(), [&](MethodId a, MethodId b) {
    return p.method(a).qualified() < p.method(b).qualified();
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<MethodId> Hierarchy::cha_dispatch(std::string_view t, std::string_view name,
                                              std::size_t arity) const {
  return distinct(program_, cha_targets(t, name, arity));
}

std::vector<MethodId> Hierarchy::tainted_dispatch(std::string_view t, std::string_view name,
                                                  std::size_t arity, std::string_view from) const {
  return distinct(program_, tainted_targets(t, name, arity, from));
}

MethodId Hierarchy::deser_constructor(std::string_view t) const {
  decl(t);
  for (const auto& c : program_.superclass_chain(t)) {
    if (is_serializable(c)) continue;
    if (auto m = program_.declared_method(c, names::kInit, 0)) return *m;
    const auto& d = decl(c);
    bool declares_any = std::any_of(d.methods.begin(), d.methods.end(), [&](MethodId m) {
      return program_.method(m).name == names::kInit;
    });
    if (declares_any) throw NoDefaultConstructor(c);
    if (auto m = program_.lookup_method(c, names::kInit, 0)) return *m;
    throw NoDefaultConstructor(c);
  }
  throw NoDefaultConstructor(t);
}

std::optional<MethodId> Hierarchy::callback(std::string_view c, std::string_view name) const {
  std::size_t arity = 0;
  std::string_view param;
  if (name == names::kWriteObject) {
    arity = 1;
    param = names::kObjOut;
  } else if (name == names::kReadObject) {
    arity = 1;
    param = names::kObjIn;
  }
  auto m = program_.lookup_method(c, name, arity);
  if (!m) return std::nullopt;
  const auto& md = program_.method(*m);
  if (md.is_static || md.is_intrinsic || md.is_abstract()) return std::nullopt;
  if (arity == 1 && md.params[0].type != param) return std::nullopt;
  if (name == names::kValidateObject && !is_subtype(c, names::kValidation)) return std::nullopt;
  return m;
}

bool Hierarchy::has_ser_callback(std::string_view c) const {
  return callback(c, names::kWriteReplace) || callback(c, names::kWriteObject);
}

bool Hierarchy::has_deser_callback(std::string_view c) const {
  return callback(c, names::kReadObject) || !no_data_callbacks(c).empty() ||
         callback(c, names::kReadResolve) || callback(c, names::kValidateObject);
}

std::vector<MethodId> Hierarchy::no_data_callbacks(std::string_view c) const {
  std::vector<MethodId> out;
  for (const auto& s : program_.superclass_chain(c)) {
    if (!is_serializable(s)) break;
    auto m = program_.declared_method(s, names::kReadObjectNoData, 0);
    if (m && !program_.method(*m).is_static && !program_.method(*m).is_abstract()) out.push_back(*m);
  }
  return out;
}

}  // namespace sercg::hierarchy
