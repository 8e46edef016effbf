#pragma once

// Class-hierarchy queries over a Program: cones, serializability,
// CHA and tainted dispatch, deserialization constructors.

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sercg/sir.hpp"

namespace sercg::hierarchy {

class UnknownType : public std::runtime_error {
 public:
  explicit UnknownType(std::string_view name)
      : std::runtime_error("unknown type " + std::string(name)) {}
};

class NoDefaultConstructor : public std::runtime_error {
 public:
  explicit NoDefaultConstructor(std::string_view cls)
      : std::runtime_error("class " + std::string(cls) + " has no no-argument constructor") {}
};

/// A dispatch target together with the receiver class that selects it.
struct Target {
  std::string receiver_class;
  sir::MethodId method;
  bool operator==(const Target&) const = default;
};

class Hierarchy {
 public:
  explicit Hierarchy(const sir::Program& program);

  const sir::Program& program() const { return program_; }

  /// Descendants of t including t, name-sorted.
  const std::vector<std::string>& cone(std::string_view t) const;
  bool is_subtype(std::string_view sub, std::string_view super) const;
  bool is_serializable(std::string_view t) const;
  /// Class `target` may be named from code in class `from`.
  bool accessible(std::string_view target, std::string_view from) const;

  /// Concrete, non-abstract implementation of name/arity for receiver class c.
  std::optional<sir::MethodId> implementation(std::string_view c, std::string_view name,
                                              std::size_t arity) const;

  /// Every concrete class in cone(t) with an implementation; cone order.
  std::vector<Target> cha_targets(std::string_view t, std::string_view name,
                                  std::size_t arity) const;
  /// cha_targets filtered by accessibility from `from` and serializability.
  std::vector<Target> tainted_targets(std::string_view t, std::string_view name, std::size_t arity,
                                      std::string_view from) const;
  /// Distinct methods of cha_targets / tainted_targets, sorted by qualified name.
  std::vector<sir::MethodId> cha_dispatch(std::string_view t, std::string_view name,
                                          std::size_t arity) const;
  std::vector<sir::MethodId> tainted_dispatch(std::string_view t, std::string_view name,
                                              std::size_t arity, std::string_view from) const;

  /// No-argument constructor run when deserializing an instance of t: the
  /// one of the first non-serializable class up the superclass chain. A class
  /// that declares no constructor at all gets the implicit one, which resolves
  /// to the nearest inherited <init>().
  sir::MethodId deser_constructor(std::string_view t) const;

  /// Serialization callback resolved by nearest declaration, if any.
  std::optional<sir::MethodId> callback(std::string_view c, std::string_view name) const;
  bool has_ser_callback(std::string_view c) const;    // writeReplace or writeObject
  bool has_deser_callback(std::string_view c) const;  // readObject, readObjectNoData, readResolve, validateObject
  /// Declarations of readObjectNoData in the serializable part of c's superclass chain.
  std::vector<sir::MethodId> no_data_callbacks(std::string_view c) const;

  /// All concrete non-interface classes, name-sorted.
  const std::vector<std::string>& concrete_classes() const { return concrete_; }

 private:
  const sir::ClassDecl& decl(std::string_view t) const;

  const sir::Program& program_;
  std::map<std::string, std::vector<std::string>, std::less<>> cones_;
  std::map<std::string, std::set<std::string, std::less<>>, std::less<>> supers_;
  std::map<std::string, bool, std::less<>> serializable_;
  std::vector<std::string> concrete_;
};

}  // namespace sercg::hierarchy
