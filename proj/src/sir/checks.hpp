#pragma once

#include <string>
#include <vector>

#include "sercg/sir.hpp"

namespace sercg::sir::detail {

/// Static types for every value of `method`. Resolution problems are appended
/// to `diags` when it is non-null.
std::vector<std::string> infer_types(const Program& program, const MethodDecl& method,
                                     std::vector<Diagnostic>* diags);

/// Single definition, dominance, phi placement and terminator checks.
void check_ssa(const Program& program, const MethodDecl& method, std::vector<Diagnostic>& diags);

bool is_subtype(const Program& program, std::string_view sub, std::string_view super);
std::string join_types(const Program& program, const std::string& a, const std::string& b);
bool is_known_type(const Program& program, std::string_view type, bool allow_void = false);

}  // namespace sercg::sir::detail
