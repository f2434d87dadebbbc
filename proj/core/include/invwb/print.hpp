#pragma once

#include <string>

#include "invwb/ast.hpp"
#include "invwb/routine.hpp"

namespace invwb {

/// Canonical form: single spaces, minimal parentheses by the fixed precedence
/// table published in docs/grammar.md. parse(print(parse(t))) == parse(t).
std::string print_expr(const Expr& e);
inline std::string print_expr(const ExprPtr& e) { return print_expr(*e); }

std::string print_stmt(const Stmt& s, int indent = 0);
std::string print_routine(const Routine& r);

} // namespace invwb
