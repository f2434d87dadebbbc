#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "invwb/ast.hpp"
#include "invwb/routine.hpp"

namespace invwb {

struct ParseError : std::runtime_error {
  SourcePos pos;
  ParseError(std::string msg, SourcePos p)
      : std::runtime_error(std::move(msg)), pos(p) {}
};

/// Parse a single assertion/expression. The parser is symbol-agnostic: unknown
/// function symbols are a matter for evaluation, not parsing.
ExprPtr parse_expr(const std::string& text);

/// Parse a source file containing one or more annotated routines.
std::vector<Routine> parse_routines(const std::string& text,
                                    const std::string& filename = "<input>");

/// Convenience: parse a file expected to contain exactly one routine.
Routine parse_routine(const std::string& text,
                      const std::string& filename = "<input>");

} // namespace invwb
