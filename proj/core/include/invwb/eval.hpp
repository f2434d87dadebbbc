#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "invwb/ast.hpp"
#include "invwb/routine.hpp"
#include "invwb/theory.hpp"
#include "invwb/value.hpp"

namespace invwb {

/// Evaluation context: current environment plus (optionally) the pre-state
/// snapshot used by `old`. Assertion mode enables the eps_real tolerance on
/// real-valued comparisons; executable expressions always compare exactly.
struct EvalScope {
  const Env* env = nullptr;
  const Env* pre_env = nullptr;
  const Heap* heap = nullptr;
  const Heap* pre_heap = nullptr;
  const TheoryRegistry* registry = nullptr;
  Memo* memo = nullptr;
  bool assertion_mode = true;
  double eps_real = 1e-9;

  TheoryCtx theory_ctx() const {
    return TheoryCtx{heap, pre_heap, memo, assertion_mode ? eps_real : 0.0};
  }
};

/// Deterministic evaluation; quantifiers enumerate finite integer ranges;
/// and/or/implies short-circuit left to right. Throws EvalError on unbound
/// variables, bounds violations, and partial-function domain violations.
Value evaluate(const Expr& e, const EvalScope& scope);
inline Value evaluate(const ExprPtr& e, const EvalScope& scope) { return evaluate(*e, scope); }

/// Truth of an assertion under three-valued semantics, folded to a verdict.
enum class Truth { True, False, Undefined };
struct TruthResult {
  Truth truth;
  std::string why; // diagnostic for Undefined
};
TruthResult check_assertion(const Expr& e, const EvalScope& scope);

/// Capture-avoiding substitution of every free occurrence of `var`.
ExprPtr substitute(const ExprPtr& e, const std::string& var, const ExprPtr& replacement);

/// Relaxation targets of `e` relative to `routine`'s designated loop: the
/// literal constants, never-assigned variables, and bound fields (a.lower,
/// a.upper, a.count of never-assigned arrays) occurring in `e`. `assigned`
/// is the loop body's assigned-variable set.
std::vector<ExprPtr> free_constants(const Expr& e, const std::vector<std::string>& assigned);

/// Overload computing the assigned set from the routine's first top-level loop.
std::vector<ExprPtr> free_constants(const Expr& e, const Routine& routine);

} // namespace invwb
