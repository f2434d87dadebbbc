#include "invwb/mutation.hpp"

#include <deque>
#include <map>
#include <set>

#include "invwb/eval.hpp"
#include "invwb/print.hpp"

namespace invwb {

std::string heuristic_name(HeuristicKind k) {
  switch (k) {
    case HeuristicKind::Verbatim: return "verbatim";
    case HeuristicKind::Backward: return "backward_reasoning";
    case HeuristicKind::ConstantRelax: return "constant_relaxation";
    case HeuristicKind::Uncouple: return "uncoupling";
    case HeuristicKind::DropTerm: return "term_dropping";
    case HeuristicKind::Aging: return "aging";
    case HeuristicKind::Rewrite: return "rewrite";
    case HeuristicKind::SliceNorm: return "slice_form";
  }
  return "?";
}

std::string candidate_class_name(CandidateClass c) {
  return c == CandidateClass::Essential ? "essential" : "bounding";
}

namespace {

// ---- occurrence machinery ----
// Occurrences are counted in preorder over subexpressions structurally equal
// to the target; subtrees under `old` are never touched (they denote the
// pre-state, which mutations must not rewrite).

ExprPtr replace_occ(const ExprPtr& e, const Expr& target, const ExprPtr& repl,
                    const std::vector<int>& occ, int& counter) {
  if (structurally_equal(*e, target)) {
    int idx = counter++;
    if (occ.empty() || std::find(occ.begin(), occ.end(), idx) != occ.end()) return repl;
    return e;
  }
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) { return replace_occ(c, target, repl, occ, counter); };
        if constexpr (std::is_same_v<T, OldExpr>) {
          return e;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return mk::unary(x.op, go(x.operand));
        } else if constexpr (std::is_same_v<T, Binary>) {
          return mk::binary(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return mk::minmax(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, Quant>) {
          return mk::quant(x.kind, x.var, go(x.lo), go(x.hi), go(x.body));
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          return mk::slice(go(x.array), go(x.lo), go(x.hi));
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return mk::index(go(x.array), go(x.index));
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          return mk::field(go(x.target), x.field);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          std::vector<ExprPtr> args;
          args.reserve(x.args.size());
          for (const auto& a : x.args) args.push_back(go(a));
          return mk::fun(x.symbol, std::move(args));
        } else {
          return e;
        }
      },
      e->node);
}

ExprPtr replace_occurrences(const ExprPtr& e, const Expr& target, const ExprPtr& repl,
                            const std::vector<int>& occ) {
  int counter = 0;
  return replace_occ(e, target, repl, occ, counter);
}

int count_occurrences(const ExprPtr& e, const Expr& target) {
  int counter = 0;
  replace_occ(e, target, e /*unused self*/, {-1}, counter);
  return counter;
}

// ---- expression sort guessing (for replacement-variable pools) ----

enum class Sort { Int, Real, Ref, Array, Other };

Sort sort_of_type(SemType t) {
  if (t == SemType::Int) return Sort::Int;
  if (t == SemType::Real) return Sort::Real;
  if (is_ref_type(t)) return Sort::Ref;
  if (is_array_type(t)) return Sort::Array;
  return Sort::Other;
}

Sort sort_of_expr(const Expr& e, const Routine& r) {
  if (std::holds_alternative<IntLit>(e.node)) return Sort::Int;
  if (std::holds_alternative<RealLit>(e.node)) return Sort::Real;
  if (std::holds_alternative<VoidLit>(e.node)) return Sort::Ref;
  if (const auto* v = std::get_if<VarRef>(&e.node)) {
    const VarDecl* d = r.find_var(v->name);
    return d ? sort_of_type(d->type) : Sort::Other;
  }
  if (std::holds_alternative<FieldExpr>(e.node)) return Sort::Int; // lower/upper/count
  return Sort::Other;
}

std::vector<std::string> loop_assigned(const Routine& r) {
  auto loops = top_level_loops(r);
  if (loops.empty()) return {};
  return assigned_vars(loops.front()->body);
}

std::vector<std::string> replacement_pool(const Routine& r, Sort sort) {
  std::vector<std::string> out;
  for (const auto& name : loop_assigned(r)) {
    const VarDecl* d = r.find_var(name);
    if (d && sort_of_type(d->type) == sort) out.push_back(name);
  }
  return out;
}

ExprPtr conjoin(const ExprPtr& a, const ExprPtr& b) {
  if (!a) return b;
  if (!b) return a;
  return mk::binary(BinOp::And, a, b);
}

void flatten_and(const ExprPtr& e, std::vector<ExprPtr>& out) {
  if (const auto* b = std::get_if<Binary>(&e->node); b && b->op == BinOp::And) {
    flatten_and(b->lhs, out);
    flatten_and(b->rhs, out);
    return;
  }
  out.push_back(e);
}

ExprPtr rebuild_and(const std::vector<ExprPtr>& conj) {
  ExprPtr out;
  for (const auto& c : conj) out = out ? mk::binary(BinOp::And, out, c) : c;
  return out;
}

// ---- rewrite identities ----

struct Identity {
  std::string name;
  bool at_root; // equality-duplication style (positions 0/1 = which side kept)
  Sort var_sort;
  std::function<ExprPtr(const ExprPtr& var)> make;
};

const std::vector<Identity>& identities() {
  static const std::vector<Identity> ids = [] {
    std::vector<Identity> v;
    v.push_back({"dup_eq", true, Sort::Other, nullptr});
    v.push_back({"gcd_self", false, Sort::Int,
                 [](const ExprPtr& t) { return mk::fun("gcd", {t, t}); }});
    v.push_back({"gcd_zero", false, Sort::Int,
                 [](const ExprPtr& t) { return mk::fun("gcd", {t, mk::int_lit(0)}); }});
    v.push_back({"times_one", false, Sort::Int,
                 [](const ExprPtr& t) { return mk::binary(BinOp::Mul, t, mk::int_lit(1)); }});
    v.push_back({"times_one_pow", false, Sort::Int, [](const ExprPtr& t) {
                   return mk::binary(BinOp::Mul, t,
                                     mk::binary(BinOp::Pow, mk::int_lit(1), mk::int_lit(1)));
                 }});
    v.push_back({"rev_empty_cat", false, Sort::Ref, [](const ExprPtr& t) {
                   return mk::fun("cat", {mk::fun("rev", {mk::void_lit()}), t});
                 }});
    return v;
  }();
  return ids;
}

// Eligible positions of a variable-template identity: preorder VarRef
// occurrences of matching sort, skipping `old` subtrees.
void var_positions(const ExprPtr& e, const Routine& r, Sort sort,
                   std::vector<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) { var_positions(c, r, sort, out); };
        if constexpr (std::is_same_v<T, VarRef>) {
          const VarDecl* d = r.find_var(x.name);
          if (d && sort_of_type(d->type) == sort) out.push_back(x.name);
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          // skip
        } else if constexpr (std::is_same_v<T, Unary>) {
          go(x.operand);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          go(x.lhs);
          go(x.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          go(x.lo);
          go(x.hi);
          go(x.body);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          go(x.array);
          go(x.lo);
          go(x.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          go(x.array);
          go(x.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          go(x.target);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args) go(a);
        }
      },
      e->node);
}

// Replace the k-th eligible VarRef position with the identity's template.
ExprPtr apply_var_identity(const ExprPtr& e, const Identity& id, const Routine& r, int k,
                           int& counter, std::string* var_name) {
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) {
          return apply_var_identity(c, id, r, k, counter, var_name);
        };
        if constexpr (std::is_same_v<T, VarRef>) {
          const VarDecl* d = r.find_var(x.name);
          if (d && sort_of_type(d->type) == id.var_sort) {
            int idx = counter++;
            if (idx == k) {
              if (var_name) *var_name = x.name;
              return id.make(e);
            }
          }
          return e;
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          return e;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return mk::unary(x.op, go(x.operand));
        } else if constexpr (std::is_same_v<T, Binary>) {
          return mk::binary(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return mk::minmax(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, Quant>) {
          return mk::quant(x.kind, x.var, go(x.lo), go(x.hi), go(x.body));
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          return mk::slice(go(x.array), go(x.lo), go(x.hi));
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return mk::index(go(x.array), go(x.index));
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          return mk::field(go(x.target), x.field);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          std::vector<ExprPtr> args;
          for (const auto& a : x.args) args.push_back(go(a));
          return mk::fun(x.symbol, std::move(args));
        } else {
          return e;
        }
      },
      e->node);
}

ExprPtr rewrite_at(const std::string& identity, const ExprPtr& clause, const Routine& r,
                   int pos) {
  for (const auto& id : identities()) {
    if (id.name != identity) continue;
    if (id.at_root) {
      const auto* b = std::get_if<Binary>(&clause->node);
      if (!b || (b->op != BinOp::Eq && b->op != BinOp::Iff)) return nullptr;
      if (structurally_equal(*b->lhs, *b->rhs)) return nullptr;
      if (pos == 0) return mk::binary(b->op, b->rhs, b->rhs);
      if (pos == 1) return mk::binary(b->op, b->lhs, b->lhs);
      return nullptr;
    }
    int counter = 0;
    ExprPtr out = apply_var_identity(clause, id, r, pos, counter, nullptr);
    if (pos >= counter) return nullptr;
    return out;
  }
  return nullptr;
}

// Slice bound of the slice(s)/quantifier(s) whose lo or hi equals the target:
// used for the companion bounding clause of an interval-bound relaxation.
struct BoundContext {
  bool is_lo;      // target sits at the lo position
  ExprPtr sibling; // the other bound of that slice/range
};

void find_bound_contexts(const ExprPtr& e, const Expr& target, std::vector<BoundContext>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) { find_bound_contexts(c, target, out); };
        if constexpr (std::is_same_v<T, SliceExpr>) {
          if (structurally_equal(*x.lo, target)) out.push_back({true, x.hi});
          if (structurally_equal(*x.hi, target)) out.push_back({false, x.lo});
          go(x.array);
          go(x.lo);
          go(x.hi);
        } else if constexpr (std::is_same_v<T, Quant>) {
          if (structurally_equal(*x.lo, target)) out.push_back({true, x.hi});
          if (structurally_equal(*x.hi, target)) out.push_back({false, x.lo});
          go(x.lo);
          go(x.hi);
          go(x.body);
        } else if constexpr (std::is_same_v<T, OldExpr>) {
        } else if constexpr (std::is_same_v<T, Unary>) {
          go(x.operand);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          go(x.lhs);
          go(x.rhs);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          go(x.array);
          go(x.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          go(x.target);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args) go(a);
        }
      },
      e->node);
}

ExprPtr companion_bound(const ExprPtr& prev, const Expr& target, const ExprPtr& var,
                        int context_index) {
  std::vector<BoundContext> ctxs;
  find_bound_contexts(prev, target, ctxs);
  if (context_index < 0 || context_index >= static_cast<int>(ctxs.size())) return nullptr;
  const BoundContext& c = ctxs[static_cast<std::size_t>(context_index)];
  auto tcopy = std::make_shared<Expr>(target);
  if (c.is_lo)
    return mk::binary(BinOp::And, mk::binary(BinOp::Le, tcopy, var),
                      mk::binary(BinOp::Le, var, c.sibling));
  return mk::binary(BinOp::And, mk::binary(BinOp::Le, c.sibling, var),
                    mk::binary(BinOp::Le, var, tcopy));
}

// Lower bound to use when an array variable is written in full slice form:
// the literal the precondition pins a.lower to, else a.lower itself.
ExprPtr slice_lower_for(const Routine& r, const std::string& array) {
  for (const auto& c : r.precondition) {
    std::vector<ExprPtr> conj;
    flatten_and(c.expr, conj);
    for (const auto& atom : conj) {
      const auto* b = std::get_if<Binary>(&atom->node);
      if (!b || b->op != BinOp::Eq) continue;
      auto match = [&](const ExprPtr& fe, const ExprPtr& lit) -> ExprPtr {
        const auto* f = std::get_if<FieldExpr>(&fe->node);
        if (!f || f->field != "lower") return nullptr;
        const auto* v = std::get_if<VarRef>(&f->target->node);
        if (!v || v->name != array) return nullptr;
        if (!std::holds_alternative<IntLit>(lit->node)) return nullptr;
        return lit;
      };
      if (ExprPtr lit = match(b->lhs, b->rhs)) return lit;
      if (ExprPtr lit = match(b->rhs, b->lhs)) return lit;
    }
  }
  return mk::field(mk::var(array), "lower");
}

bool eligible_slice_array(const Routine& r, const std::string& name) {
  const VarDecl* d = r.find_var(name);
  return d && (d->type == SemType::IntArray || d->type == SemType::RealArray);
}

// Positions of bare array-variable arguments of function applications,
// candidates for the full-slice normalization a -> a[lo..a.upper].
void slice_positions(const ExprPtr& e, const Routine& r, std::vector<std::string>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) { slice_positions(c, r, out); };
        if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args) {
            if (const auto* v = std::get_if<VarRef>(&a->node)) {
              if (eligible_slice_array(r, v->name)) out.push_back(v->name);
            }
            go(a);
          }
        } else if constexpr (std::is_same_v<T, OldExpr>) {
        } else if constexpr (std::is_same_v<T, Unary>) {
          go(x.operand);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          go(x.lhs);
          go(x.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          go(x.lo);
          go(x.hi);
          go(x.body);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          go(x.array);
          go(x.lo);
          go(x.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          go(x.array);
          go(x.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          go(x.target);
        }
      },
      e->node);
}

ExprPtr slice_norm_at(const ExprPtr& e, const Routine& r, int k, int& counter,
                      std::string* array_name) {
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) {
          return slice_norm_at(c, r, k, counter, array_name);
        };
        if constexpr (std::is_same_v<T, FunApp>) {
          std::vector<ExprPtr> args;
          for (const auto& a : x.args) {
            const auto* v = std::get_if<VarRef>(&a->node);
            if (v && eligible_slice_array(r, v->name)) {
              int idx = counter++;
              if (idx == k) {
                if (array_name) *array_name = v->name;
                args.push_back(mk::slice(a, slice_lower_for(r, v->name),
                                         mk::field(a, "upper")));
                continue;
              }
            }
            args.push_back(go(a));
          }
          return mk::fun(x.symbol, std::move(args));
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          return e;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return mk::unary(x.op, go(x.operand));
        } else if constexpr (std::is_same_v<T, Binary>) {
          return mk::binary(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return mk::minmax(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, Quant>) {
          return mk::quant(x.kind, x.var, go(x.lo), go(x.hi), go(x.body));
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          return mk::slice(go(x.array), go(x.lo), go(x.hi));
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return mk::index(go(x.array), go(x.index));
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          return mk::field(go(x.target), x.field);
        } else {
          return e;
        }
      },
      e->node);
}

bool is_comparison(const Expr& e) {
  const auto* b = std::get_if<Binary>(&e.node);
  if (!b) return false;
  switch (b->op) {
    case BinOp::Eq: case BinOp::Ne: case BinOp::Lt: case BinOp::Le:
    case BinOp::Gt: case BinOp::Ge:
      return true;
    default:
      return false;
  }
}

} // namespace

// ---- replay ----

ExprPtr apply_step(const ExprPtr& prev, const DerivationStep& step, const Routine& routine) {
  switch (step.kind) {
    case HeuristicKind::Verbatim:
      return prev;
    case HeuristicKind::Backward:
      return backward_substitute(prev, trailing_stmts(routine));
    case HeuristicKind::Rewrite:
      return rewrite_at(step.identity, prev, routine,
                        step.occurrences.empty() ? 0 : step.occurrences[0]);
    case HeuristicKind::SliceNorm: {
      int counter = 0;
      return slice_norm_at(prev, routine, step.occurrences.empty() ? 0 : step.occurrences[0],
                           counter, nullptr);
    }
    case HeuristicKind::ConstantRelax:
      if (step.identity == "companion_lo" || step.identity == "companion_hi")
        return companion_bound(prev, *step.target, step.replacement, step.conjunct);
      return replace_occurrences(prev, *step.target, step.replacement, step.occurrences);
    case HeuristicKind::Uncouple:
      return replace_occurrences(prev, *step.target, step.replacement, step.occurrences);
    case HeuristicKind::DropTerm: {
      std::vector<ExprPtr> conj;
      flatten_and(prev, conj);
      if (step.conjunct < 0 || step.conjunct >= static_cast<int>(conj.size())) return nullptr;
      conj.erase(conj.begin() + step.conjunct);
      return rebuild_and(conj);
    }
    case HeuristicKind::Aging:
      return substitute(prev, step.var, step.replacement);
  }
  return nullptr;
}

bool replay_derivation(const Candidate& cand, const Routine& routine) {
  ExprPtr cur = cand.source;
  for (const auto& step : cand.derivation) {
    cur = apply_step(cur, step, routine);
    if (!cur) return false;
    if (step.after && !structurally_equal(*cur, *step.after)) return false;
  }
  return cur && structurally_equal(*cur, *cand.clause);
}

// ---- the five heuristics ----

namespace {

Candidate extend(const Candidate& parent, DerivationStep step, ExprPtr clause,
                 ExprPtr exit_extra, int depth_cost = 1) {
  Candidate c = parent;
  step.after = clause;
  c.derivation.push_back(std::move(step));
  c.clause = std::move(clause);
  c.depth = parent.depth + depth_cost;
  if (exit_extra) c.exit_contribution = conjoin(c.exit_contribution, exit_extra);
  return c;
}

Candidate seed(const ExprPtr& clause) {
  Candidate c;
  c.clause = clause;
  c.source = clause;
  DerivationStep s;
  s.kind = HeuristicKind::Verbatim;
  s.describe = "postcondition clause";
  s.after = clause;
  c.derivation.push_back(std::move(s));
  c.depth = 0;
  return c;
}

std::vector<Candidate> relax_inner(const Candidate& parent, const ExprPtr& target,
                                   const Routine& routine) {
  std::vector<Candidate> out;
  const ExprPtr& clause = parent.clause;
  int count = count_occurrences(clause, *target);
  if (count == 0) return out;
  Sort sort = sort_of_expr(*target, routine);
  std::vector<std::string> pool = replacement_pool(routine, sort);
  std::string target_text = print_expr(*target);

  std::vector<std::vector<int>> policies;
  policies.push_back({}); // all occurrences
  if (count >= 2 && count <= 3)
    for (int i = 0; i < count; ++i) policies.push_back({i});

  for (const auto& var : pool) {
    if (const auto* v = std::get_if<VarRef>(&target->node); v && v->name == var) continue;
    ExprPtr vref = mk::var(var);
    for (const auto& occ : policies) {
      ExprPtr relaxed = replace_occurrences(clause, *target, vref, occ);
      if (structurally_equal(*relaxed, *clause)) continue;
      DerivationStep step;
      step.kind = HeuristicKind::ConstantRelax;
      step.describe = "relax " + target_text + " -> " + var +
                      (occ.empty() ? " (all occurrences)"
                                   : " (occurrence " + std::to_string(occ[0]) + ")");
      step.target = target;
      step.var = var;
      step.replacement = vref;
      step.occurrences = occ;
      Candidate c = extend(parent, std::move(step), relaxed,
                           mk::binary(BinOp::Eq, vref, target));
      c.fresh_vars.push_back(var);
      out.push_back(std::move(c));

      // companion bounding clause for interval-bound targets
      std::vector<BoundContext> ctxs;
      find_bound_contexts(clause, *target, ctxs);
      for (int ci = 0; ci < static_cast<int>(ctxs.size()); ++ci) {
        ExprPtr comp = companion_bound(clause, *target, vref, ci);
        if (!comp) continue;
        DerivationStep cstep;
        cstep.kind = HeuristicKind::ConstantRelax;
        cstep.describe = "companion bounding for " + target_text + " -> " + var;
        cstep.target = target;
        cstep.replacement = vref;
        cstep.identity = ctxs[static_cast<std::size_t>(ci)].is_lo ? "companion_lo" : "companion_hi";
        cstep.conjunct = ci;
        Candidate cb = extend(parent, std::move(cstep), comp, nullptr);
        cb.fresh_vars.push_back(var);
        cb.classification = CandidateClass::Bounding;
        out.push_back(std::move(cb));
      }
    }
  }
  return out;
}

} // namespace

std::vector<Candidate> relax_constant(const ExprPtr& clause, const ExprPtr& target,
                                      const Routine& routine) {
  // target must be a constant of the loop
  auto consts = free_constants(*clause, routine);
  bool ok = false;
  for (const auto& c : consts)
    if (structurally_equal(*c, *target)) { ok = true; break; }
  if (!ok) return {};
  return relax_inner(seed(clause), target, routine);
}

std::vector<Candidate> uncouple(const ExprPtr& clause, const std::string& var,
                                const std::optional<std::string>& rewrite_name,
                                const Routine& routine) {
  std::vector<Candidate> out;
  const VarDecl* decl = routine.find_var(var);
  if (!decl) return out;
  Sort sort = sort_of_type(decl->type);

  std::vector<Candidate> bases;
  if (rewrite_name) {
    // apply the identity at each eligible position of `var`
    std::vector<std::string> positions;
    var_positions(clause, routine, sort, positions);
    Candidate s = seed(clause);
    for (int k = 0; k < static_cast<int>(positions.size()); ++k) {
      if (positions[static_cast<std::size_t>(k)] != var) continue;
      ExprPtr rewritten = rewrite_at(*rewrite_name, clause, routine, k);
      if (!rewritten || structurally_equal(*rewritten, *clause)) continue;
      DerivationStep step;
      step.kind = HeuristicKind::Rewrite;
      step.describe = *rewrite_name + " at " + var;
      step.identity = *rewrite_name;
      step.occurrences = {k};
      bases.push_back(extend(s, std::move(step), rewritten, nullptr));
    }
  } else {
    bases.push_back(seed(clause));
  }

  ExprPtr target = mk::var(var);
  for (const auto& base : bases) {
    int count = count_occurrences(base.clause, *target);
    if (count < 2) continue;
    for (const auto& repl : replacement_pool(routine, sort)) {
      if (repl == var) continue;
      ExprPtr vref = mk::var(repl);
      for (int i = 0; i < count; ++i) {
        ExprPtr split = replace_occurrences(base.clause, *target, vref, {i});
        if (structurally_equal(*split, *base.clause)) continue;
        DerivationStep step;
        step.kind = HeuristicKind::Uncouple;
        step.describe = "uncouple " + var + " -> " + repl + " (occurrence " +
                        std::to_string(i) + ")";
        step.target = target;
        step.var = var;
        step.replacement = vref;
        step.occurrences = {i};
        ExprPtr exit = mk::binary(BinOp::Eq, target, vref);
        Candidate c = extend(base, std::move(step), split, exit);
        c.fresh_vars.push_back(repl);
        // degenerate: the candidate *is* its own exit condition
        if (structurally_equal(*c.clause, *exit)) continue;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::vector<Candidate> drop_term(const ExprPtr& clause) {
  std::vector<Candidate> out;
  std::vector<ExprPtr> conj;
  flatten_and(clause, conj);
  if (conj.size() < 2) return out;
  Candidate s = seed(clause);
  for (int d = 0; d < static_cast<int>(conj.size()); ++d) {
    std::vector<ExprPtr> rest = conj;
    rest.erase(rest.begin() + d);
    DerivationStep step;
    step.kind = HeuristicKind::DropTerm;
    step.describe = "drop conjunct " + print_expr(*conj[static_cast<std::size_t>(d)]);
    step.conjunct = d;
    ExprPtr exit;
    if (is_comparison(*conj[static_cast<std::size_t>(d)]))
      exit = conj[static_cast<std::size_t>(d)];
    out.push_back(extend(s, std::move(step), rebuild_and(rest), exit));
  }
  return out;
}

Candidate age(const ExprPtr& clause, const std::string& var, const ExprPtr& offset) {
  ExprPtr vref = mk::var(var);
  ExprPtr previous;
  if (const auto* u = std::get_if<Unary>(&offset->node); u && u->op == UnOp::Neg) {
    previous = mk::binary(BinOp::Add, vref, u->operand); // negative step: v + E
  } else if (const auto* i = std::get_if<IntLit>(&offset->node); i && i->value == 0) {
    previous = vref; // aging by zero is the identity
  } else {
    previous = mk::binary(BinOp::Sub, vref, offset);
  }
  DerivationStep step;
  step.kind = HeuristicKind::Aging;
  step.describe = "age " + var + " by " + print_expr(*offset);
  step.var = var;
  step.replacement = previous;
  ExprPtr aged = substitute(clause, var, previous);
  return extend(seed(clause), std::move(step), aged, nullptr);
}

namespace {

// Substitution that leaves `old` subtrees untouched: assignments after the
// loop cannot change the pre-state.
ExprPtr wp_subst(const ExprPtr& e, const std::string& var, const ExprPtr& repl) {
  if (std::holds_alternative<OldExpr>(e->node)) return e;
  if (const auto* v = std::get_if<VarRef>(&e->node)) {
    return v->name == var ? repl : e;
  }
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) { return wp_subst(c, var, repl); };
        if constexpr (std::is_same_v<T, Unary>) {
          return mk::unary(x.op, go(x.operand));
        } else if constexpr (std::is_same_v<T, Binary>) {
          return mk::binary(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return mk::minmax(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, Quant>) {
          if (x.var == var) return mk::quant(x.kind, x.var, go(x.lo), go(x.hi), x.body);
          return mk::quant(x.kind, x.var, go(x.lo), go(x.hi), go(x.body));
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          return mk::slice(go(x.array), go(x.lo), go(x.hi));
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return mk::index(go(x.array), go(x.index));
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          return mk::field(go(x.target), x.field);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          std::vector<ExprPtr> args;
          for (const auto& a : x.args) args.push_back(go(a));
          return mk::fun(x.symbol, std::move(args));
        } else {
          return e;
        }
      },
      e->node);
}

} // namespace

ExprPtr backward_substitute(const ExprPtr& post, const std::vector<StmtPtr>& trailing) {
  ExprPtr cur = post;
  for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
    const Stmt& s = **it;
    if (const auto* a = std::get_if<AssignStmt>(&s.node)) {
      if (!a->target.indices.empty() || !a->target.field.empty())
        throw std::invalid_argument(
            "backward substitution supports plain-variable assignments only");
      cur = wp_subst(cur, a->target.var, a->value);
    } else if (const auto* f = std::get_if<IfStmt>(&s.node)) {
      ExprPtr wp_then = backward_substitute(cur, f->then_branch);
      ExprPtr wp_else = backward_substitute(cur, f->else_branch);
      if (structurally_equal(*wp_then, *wp_else)) {
        cur = wp_then;
      } else {
        cur = mk::binary(BinOp::And, mk::binary(BinOp::Implies, f->cond, wp_then),
                         mk::binary(BinOp::Implies, mk::unary(UnOp::Not, f->cond), wp_else));
      }
    } else {
      throw std::invalid_argument(
          "backward substitution supports assignments and ifs only");
    }
  }
  return cur;
}

// ---- tautologies, classification, gold matching ----

bool is_tautology(const Expr& clause) {
  if (const auto* b = std::get_if<BoolLit>(&clause.node)) return b->value;
  if (const auto* bin = std::get_if<Binary>(&clause.node)) {
    switch (bin->op) {
      case BinOp::Eq: case BinOp::Le: case BinOp::Ge: case BinOp::Iff:
      case BinOp::Implies:
        if (structurally_equal(*bin->lhs, *bin->rhs)) return true;
        break;
      default:
        break;
    }
    if (bin->op == BinOp::And)
      return is_tautology(*bin->lhs) && is_tautology(*bin->rhs);
  }
  return false;
}

namespace {

CandidateClass classify(const ExprPtr& clause, const Routine& routine) {
  std::vector<std::string> assigned = loop_assigned(routine);
  std::set<std::string> aset(assigned.begin(), assigned.end());
  std::vector<ExprPtr> conj;
  flatten_and(clause, conj);
  for (const auto& atom : conj) {
    const auto* b = std::get_if<Binary>(&atom->node);
    if (!b) return CandidateClass::Essential;
    if (b->op != BinOp::Lt && b->op != BinOp::Le && b->op != BinOp::Gt && b->op != BinOp::Ge)
      return CandidateClass::Essential;
    auto bare_assigned = [&](const ExprPtr& e) {
      const auto* v = std::get_if<VarRef>(&e->node);
      return v && aset.count(v->name) > 0;
    };
    auto constant_side = [&](const ExprPtr& e) {
      for (const auto& v : free_vars(*e))
        if (aset.count(v)) return false;
      return true;
    };
    bool ok = (bare_assigned(b->lhs) && constant_side(b->rhs)) ||
              (bare_assigned(b->rhs) && constant_side(b->lhs));
    if (!ok) return CandidateClass::Essential;
  }
  return CandidateClass::Bounding;
}

bool match_expr(const Expr& a, const Expr& b, const std::set<std::string>& renameable,
                std::map<std::string, std::string>& fwd,
                std::map<std::string, std::string>& bwd);

bool match_children(const Expr& a, const Expr& b, const std::set<std::string>& renameable,
                    std::map<std::string, std::string>& fwd,
                    std::map<std::string, std::string>& bwd) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        auto m = [&](const ExprPtr& p, const ExprPtr& q) {
          return match_expr(*p, *q, renameable, fwd, bwd);
        };
        if constexpr (std::is_same_v<T, OldExpr>) {
          return m(x.expr, y.expr);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && m(x.operand, y.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && m(x.lhs, y.lhs) && m(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return x.op == y.op && m(x.lhs, y.lhs) && m(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          return x.kind == y.kind && x.var == y.var && m(x.lo, y.lo) && m(x.hi, y.hi) &&
                 m(x.body, y.body);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          return m(x.array, y.array) && m(x.lo, y.lo) && m(x.hi, y.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return m(x.array, y.array) && m(x.index, y.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          return x.field == y.field && m(x.target, y.target);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          const FunApp& fb = std::get<FunApp>(b.node);
          if (x.symbol != fb.symbol || x.args.size() != fb.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i)
            if (!m(x.args[i], fb.args[i])) return false;
          return true;
        } else {
          return structurally_equal(a, b);
        }
      },
      a.node);
}

bool match_expr(const Expr& a, const Expr& b, const std::set<std::string>& renameable,
                std::map<std::string, std::string>& fwd,
                std::map<std::string, std::string>& bwd) {
  const auto* va = std::get_if<VarRef>(&a.node);
  const auto* vb = std::get_if<VarRef>(&b.node);
  if (va && vb && renameable.count(va->name)) {
    auto f = fwd.find(va->name);
    auto g = bwd.find(vb->name);
    if (f == fwd.end() && g == bwd.end()) {
      fwd[va->name] = vb->name;
      bwd[vb->name] = va->name;
      return true;
    }
    return f != fwd.end() && f->second == vb->name && g != bwd.end() &&
           g->second == va->name;
  }
  return match_children(a, b, renameable, fwd, bwd);
}

} // namespace

bool equal_up_to_renaming(const Candidate& cand, const Expr& gold) {
  if (structurally_equal(*cand.clause, gold)) return true;
  std::set<std::string> renameable(cand.fresh_vars.begin(), cand.fresh_vars.end());
  if (renameable.empty()) return false;
  std::map<std::string, std::string> fwd, bwd;
  return match_expr(*cand.clause, gold, renameable, fwd, bwd);
}

// ---- the closure ----

std::vector<Candidate> generate_candidates(const Routine& routine, const GenerateOptions& opts) {
  std::vector<Candidate> result;
  auto loops = top_level_loops(routine);
  if (loops.empty()) return result;
  const LoopStmt& loop = *loops.front();
  std::vector<std::string> assigned = assigned_vars(loop.body);
  std::set<std::string> aset(assigned.begin(), assigned.end());

  // aging offsets: 1, plus the loop-step expressions found in the body
  std::map<std::string, std::vector<ExprPtr>> offsets;
  for (const auto& var : assigned) offsets[var] = {mk::int_lit(1)};
  {
    std::function<void(const std::vector<StmtPtr>&)> scan = [&](const auto& stmts) {
      for (const auto& sp : stmts) {
        std::visit(
            [&](const auto& s) {
              using T = std::decay_t<decltype(s)>;
              if constexpr (std::is_same_v<T, AssignStmt>) {
                if (!s.target.indices.empty() || !s.target.field.empty()) return;
                const auto* b = std::get_if<Binary>(&s.value->node);
                if (!b) return;
                const auto* lv = std::get_if<VarRef>(&b->lhs->node);
                if (!lv || lv->name != s.target.var) return;
                if (b->op == BinOp::Add) {
                  offsets[s.target.var].push_back(b->rhs);
                } else if (b->op == BinOp::Sub) {
                  offsets[s.target.var].push_back(mk::unary(UnOp::Neg, b->rhs));
                }
              } else if constexpr (std::is_same_v<T, IfStmt>) {
                scan(s.then_branch);
                scan(s.else_branch);
              } else if constexpr (std::is_same_v<T, LoopStmt>) {
                scan(s.init);
                scan(s.body);
              }
            },
            sp->node);
      }
    };
    scan(loop.body);
  }

  struct WorkItem {
    Candidate cand;
    bool did_rewrite = false;
    bool did_slicenorm = false;
    bool relax_phase = false;
  };
  std::deque<WorkItem> queue;
  std::set<std::string> seen;
  std::set<std::string> emitted;

  auto push = [&](WorkItem item) {
    std::string key = print_expr(*item.cand.clause);
    if (!seen.insert(key + "|" + std::to_string(item.cand.depth)).second) return;
    queue.push_back(std::move(item));
  };
  auto emit = [&](const Candidate& c) {
    if (is_tautology(*c.clause)) return;
    std::string key = print_expr(*c.clause);
    if (!emitted.insert(key).second) return;
    Candidate copy = c;
    copy.classification = classify(copy.clause, routine);
    result.push_back(std::move(copy));
  };

  // sources: postcondition clauses, plus their pull-back through the
  // trailing statements when those are supported
  for (const auto& clause : routine.postcondition) {
    WorkItem w;
    w.cand = seed(clause.expr);
    push(std::move(w));
  }
  auto trailing = trailing_stmts(routine);
  if (!trailing.empty()) {
    for (const auto& clause : routine.postcondition) {
      try {
        ExprPtr wp = backward_substitute(clause.expr, trailing);
        if (structurally_equal(*wp, *clause.expr)) continue;
        Candidate c = seed(clause.expr);
        DerivationStep step;
        step.kind = HeuristicKind::Backward;
        step.describe = "pull back through trailing statements";
        step.after = wp;
        c.derivation.push_back(std::move(step));
        c.clause = wp;
        c.depth = 1;
        WorkItem w;
        w.cand = std::move(c);
        push(std::move(w));
      } catch (const std::invalid_argument&) {
        // unsupported trailing statements: verbatim sources only
      }
    }
  }

  const std::size_t explore_cap = opts.cap * 8;
  std::size_t explored = 0;
  while (!queue.empty() && result.size() < opts.cap && explored < explore_cap) {
    WorkItem item = std::move(queue.front());
    queue.pop_front();
    ++explored;
    emit(item.cand);
    const Candidate& cand = item.cand;
    if (cand.depth >= opts.budget) continue;

    // rewrites: at most one, before the relax family
    if (!item.relax_phase && !item.did_rewrite) {
      for (const auto& id : identities()) {
        int max_pos;
        if (id.at_root) {
          max_pos = 2;
        } else {
          std::vector<std::string> positions;
          var_positions(cand.clause, routine, id.var_sort, positions);
          max_pos = static_cast<int>(positions.size());
        }
        for (int k = 0; k < max_pos; ++k) {
          ExprPtr rewritten = rewrite_at(id.name, cand.clause, routine, k);
          if (!rewritten || structurally_equal(*rewritten, *cand.clause)) continue;
          DerivationStep step;
          step.kind = HeuristicKind::Rewrite;
          step.describe = id.name;
          step.identity = id.name;
          step.occurrences = {k};
          WorkItem w;
          w.cand = extend(cand, std::move(step), rewritten, nullptr);
          w.did_rewrite = true;
          w.did_slicenorm = item.did_slicenorm;
          push(std::move(w));
        }
      }
    }

    // full-slice normalization: free (not budget-counted), at most one
    if (!item.relax_phase && !item.did_slicenorm) {
      std::vector<std::string> positions;
      slice_positions(cand.clause, routine, positions);
      for (int k = 0; k < static_cast<int>(positions.size()); ++k) {
        int counter = 0;
        std::string array;
        ExprPtr normed = slice_norm_at(cand.clause, routine, k, counter, &array);
        if (!normed || structurally_equal(*normed, *cand.clause)) continue;
        DerivationStep step;
        step.kind = HeuristicKind::SliceNorm;
        step.describe = array + " in full slice form";
        step.occurrences = {k};
        WorkItem w;
        w.cand = extend(cand, std::move(step), normed, nullptr, /*depth_cost=*/0);
        w.did_rewrite = item.did_rewrite;
        w.did_slicenorm = true;
        push(std::move(w));
      }
    }

    // constant relaxation
    for (const auto& target : free_constants(*cand.clause, assigned)) {
      Candidate parent = cand;
      for (auto& derived : relax_inner(parent, target, routine)) {
        WorkItem w;
        w.cand = std::move(derived);
        w.did_rewrite = item.did_rewrite;
        w.did_slicenorm = true; // no slice-norm after relaxation
        w.relax_phase = true;
        push(std::move(w));
      }
    }

    // uncoupling (starts the relax phase; not applied after relaxation)
    if (!item.relax_phase) {
      for (const auto& vd : routine.params) aset.insert(vd.name); // consts uncoupled too
      std::set<std::string> tried;
      for (const auto& name : free_vars(*cand.clause)) {
        const VarDecl* d = routine.find_var(name);
        if (!d || !tried.insert(name).second) continue;
        ExprPtr target = mk::var(name);
        int count = count_occurrences(cand.clause, *target);
        if (count < 2) continue;
        Sort sort = sort_of_type(d->type);
        for (const auto& repl : replacement_pool(routine, sort)) {
          if (repl == name) continue;
          ExprPtr vref = mk::var(repl);
          for (int i = 0; i < count; ++i) {
            ExprPtr split = replace_occurrences(cand.clause, *target, vref, {i});
            if (structurally_equal(*split, *cand.clause)) continue;
            ExprPtr exit = mk::binary(BinOp::Eq, target, vref);
            if (structurally_equal(*split, *exit)) continue;
            DerivationStep step;
            step.kind = HeuristicKind::Uncouple;
            step.describe = "uncouple " + name + " -> " + repl;
            step.target = target;
            step.var = name;
            step.replacement = vref;
            step.occurrences = {i};
            WorkItem w;
            w.cand = extend(cand, std::move(step), split, exit);
            w.cand.fresh_vars.push_back(repl);
            w.did_rewrite = item.did_rewrite;
            w.did_slicenorm = item.did_slicenorm;
            w.relax_phase = true;
            push(std::move(w));
          }
        }
      }
    }

    // term dropping
    {
      std::vector<ExprPtr> conj;
      flatten_and(cand.clause, conj);
      if (conj.size() >= 2) {
        for (int d = 0; d < static_cast<int>(conj.size()); ++d) {
          std::vector<ExprPtr> rest = conj;
          rest.erase(rest.begin() + d);
          DerivationStep step;
          step.kind = HeuristicKind::DropTerm;
          step.describe = "drop " + print_expr(*conj[static_cast<std::size_t>(d)]);
          step.conjunct = d;
          ExprPtr exit;
          if (is_comparison(*conj[static_cast<std::size_t>(d)]))
            exit = conj[static_cast<std::size_t>(d)];
          WorkItem w;
          w.cand = extend(cand, std::move(step), rebuild_and(rest), exit);
          w.did_rewrite = item.did_rewrite;
          w.did_slicenorm = item.did_slicenorm;
          w.relax_phase = item.relax_phase;
          push(std::move(w));
        }
      }
    }

    // aging
    for (const auto& name : free_vars(*cand.clause)) {
      if (!aset.count(name)) continue;
      auto it = offsets.find(name);
      if (it == offsets.end()) continue;
      for (const auto& off : it->second) {
        Candidate aged = age(cand.clause, name, off);
        if (structurally_equal(*aged.clause, *cand.clause)) continue;
        // re-root the aged derivation on top of the current one
        DerivationStep step = aged.derivation.back();
        WorkItem w;
        w.cand = extend(cand, std::move(step), aged.clause, nullptr);
        w.did_rewrite = item.did_rewrite;
        w.did_slicenorm = item.did_slicenorm;
        w.relax_phase = item.relax_phase;
        push(std::move(w));
      }
    }
  }

  for (std::size_t i = 0; i < result.size(); ++i) result[i].id = static_cast<int>(i);
  return result;
}

nlohmann::ordered_json candidates_to_json(const std::vector<Candidate>& cands) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : cands) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["clause"] = print_expr(*c.clause);
    j["classification"] = candidate_class_name(c.classification);
    j["depth"] = c.depth;
    nlohmann::ordered_json steps = nlohmann::ordered_json::array();
    for (const auto& s : c.derivation) {
      nlohmann::ordered_json js;
      js["heuristic"] = heuristic_name(s.kind);
      js["detail"] = s.describe;
      steps.push_back(std::move(js));
    }
    j["derivation"] = std::move(steps);
    if (c.exit_contribution) j["exit_contribution"] = print_expr(*c.exit_contribution);
    if (!c.fresh_vars.empty()) j["introduced_vars"] = c.fresh_vars;
    arr.push_back(std::move(j));
  }
  return arr;
}

} // namespace invwb
