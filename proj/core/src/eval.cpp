#include "invwb/eval.hpp"

#include <cmath>
#include <set>

#include "invwb/print.hpp"

namespace invwb {

namespace {

constexpr long long kMaxQuantRange = 1'000'000;

class Evaluator {
 public:
  explicit Evaluator(const EvalScope& s) : s_(s), ctx_(s.theory_ctx()) {}

  Value eval(const Expr& e) {
    return std::visit([&](const auto& x) { return eval_node(x, e); }, e.node);
  }

 private:
  Value eval_node(const IntLit& x, const Expr&) { return Value(x.value); }
  Value eval_node(const RealLit& x, const Expr&) { return Value(x.value); }
  Value eval_node(const BoolLit& x, const Expr&) { return Value(x.value); }
  Value eval_node(const VoidLit&, const Expr&) { return Value(RefVal{0, in_old_}); }

  Value eval_node(const VarRef& x, const Expr&) {
    for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
      if (it->first == x.name) return it->second;
    const Env* env = in_old_ ? s_.pre_env : s_.env;
    if (!env) throw EvalError(EvalErrorKind::Unbound, "no environment");
    auto it = env->find(x.name);
    if (it == env->end())
      throw EvalError(EvalErrorKind::Unbound, "unbound variable '" + x.name + "'");
    Value v = it->second;
    if (in_old_ && v.is_ref() && !v.as_ref().is_void()) {
      RefVal r = v.as_ref();
      r.pre = true;
      return Value(r);
    }
    return v;
  }

  Value eval_node(const OldExpr& x, const Expr&) {
    if (!s_.pre_env || !s_.pre_heap)
      throw EvalError(EvalErrorKind::NoSnapshot, "`old` used without a pre-state snapshot");
    bool saved = in_old_;
    in_old_ = true;
    Value v = eval(*x.expr);
    in_old_ = saved;
    return v;
  }

  Value eval_node(const Unary& x, const Expr&) {
    Value v = eval(*x.operand);
    if (x.op == UnOp::Not) {
      if (!v.is_bool()) throw EvalError(EvalErrorKind::TypeError, "not on non-boolean");
      return Value(!v.as_bool());
    }
    if (v.is_int()) return Value(BigInt(-v.as_int()));
    if (v.is_real()) return Value(-v.as_real());
    throw EvalError(EvalErrorKind::TypeError, "negation of non-number");
  }

  static double as_double(const Value& v) {
    if (v.is_real()) return v.as_real();
    if (v.is_int()) return to_f64(v.as_int());
    throw EvalError(EvalErrorKind::TypeError, "expected a number");
  }

  const BigInt& as_bigint(const Value& v, const char* what) {
    if (!v.is_int()) throw EvalError(EvalErrorKind::TypeError, std::string("expected integer ") + what);
    return v.as_int();
  }

  bool numeric_pair(const Value& a, const Value& b) {
    return (a.is_int() || a.is_real()) && (b.is_int() || b.is_real());
  }

  Value arith(BinOp op, const Value& a, const Value& b) {
    if (!numeric_pair(a, b))
      throw EvalError(EvalErrorKind::TypeError, "arithmetic on non-numbers");
    if (op == BinOp::RealDiv) {
      double y = as_double(b);
      if (y == 0.0) undefined("division by zero");
      return Value(as_double(a) / y);
    }
    if (a.is_real() || b.is_real()) {
      double x = as_double(a), y = as_double(b);
      switch (op) {
        case BinOp::Add: return Value(x + y);
        case BinOp::Sub: return Value(x - y);
        case BinOp::Mul: return Value(x * y);
        default:
          throw EvalError(EvalErrorKind::TypeError, "integer operator on reals");
      }
    }
    const BigInt& x = a.as_int();
    const BigInt& y = b.as_int();
    switch (op) {
      case BinOp::Add: return Value(BigInt(x + y));
      case BinOp::Sub: return Value(BigInt(x - y));
      case BinOp::Mul: return Value(BigInt(x * y));
      case BinOp::IntDiv:
        if (x < 0 || y < 0) undefined("integer division with a negative operand");
        if (y == 0) undefined("integer division by zero");
        return Value(BigInt(x / y));
      case BinOp::Mod:
        if (x < 0 || y < 0) undefined("mod with a negative operand");
        if (y == 0) undefined("mod by zero");
        return Value(BigInt(x % y));
      case BinOp::Pow: {
        if (y < 0) undefined("negative exponent");
        BigInt result = 1, base = x, exp = y;
        while (exp > 0) {
          if ((exp & 1) != 0) result *= base;
          base *= base;
          exp >>= 1;
        }
        return Value(result);
      }
      default:
        throw EvalError(EvalErrorKind::TypeError, "unexpected arithmetic operator");
    }
  }

  double tol() const { return s_.assertion_mode ? s_.eps_real : 0.0; }

  bool equal_with_tol(const Value& a, const Value& b) {
    if ((a.is_real() || b.is_real()) && numeric_pair(a, b))
      return std::abs(as_double(a) - as_double(b)) <= tol();
    return value_equal(a, b);
  }

  Value compare(BinOp op, const Value& a, const Value& b) {
    if (op == BinOp::Eq || op == BinOp::Ne) {
      if ((a.is_ref() && !b.is_ref() && !b.is_seq() && !b.is_array()) ||
          (b.is_ref() && !a.is_ref() && !a.is_seq() && !a.is_array()))
        throw EvalError(EvalErrorKind::TypeError, "equality between reference and scalar");
      bool eq;
      // assertion-level lifting: comparing a list reference with a sequence
      // compares the chain's element values
      if ((a.is_ref() && (b.is_seq() || b.is_array())) ||
          (b.is_ref() && (a.is_seq() || a.is_array()))) {
        auto la = lift_to_seq(a, ctx_);
        auto lb = lift_to_seq(b, ctx_);
        eq = la.size() == lb.size();
        for (std::size_t i = 0; eq && i < la.size(); ++i)
          eq = value_equal(la[i], lb[i]);
      } else {
        eq = equal_with_tol(a, b);
      }
      return Value(op == BinOp::Eq ? eq : !eq);
    }
    if (!numeric_pair(a, b))
      throw EvalError(EvalErrorKind::TypeError, "order comparison on non-numbers");
    if (a.is_real() || b.is_real()) {
      double x = as_double(a), y = as_double(b);
      switch (op) {
        case BinOp::Lt: return Value(x < y + tol());
        case BinOp::Le: return Value(x <= y + tol());
        case BinOp::Gt: return Value(x + tol() > y);
        case BinOp::Ge: return Value(x + tol() >= y);
        default: break;
      }
    }
    const BigInt& x = a.as_int();
    const BigInt& y = b.as_int();
    switch (op) {
      case BinOp::Lt: return Value(x < y);
      case BinOp::Le: return Value(x <= y);
      case BinOp::Gt: return Value(x > y);
      case BinOp::Ge: return Value(x >= y);
      default:
        throw EvalError(EvalErrorKind::TypeError, "unexpected comparison");
    }
  }

  Value membership(const Value& item, const Value& container) {
    if (item.is_ref() && container.is_ref()) {
      return Value(bst_contains_node(container.as_ref(), item.as_ref(), ctx_));
    }
    std::vector<Value> elems = lift_to_seq(container, ctx_);
    for (const auto& e : elems)
      if (equal_with_tol(item, e)) return Value(true);
    return Value(false);
  }

  bool truthy(const Expr& e) {
    Value v = eval(e);
    if (!v.is_bool())
      throw EvalError(EvalErrorKind::TypeError,
                      "expected boolean, got " + value_to_text(v));
    return v.as_bool();
  }

  Value eval_node(const Binary& x, const Expr&) {
    switch (x.op) {
      case BinOp::And:
        if (!truthy(*x.lhs)) return Value(false);
        return Value(truthy(*x.rhs));
      case BinOp::Or:
        if (truthy(*x.lhs)) return Value(true);
        return Value(truthy(*x.rhs));
      case BinOp::Implies:
        if (!truthy(*x.lhs)) return Value(true);
        return Value(truthy(*x.rhs));
      case BinOp::Iff: {
        bool l = truthy(*x.lhs);
        bool r = truthy(*x.rhs);
        return Value(l == r);
      }
      case BinOp::Eq: case BinOp::Ne: case BinOp::Lt: case BinOp::Le:
      case BinOp::Gt: case BinOp::Ge:
        return compare(x.op, eval(*x.lhs), eval(*x.rhs));
      case BinOp::In:
        return membership(eval(*x.lhs), eval(*x.rhs));
      default:
        return arith(x.op, eval(*x.lhs), eval(*x.rhs));
    }
  }

  Value eval_node(const MinMax& x, const Expr&) {
    Value a = eval(*x.lhs);
    Value b = eval(*x.rhs);
    if (!numeric_pair(a, b))
      throw EvalError(EvalErrorKind::TypeError, "min/max on non-numbers");
    bool a_less = value_less(a, b);
    if (x.op == MinMaxOp::Min) return a_less ? a : b;
    return a_less ? b : a;
  }

  Value eval_node(const Quant& x, const Expr&) {
    Value lov = eval(*x.lo);
    Value hiv = eval(*x.hi);
    const BigInt& lo = as_bigint(lov, "quantifier bound");
    const BigInt& hi = as_bigint(hiv, "quantifier bound");
    if (hi - lo > kMaxQuantRange) undefined("quantifier range too large");
    bound_.emplace_back(x.var, Value(BigInt(0)));
    struct Pop {
      std::vector<std::pair<std::string, Value>>& b;
      ~Pop() { b.pop_back(); }
    } pop{bound_};
    for (BigInt k = lo; k <= hi; ++k) {
      bound_.back().second = Value(k);
      bool b = truthy(*x.body);
      if (x.kind == QuantKind::Forall && !b) return Value(false);
      if (x.kind == QuantKind::Exists && b) return Value(true);
    }
    return Value(x.kind == QuantKind::Forall);
  }

  Value eval_node(const SliceExpr& x, const Expr&) {
    Value av = eval(*x.array);
    const BigInt& lo_b = as_bigint(eval(*x.lo), "slice bound");
    const BigInt& hi_b = as_bigint(eval(*x.hi), "slice bound");
    long long lo = to_i64(lo_b);
    long long hi = to_i64(hi_b);
    ArrayVal src;
    if (av.is_array()) {
      src = av.as_array();
    } else if (av.is_seq()) {
      src.lower = 1;
      src.elems = av.as_seq().elems;
    } else {
      throw EvalError(EvalErrorKind::TypeError, "slice of a non-array");
    }
    ArrayVal out;
    out.lower = lo;
    if (lo > hi) return Value(out); // empty slice, any bounds
    if (lo < src.lower || hi > src.upper())
      throw EvalError(EvalErrorKind::OutOfBounds,
                      "slice [" + std::to_string(lo) + ".." + std::to_string(hi) +
                          "] outside [" + std::to_string(src.lower) + ".." +
                          std::to_string(src.upper()) + "]");
    for (long long k = lo; k <= hi; ++k) out.elems.push_back(src.at(k));
    return Value(out);
  }

  Value eval_node(const IndexExpr& x, const Expr&) {
    Value av = eval(*x.array);
    const BigInt& ib = as_bigint(eval(*x.index), "index");
    long long i = to_i64(ib);
    if (av.is_array()) return av.as_array().at(i);
    if (av.is_seq()) {
      const auto& elems = av.as_seq().elems;
      if (i < 1 || i > static_cast<long long>(elems.size()))
        throw EvalError(EvalErrorKind::OutOfBounds, "sequence index out of range");
      return elems[static_cast<std::size_t>(i - 1)];
    }
    throw EvalError(EvalErrorKind::TypeError, "indexing a non-array");
  }

  Value eval_node(const FieldExpr& x, const Expr&) {
    Value t = eval(*x.target);
    if (t.is_array()) {
      const auto& a = t.as_array();
      if (x.field == "lower") return Value(BigInt(a.lower));
      if (x.field == "upper") return Value(BigInt(a.upper()));
      if (x.field == "count") return Value(BigInt(a.count()));
      throw EvalError(EvalErrorKind::TypeError, "unknown array field '" + x.field + "'");
    }
    if (t.is_seq()) {
      if (x.field == "count") return Value(BigInt(t.as_seq().elems.size()));
      throw EvalError(EvalErrorKind::TypeError, "unknown sequence field '" + x.field + "'");
    }
    if (t.is_int()) {
      if (x.field == "is_even") return Value((t.as_int() & 1) == 0);
      throw EvalError(EvalErrorKind::TypeError, "unknown integer field '" + x.field + "'");
    }
    if (t.is_bool()) {
      if (x.field == "to_integer") return Value(BigInt(t.as_bool() ? 1 : 0));
      throw EvalError(EvalErrorKind::TypeError, "unknown boolean field '" + x.field + "'");
    }
    if (t.is_ref()) {
      const RefVal& r = t.as_ref();
      if (x.field == "count") {
        auto chain = chain_values(r, ctx_);
        if (!chain) undefined("count of a cyclic chain");
        return Value(BigInt(chain->size()));
      }
      if (r.is_void()) undefined("field '" + x.field + "' of Void");
      const Heap* h = ctx_.heap_for(r);
      if (!h || !h->valid(r)) undefined("dangling reference");
      const HeapRec& rec = h->at(r);
      auto link = [&](RefVal l) {
        l.pre = r.pre;
        return Value(l);
      };
      if (x.field == "value") return rec.value;
      if (x.field == "next") return link(rec.next);
      if (x.field == "left") return link(rec.left);
      if (x.field == "right") return link(rec.right);
      throw EvalError(EvalErrorKind::TypeError, "unknown record field '" + x.field + "'");
    }
    throw EvalError(EvalErrorKind::TypeError, "field access on scalar");
  }

  Value eval_node(const FunApp& x, const Expr&) {
    const TheoryRegistry& reg = s_.registry ? *s_.registry : TheoryRegistry::standard();
    if (!reg.has(x.symbol, static_cast<int>(x.args.size())))
      undefined("unknown function symbol '" + x.symbol + "/" +
                std::to_string(x.args.size()) + "'");
    std::vector<Value> args;
    args.reserve(x.args.size());
    for (const auto& a : x.args) args.push_back(eval(*a));
    return reg.call(x.symbol, args, ctx_);
  }

  const EvalScope& s_;
  TheoryCtx ctx_;
  std::vector<std::pair<std::string, Value>> bound_;
  bool in_old_ = false;
};

} // namespace

Value evaluate(const Expr& e, const EvalScope& scope) {
  Evaluator ev(scope);
  return ev.eval(e);
}

TruthResult check_assertion(const Expr& e, const EvalScope& scope) {
  try {
    Value v = evaluate(e, scope);
    if (!v.is_bool()) return {Truth::Undefined, "assertion is not boolean"};
    return {v.as_bool() ? Truth::True : Truth::False, ""};
  } catch (const EvalError& err) {
    return {Truth::Undefined, err.what()};
  }
}

namespace {

std::string fresh_name(const std::string& base, const std::set<std::string>& taken) {
  if (!taken.count(base)) return base;
  for (int i = 1;; ++i) {
    std::string name = base + std::to_string(i);
    if (!taken.count(name)) return name;
  }
}

ExprPtr subst(const ExprPtr& e, const std::string& var, const ExprPtr& repl,
              const std::set<std::string>& repl_free);

ExprPtr subst_node(const ExprPtr& e, const std::string& var, const ExprPtr& repl,
                   const std::set<std::string>& repl_free) {
  return std::visit(
      [&](const auto& x) -> ExprPtr {
        using T = std::decay_t<decltype(x)>;
        auto go = [&](const ExprPtr& c) { return subst(c, var, repl, repl_free); };
        if constexpr (std::is_same_v<T, VarRef>) {
          return x.name == var ? repl : e;
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          return mk::old(go(x.expr));
        } else if constexpr (std::is_same_v<T, Unary>) {
          return mk::unary(x.op, go(x.operand));
        } else if constexpr (std::is_same_v<T, Binary>) {
          return mk::binary(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return mk::minmax(x.op, go(x.lhs), go(x.rhs));
        } else if constexpr (std::is_same_v<T, Quant>) {
          ExprPtr lo = go(x.lo);
          ExprPtr hi = go(x.hi);
          if (x.var == var) {
            // bound occurrence shadows the substituted variable
            return mk::quant(x.kind, x.var, lo, hi, x.body);
          }
          if (repl_free.count(x.var)) {
            // rename the bound variable to avoid capture
            std::set<std::string> taken = repl_free;
            for (const auto& v : free_vars(*x.body)) taken.insert(v);
            taken.insert(var);
            std::string nv = fresh_name(x.var, taken);
            ExprPtr renamed_body =
                subst(x.body, x.var, mk::var(nv), std::set<std::string>{nv});
            return mk::quant(x.kind, nv, lo, hi,
                             subst(renamed_body, var, repl, repl_free));
          }
          return mk::quant(x.kind, x.var, lo, hi, go(x.body));
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
          return e; // literals
        }
      },
      e->node);
}

ExprPtr subst(const ExprPtr& e, const std::string& var, const ExprPtr& repl,
              const std::set<std::string>& repl_free) {
  // fast path: nothing to do if var is not free in e
  auto fv = free_vars(*e);
  if (std::find(fv.begin(), fv.end(), var) == fv.end()) return e;
  return subst_node(e, var, repl, repl_free);
}

} // namespace

ExprPtr substitute(const ExprPtr& e, const std::string& var, const ExprPtr& replacement) {
  std::set<std::string> repl_free;
  for (const auto& v : free_vars(*replacement)) repl_free.insert(v);
  return subst(e, var, replacement, repl_free);
}

namespace {

bool is_bound_field(const FieldExpr& f) {
  return f.field == "lower" || f.field == "upper" || f.field == "count";
}

void collect_constants(const ExprPtr& e, const std::set<std::string>& assigned,
                       std::set<std::string>& bound, std::vector<ExprPtr>& out,
                       std::set<std::string>& seen) {
  auto push = [&](const ExprPtr& c, const std::string& key) {
    if (seen.insert(key).second) out.push_back(c);
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        auto rec = [&](const ExprPtr& c) {
          collect_constants(c, assigned, bound, out, seen);
        };
        if constexpr (std::is_same_v<T, IntLit>) {
          push(e, "#" + x.value.str());
        } else if constexpr (std::is_same_v<T, RealLit>) {
          push(e, "#r" + std::to_string(x.value));
        } else if constexpr (std::is_same_v<T, VoidLit>) {
          push(e, "#Void");
        } else if constexpr (std::is_same_v<T, VarRef>) {
          if (!assigned.count(x.name) && !bound.count(x.name)) push(e, "v" + x.name);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          const auto* v = std::get_if<VarRef>(&x.target->node);
          if (v && is_bound_field(x) && !assigned.count(v->name) && !bound.count(v->name)) {
            push(e, "f" + v->name + "." + x.field);
          }
          rec(x.target);
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          rec(x.expr);
        } else if constexpr (std::is_same_v<T, Unary>) {
          rec(x.operand);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          rec(x.lhs);
          rec(x.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          rec(x.lo);
          rec(x.hi);
          bool inserted = bound.insert(x.var).second;
          rec(x.body);
          if (inserted) bound.erase(x.var);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          rec(x.array);
          rec(x.lo);
          rec(x.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          rec(x.array);
          rec(x.index);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args) rec(a);
        }
      },
      e->node);
}

} // namespace

std::vector<ExprPtr> free_constants(const Expr& e, const std::vector<std::string>& assigned) {
  std::set<std::string> aset(assigned.begin(), assigned.end());
  std::set<std::string> bound, seen;
  std::vector<ExprPtr> out;
  auto ep = std::make_shared<Expr>(e);
  collect_constants(ep, aset, bound, out, seen);
  return out;
}

std::vector<ExprPtr> free_constants(const Expr& e, const Routine& routine) {
  auto loops = top_level_loops(routine);
  std::vector<std::string> assigned;
  if (!loops.empty()) assigned = assigned_vars(loops.front()->body);
  return free_constants(e, assigned);
}

} // namespace invwb
