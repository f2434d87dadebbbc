#include "invwb/ast.hpp"

#include <algorithm>
#include <set>

namespace invwb {

namespace mk {

static ExprPtr wrap(ExprNode n) {
  return std::make_shared<Expr>(Expr{std::move(n), SourcePos{}});
}

ExprPtr int_lit(BigInt v) { return wrap(IntLit{std::move(v)}); }
ExprPtr int_lit(long long v) { return wrap(IntLit{BigInt(v)}); }
ExprPtr real_lit(double v) { return wrap(RealLit{v}); }
ExprPtr bool_lit(bool v) { return wrap(BoolLit{v}); }
ExprPtr void_lit() { return wrap(VoidLit{}); }
ExprPtr var(std::string name) { return wrap(VarRef{std::move(name)}); }
ExprPtr old(ExprPtr e) { return wrap(OldExpr{std::move(e)}); }
ExprPtr unary(UnOp op, ExprPtr e) { return wrap(Unary{op, std::move(e)}); }
ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r) {
  return wrap(Binary{op, std::move(l), std::move(r)});
}
ExprPtr minmax(MinMaxOp op, ExprPtr l, ExprPtr r) {
  return wrap(MinMax{op, std::move(l), std::move(r)});
}
ExprPtr quant(QuantKind k, std::string v, ExprPtr lo, ExprPtr hi, ExprPtr body) {
  return wrap(Quant{k, std::move(v), std::move(lo), std::move(hi), std::move(body)});
}
ExprPtr slice(ExprPtr a, ExprPtr lo, ExprPtr hi) {
  return wrap(SliceExpr{std::move(a), std::move(lo), std::move(hi)});
}
ExprPtr index(ExprPtr a, ExprPtr i) { return wrap(IndexExpr{std::move(a), std::move(i)}); }
ExprPtr field(ExprPtr t, std::string name) {
  return wrap(FieldExpr{std::move(t), std::move(name)});
}
ExprPtr fun(std::string symbol, std::vector<ExprPtr> args) {
  return wrap(FunApp{std::move(symbol), std::move(args)});
}

} // namespace mk

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, IntLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, RealLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, VoidLit>) {
          return true;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          return structurally_equal(*x.expr, *y.expr);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && structurally_equal(*x.operand, *y.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) &&
                 structurally_equal(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, MinMax>) {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) &&
                 structurally_equal(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          return x.kind == y.kind && x.var == y.var &&
                 structurally_equal(*x.lo, *y.lo) && structurally_equal(*x.hi, *y.hi) &&
                 structurally_equal(*x.body, *y.body);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          return structurally_equal(*x.array, *y.array) &&
                 structurally_equal(*x.lo, *y.lo) && structurally_equal(*x.hi, *y.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          return structurally_equal(*x.array, *y.array) &&
                 structurally_equal(*x.index, *y.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          return x.field == y.field && structurally_equal(*x.target, *y.target);
        } else {
          static_assert(std::is_same_v<T, FunApp>);
          const FunApp& fa = x;
          const FunApp& fb = std::get<FunApp>(b.node);
          if (fa.symbol != fb.symbol || fa.args.size() != fb.args.size()) return false;
          for (std::size_t i = 0; i < fa.args.size(); ++i)
            if (!structurally_equal(*fa.args[i], *fb.args[i])) return false;
          return true;
        }
      },
      a.node);
}

static void collect_free(const Expr& e, std::set<std::string>& bound,
                         std::vector<std::string>& out, std::set<std::string>& seen) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, VarRef>) {
          if (!bound.count(x.name) && seen.insert(x.name).second) out.push_back(x.name);
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          collect_free(*x.expr, bound, out, seen);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect_free(*x.operand, bound, out, seen);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          collect_free(*x.lhs, bound, out, seen);
          collect_free(*x.rhs, bound, out, seen);
        } else if constexpr (std::is_same_v<T, Quant>) {
          collect_free(*x.lo, bound, out, seen);
          collect_free(*x.hi, bound, out, seen);
          bool inserted = bound.insert(x.var).second;
          collect_free(*x.body, bound, out, seen);
          if (inserted) bound.erase(x.var);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          collect_free(*x.array, bound, out, seen);
          collect_free(*x.lo, bound, out, seen);
          collect_free(*x.hi, bound, out, seen);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          collect_free(*x.array, bound, out, seen);
          collect_free(*x.index, bound, out, seen);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          collect_free(*x.target, bound, out, seen);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args) collect_free(*a, bound, out, seen);
        }
      },
      e.node);
}

std::vector<std::string> free_vars(const Expr& e) {
  std::set<std::string> bound, seen;
  std::vector<std::string> out;
  collect_free(e, bound, out, seen);
  return out;
}

bool contains_old(const Expr& e) {
  bool found = false;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, OldExpr>) {
          found = true;
        } else if constexpr (std::is_same_v<T, Unary>) {
          found = contains_old(*x.operand);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          found = contains_old(*x.lhs) || contains_old(*x.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          found = contains_old(*x.lo) || contains_old(*x.hi) || contains_old(*x.body);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          found = contains_old(*x.array) || contains_old(*x.lo) || contains_old(*x.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          found = contains_old(*x.array) || contains_old(*x.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          found = contains_old(*x.target);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args)
            if (contains_old(*a)) { found = true; break; }
        }
      },
      e.node);
  return found;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, OldExpr>) {
          n += node_count(*x.expr);
        } else if constexpr (std::is_same_v<T, Unary>) {
          n += node_count(*x.operand);
        } else if constexpr (std::is_same_v<T, Binary> || std::is_same_v<T, MinMax>) {
          n += node_count(*x.lhs) + node_count(*x.rhs);
        } else if constexpr (std::is_same_v<T, Quant>) {
          n += node_count(*x.lo) + node_count(*x.hi) + node_count(*x.body);
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          n += node_count(*x.array) + node_count(*x.lo) + node_count(*x.hi);
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          n += node_count(*x.array) + node_count(*x.index);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          n += node_count(*x.target);
        } else if constexpr (std::is_same_v<T, FunApp>) {
          for (const auto& a : x.args) n += node_count(*a);
        }
      },
      e.node);
  return n;
}

} // namespace invwb
