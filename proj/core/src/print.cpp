#include "invwb/print.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace invwb {

namespace {

// Precedence levels, loosest to tightest. Quantifier bodies swallow
// everything to their right, so a quantifier in operand position needs parens.
enum Prec {
  kQuant = 0,
  kIff = 1,
  kImplies = 2,
  kOr = 3,
  kAnd = 4,
  kNot = 5,
  kCmp = 6,
  kCat = 7,
  kAdd = 8,
  kMul = 9,
  kUnary = 10,
  kPow = 11,
  kPrimary = 12,
};

enum class Assoc { Left, Right, None };

struct OpInfo {
  const char* text;
  int prec;
  Assoc assoc;
};

OpInfo op_info(BinOp op) {
  switch (op) {
    case BinOp::Add: return {"+", kAdd, Assoc::Left};
    case BinOp::Sub: return {"-", kAdd, Assoc::Left};
    case BinOp::Mul: return {"*", kMul, Assoc::Left};
    case BinOp::RealDiv: return {"/", kMul, Assoc::Left};
    case BinOp::IntDiv: return {"//", kMul, Assoc::Left};
    case BinOp::Mod: return {"mod", kMul, Assoc::Left};
    case BinOp::Pow: return {"^", kPow, Assoc::Right};
    case BinOp::Eq: return {"=", kCmp, Assoc::None};
    case BinOp::Ne: return {"/=", kCmp, Assoc::None};
    case BinOp::Lt: return {"<", kCmp, Assoc::None};
    case BinOp::Le: return {"<=", kCmp, Assoc::None};
    case BinOp::Gt: return {">", kCmp, Assoc::None};
    case BinOp::Ge: return {">=", kCmp, Assoc::None};
    case BinOp::In: return {"in", kCmp, Assoc::None};
    case BinOp::And: return {"and", kAnd, Assoc::Left};
    case BinOp::Or: return {"or", kOr, Assoc::Left};
    case BinOp::Implies: return {"implies", kImplies, Assoc::Right};
    case BinOp::Iff: return {"iff", kIff, Assoc::Left};
  }
  return {"?", kCmp, Assoc::None};
}

std::string real_text(double v) {
  if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
    // keep a decimal point so the literal reparses as a real
    return std::to_string(static_cast<long long>(v)) + ".0";
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void emit(const Expr& e, int min_prec, std::string& out);

void emit_paren(const Expr& e, int prec, int min_prec, std::string& out) {
  bool need = prec < min_prec;
  if (need) out += "(";
  emit(e, need ? 0 : min_prec, out);
  if (need) out += ")";
}

// Collapse nested Index nodes into the multi-index bracket form d [i, j].
bool emit_index(const Expr& e, std::string& out) {
  const auto* idx = std::get_if<IndexExpr>(&e.node);
  if (!idx) return false;
  std::vector<const Expr*> indices;
  const Expr* base = &e;
  while (const auto* n = std::get_if<IndexExpr>(&base->node)) {
    indices.push_back(n->index.get());
    base = n->array.get();
  }
  std::string b;
  emit_paren(*base, kPrimary, kPrimary, b);
  out += b;
  out += " [";
  for (auto it = indices.rbegin(); it != indices.rend(); ++it) {
    if (it != indices.rbegin()) out += ", ";
    emit(**it, 0, out);
  }
  out += "]";
  return true;
}

void emit(const Expr& e, int min_prec, std::string& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntLit>) {
          out += x.value.str();
        } else if constexpr (std::is_same_v<T, RealLit>) {
          out += real_text(x.value);
        } else if constexpr (std::is_same_v<T, BoolLit>) {
          out += x.value ? "true" : "false";
        } else if constexpr (std::is_same_v<T, VoidLit>) {
          out += "Void";
        } else if constexpr (std::is_same_v<T, VarRef>) {
          out += x.name;
        } else if constexpr (std::is_same_v<T, OldExpr>) {
          bool need = kUnary < min_prec;
          if (need) out += "(";
          out += "old ";
          emit_paren(*x.expr, kUnary, kUnary, out);
          if (need) out += ")";
        } else if constexpr (std::is_same_v<T, Unary>) {
          int prec = x.op == UnOp::Not ? kNot : kUnary;
          bool need = prec < min_prec;
          if (need) out += "(";
          out += x.op == UnOp::Not ? "not " : "-";
          emit_paren(*x.operand, prec, prec, out);
          if (need) out += ")";
        } else if constexpr (std::is_same_v<T, Binary>) {
          OpInfo info = op_info(x.op);
          bool need = info.prec < min_prec;
          if (need) out += "(";
          int lmin = info.assoc == Assoc::Left ? info.prec : info.prec + 1;
          int rmin = info.assoc == Assoc::Right ? info.prec : info.prec + 1;
          std::string l, r;
          emit(*x.lhs, lmin, l);
          emit(*x.rhs, rmin, r);
          out += l;
          out += " ";
          out += info.text;
          out += " ";
          out += r;
          if (need) out += ")";
        } else if constexpr (std::is_same_v<T, MinMax>) {
          out += x.op == MinMaxOp::Min ? "min (" : "max (";
          emit(*x.lhs, 0, out);
          out += ", ";
          emit(*x.rhs, 0, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, Quant>) {
          bool need = kQuant < min_prec;
          if (need) out += "(";
          out += x.kind == QuantKind::Forall ? "forall " : "exists ";
          out += x.var;
          out += " in [";
          emit(*x.lo, 0, out);
          out += "..";
          emit(*x.hi, 0, out);
          out += "]: ";
          emit(*x.body, 0, out);
          if (need) out += ")";
        } else if constexpr (std::is_same_v<T, SliceExpr>) {
          emit_paren(*x.array, kPrimary, kPrimary, out);
          out += " [";
          emit(*x.lo, 0, out);
          out += "..";
          emit(*x.hi, 0, out);
          out += "]";
        } else if constexpr (std::is_same_v<T, IndexExpr>) {
          emit_index(e, out);
        } else if constexpr (std::is_same_v<T, FieldExpr>) {
          emit_paren(*x.target, kPrimary, kPrimary, out);
          out += ".";
          out += x.field;
        } else {
          static_assert(std::is_same_v<T, FunApp>);
          if (x.symbol == "cat" && x.args.size() == 2) {
            bool need = kCat < min_prec;
            if (need) out += "(";
            emit(*x.args[0], kCat, out);
            out += " catOp ";
            emit(*x.args[1], kCat + 1, out);
            if (need) out += ")";
            return;
          }
          out += x.symbol;
          out += " (";
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (i) out += ", ";
            emit(*x.args[i], 0, out);
          }
          out += ")";
        }
      },
      e.node);
}

void emit_clauses(const std::vector<AnnotatedClause>& clauses, int indent,
                  std::string& out) {
  std::string pad(indent, ' ');
  for (const auto& c : clauses) {
    out += pad;
    if (c.tag == ClauseTag::Essential) out += "essential: ";
    if (c.tag == ClauseTag::Bounding) out += "bounding: ";
    out += print_expr(*c.expr);
    out += "\n";
  }
}

void emit_stmts(const std::vector<StmtPtr>& stmts, int indent, std::string& out);

void emit_one(const Stmt& s, int indent, std::string& out) {
  std::string pad(indent, ' ');
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, AssignStmt>) {
          out += pad;
          out += x.target.var;
          for (const auto& ix : x.target.indices) {
            out += " [";
            out += print_expr(*ix);
            out += "]";
          }
          if (!x.target.field.empty()) {
            out += ".";
            out += x.target.field;
          }
          out += " := ";
          out += print_expr(*x.value);
          out += "\n";
        } else if constexpr (std::is_same_v<T, IfStmt>) {
          out += pad + "if " + print_expr(*x.cond) + " then\n";
          emit_stmts(x.then_branch, indent + 2, out);
          if (!x.else_branch.empty()) {
            out += pad + "else\n";
            emit_stmts(x.else_branch, indent + 2, out);
          }
          out += pad + "end\n";
        } else if constexpr (std::is_same_v<T, LoopStmt>) {
          out += pad + "from\n";
          emit_stmts(x.init, indent + 2, out);
          out += pad + "invariant\n";
          emit_clauses(x.invariant, indent + 2, out);
          out += pad + "until\n" + std::string(indent + 2, ' ') + print_expr(*x.exit) + "\n";
          if (x.variant) {
            out += pad + "variant\n" + std::string(indent + 2, ' ') + print_expr(*x.variant) + "\n";
          }
          out += pad + "loop\n";
          emit_stmts(x.body, indent + 2, out);
          out += pad + "end\n";
        } else if constexpr (std::is_same_v<T, SwapStmt>) {
          out += pad + x.array + ".swap (" + print_expr(*x.i) + ", " + print_expr(*x.j) + ")\n";
        } else {
          static_assert(std::is_same_v<T, NewStmt>);
          out += pad + x.var + " := new (" + print_expr(*x.value) + ")\n";
        }
      },
      s.node);
}

void emit_stmts(const std::vector<StmtPtr>& stmts, int indent, std::string& out) {
  for (const auto& s : stmts) emit_one(*s, indent, out);
}

void emit_decls(const std::vector<VarDecl>& decls, std::string& out) {
  for (std::size_t i = 0; i < decls.size(); ++i) {
    if (i) out += "; ";
    out += decls[i].name + ": " + sem_type_name(decls[i].type);
  }
}

} // namespace

std::string print_expr(const Expr& e) {
  std::string out;
  emit(e, 0, out);
  return out;
}

std::string print_stmt(const Stmt& s, int indent) {
  std::string out;
  emit_one(s, indent, out);
  return out;
}

std::string print_routine(const Routine& r) {
  std::string out = r.name + " (";
  emit_decls(r.params, out);
  out += ")";
  if (r.is_function()) {
    out += ": " + sem_type_name(r.outputs[0].type);
  } else if (!r.outputs.empty()) {
    out += ": (";
    emit_decls(r.outputs, out);
    out += ")";
  }
  out += "\n  require\n";
  emit_clauses(r.precondition, 4, out);
  if (!r.locals.empty()) {
    out += "  local\n    ";
    emit_decls(r.locals, out);
    out += "\n";
  }
  out += "  do\n";
  emit_stmts(r.body, 4, out);
  out += "  ensure\n";
  emit_clauses(r.postcondition, 4, out);
  out += "  end\n";
  return out;
}

} // namespace invwb
