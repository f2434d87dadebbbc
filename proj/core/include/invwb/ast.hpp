#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "invwb/bigint.hpp"

namespace invwb {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct SourcePos {
  int line = 0;
  int column = 0;
};

enum class BinOp {
  Add, Sub, Mul, RealDiv, IntDiv, Mod, Pow,
  Eq, Ne, Lt, Le, Gt, Ge, In,
  And, Or, Implies, Iff,
};

enum class UnOp { Neg, Not };
enum class MinMaxOp { Min, Max };
enum class QuantKind { Forall, Exists };

struct IntLit { BigInt value; };
struct RealLit { double value; };
struct BoolLit { bool value; };
struct VoidLit {};
struct VarRef { std::string name; };
struct OldExpr { ExprPtr expr; };
struct Unary { UnOp op; ExprPtr operand; };
struct Binary { BinOp op; ExprPtr lhs; ExprPtr rhs; };
struct MinMax { MinMaxOp op; ExprPtr lhs; ExprPtr rhs; };
struct Quant { QuantKind kind; std::string var; ExprPtr lo; ExprPtr hi; ExprPtr body; };
struct SliceExpr { ExprPtr array; ExprPtr lo; ExprPtr hi; };
struct IndexExpr { ExprPtr array; ExprPtr index; };
struct FieldExpr { ExprPtr target; std::string field; };
struct FunApp { std::string symbol; std::vector<ExprPtr> args; };

using ExprNode = std::variant<IntLit, RealLit, BoolLit, VoidLit, VarRef, OldExpr,
                              Unary, Binary, MinMax, Quant, SliceExpr, IndexExpr,
                              FieldExpr, FunApp>;

struct Expr {
  ExprNode node;
  SourcePos pos;
};

namespace mk {

ExprPtr int_lit(BigInt v);
ExprPtr int_lit(long long v);
ExprPtr real_lit(double v);
ExprPtr bool_lit(bool v);
ExprPtr void_lit();
ExprPtr var(std::string name);
ExprPtr old(ExprPtr e);
ExprPtr unary(UnOp op, ExprPtr e);
ExprPtr binary(BinOp op, ExprPtr l, ExprPtr r);
ExprPtr minmax(MinMaxOp op, ExprPtr l, ExprPtr r);
ExprPtr quant(QuantKind k, std::string var, ExprPtr lo, ExprPtr hi, ExprPtr body);
ExprPtr slice(ExprPtr a, ExprPtr lo, ExprPtr hi);
ExprPtr index(ExprPtr a, ExprPtr i);
ExprPtr field(ExprPtr t, std::string name);
ExprPtr fun(std::string symbol, std::vector<ExprPtr> args);

} // namespace mk

bool structurally_equal(const Expr& a, const Expr& b);
inline bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  return structurally_equal(*a, *b);
}

/// Free (non-quantifier-bound) variable names of an expression.
std::vector<std::string> free_vars(const Expr& e);

/// True if the expression contains an `old` node anywhere.
bool contains_old(const Expr& e);

/// Node count (used for derivation size bookkeeping).
std::size_t node_count(const Expr& e);

} // namespace invwb
