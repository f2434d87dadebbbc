#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "invwb/ast.hpp"

namespace invwb {

enum class SemType { Int, Real, Bool, IntArray, RealArray, SetArray, Matrix, ListRef, NodeRef };

bool is_ref_type(SemType t);
bool is_array_type(SemType t);
std::string sem_type_name(SemType t);

struct VarDecl {
  std::string name;
  SemType type = SemType::Int;
};

enum class ClauseTag { Untagged, Essential, Bounding };

struct AnnotatedClause {
  ExprPtr expr;
  ClauseTag tag = ClauseTag::Untagged;
  // Candidate clauses carry the generating candidate's id; gold clauses -1.
  int candidate_id = -1;
};

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

/// Assignment target: variable, (possibly nested) array element, or record field.
struct LValue {
  std::string var;
  std::vector<ExprPtr> indices; // nested element path, empty for plain variable
  std::string field;            // non-empty for `x.next := ...` style targets
};

struct AssignStmt { LValue target; ExprPtr value; };
struct IfStmt {
  ExprPtr cond;
  std::vector<StmtPtr> then_branch;
  std::vector<StmtPtr> else_branch;
};
struct LoopStmt {
  int loop_id = 0;              // assigned in parse order within the routine
  SourcePos pos;
  std::vector<StmtPtr> init;
  std::vector<AnnotatedClause> invariant;
  ExprPtr exit;
  ExprPtr variant;              // may be null only for desugared loops that lost theirs
  std::vector<StmtPtr> body;
  bool from_across = false;     // true when desugared from an `across` loop
  std::string across_iterator;  // iterator name when from_across
};
struct SwapStmt { std::string array; ExprPtr i; ExprPtr j; };
struct NewStmt { std::string var; ExprPtr value; }; // x := new (v): fresh heap record

using StmtNode = std::variant<AssignStmt, IfStmt, LoopStmt, SwapStmt, NewStmt>;

struct Stmt {
  StmtNode node;
  SourcePos pos;
};

struct Routine {
  std::string name;
  std::vector<VarDecl> params;
  std::vector<VarDecl> outputs; // empty: procedure; ["Result"]: function; several: named outputs
  std::vector<VarDecl> locals;
  std::vector<AnnotatedClause> precondition;
  std::vector<StmtPtr> body;
  std::vector<AnnotatedClause> postcondition;

  int loop_count = 0;

  bool is_function() const { return outputs.size() == 1 && outputs[0].name == "Result"; }
  const VarDecl* find_var(const std::string& name) const;
  bool declares(const std::string& name) const { return find_var(name) != nullptr; }
};

/// Variables assigned anywhere in the statement list (assignments, swaps,
/// across iterators; a field assignment marks the record variable since the
/// heap it denotes changes).
std::vector<std::string> assigned_vars(const std::vector<StmtPtr>& stmts);

/// The top-level loops of a routine's body, in source order.
std::vector<const LoopStmt*> top_level_loops(const Routine& r);

/// All loops in the routine (preorder), indexed by loop_id.
std::vector<const LoopStmt*> all_loops(const Routine& r);

/// Statements after the last top-level loop (the backward-reasoning tail).
std::vector<StmtPtr> trailing_stmts(const Routine& r);

} // namespace invwb
