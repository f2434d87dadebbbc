#include "invwb/routine.hpp"

#include <functional>
#include <set>

namespace invwb {

bool is_ref_type(SemType t) { return t == SemType::ListRef || t == SemType::NodeRef; }

bool is_array_type(SemType t) {
  return t == SemType::IntArray || t == SemType::RealArray || t == SemType::SetArray ||
         t == SemType::Matrix;
}

std::string sem_type_name(SemType t) {
  switch (t) {
    case SemType::Int: return "INTEGER";
    case SemType::Real: return "REAL";
    case SemType::Bool: return "BOOLEAN";
    case SemType::IntArray: return "ARRAY [INTEGER]";
    case SemType::RealArray: return "ARRAY [REAL]";
    case SemType::SetArray: return "ARRAY [SET [INTEGER]]";
    case SemType::Matrix: return "MATRIX";
    case SemType::ListRef: return "LIST";
    case SemType::NodeRef: return "NODE";
  }
  return "?";
}

const VarDecl* Routine::find_var(const std::string& name) const {
  for (const auto& v : params)
    if (v.name == name) return &v;
  for (const auto& v : outputs)
    if (v.name == name) return &v;
  for (const auto& v : locals)
    if (v.name == name) return &v;
  return nullptr;
}

namespace {

void collect_assigned(const std::vector<StmtPtr>& stmts, std::set<std::string>& seen,
                      std::vector<std::string>& out) {
  auto add = [&](const std::string& name) {
    if (seen.insert(name).second) out.push_back(name);
  };
  for (const auto& sp : stmts) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, AssignStmt>) {
            add(s.target.var);
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            collect_assigned(s.then_branch, seen, out);
            collect_assigned(s.else_branch, seen, out);
          } else if constexpr (std::is_same_v<T, LoopStmt>) {
            collect_assigned(s.init, seen, out);
            collect_assigned(s.body, seen, out);
          } else if constexpr (std::is_same_v<T, SwapStmt>) {
            add(s.array);
          } else if constexpr (std::is_same_v<T, NewStmt>) {
            add(s.var);
          }
        },
        sp->node);
  }
}

void collect_loops(const std::vector<StmtPtr>& stmts, std::vector<const LoopStmt*>& out,
                   bool recurse) {
  for (const auto& sp : stmts) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LoopStmt>) {
            out.push_back(&s);
            if (recurse) {
              collect_loops(s.init, out, true);
              collect_loops(s.body, out, true);
            }
          } else if constexpr (std::is_same_v<T, IfStmt>) {
            collect_loops(s.then_branch, out, recurse);
            collect_loops(s.else_branch, out, recurse);
          }
        },
        sp->node);
  }
}

} // namespace

std::vector<std::string> assigned_vars(const std::vector<StmtPtr>& stmts) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  collect_assigned(stmts, seen, out);
  return out;
}

std::vector<const LoopStmt*> top_level_loops(const Routine& r) {
  std::vector<const LoopStmt*> out;
  collect_loops(r.body, out, false);
  return out;
}

std::vector<const LoopStmt*> all_loops(const Routine& r) {
  std::vector<const LoopStmt*> out;
  collect_loops(r.body, out, true);
  return out;
}

std::vector<StmtPtr> trailing_stmts(const Routine& r) {
  std::size_t last_loop = r.body.size();
  for (std::size_t i = 0; i < r.body.size(); ++i) {
    if (std::holds_alternative<LoopStmt>(r.body[i]->node)) last_loop = i;
  }
  if (last_loop == r.body.size()) return {};
  return std::vector<StmtPtr>(r.body.begin() + last_loop + 1, r.body.end());
}

} // namespace invwb
