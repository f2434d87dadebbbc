#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invwb/eval.hpp"
#include "invwb/routine.hpp"
#include "invwb/value.hpp"

namespace invwb {

using Json = nlohmann::ordered_json;

/// Mutable program state owned by exactly one execution.
struct ExecState {
  Env env;
  Heap heap;
  Env pre_env;
  Heap pre_heap;
  Memo memo;
};

enum class CheckMode { None, Gold, Candidates, Both };

enum class Obligation {
  Precondition,
  Initiation,
  Consecution,
  VariantNonneg,
  VariantDecrease,
  VariantReal, // real-valued variant: non-increase instead of strict decrease
  ExitInvariant,
  Postcondition,
  Divergence,
  RuntimeError,
};

std::string obligation_name(Obligation o);

enum class VerdictStatus { Pass, Fail, Undef };
std::string verdict_status_name(VerdictStatus s);

struct ClauseResult {
  int index = 0;
  std::string clause;
  VerdictStatus status = VerdictStatus::Pass;
  std::string detail;
  int candidate_id = -1;
};

struct Verdict {
  Obligation obligation;
  VerdictStatus status = VerdictStatus::Pass;
  int loop_id = -1;  // -1 for routine-level obligations
  int loop_entry = 0; // nth dynamic entry into that loop
  long long iteration = 0;
  std::vector<ClauseResult> clauses;
  std::string detail;
  int snapshot_id = -1;
};

struct Snapshot {
  int id = 0;
  std::map<std::string, std::string> vars;
};

struct LoopTrace {
  int loop_id = 0;
  int entry = 0;
  long long body_iterations = 0;
  bool real_mode = false;
  std::vector<std::string> variant_values; // value before each body execution, then after the last
};

struct RunResult {
  std::optional<Value> result;            // function-style routines
  std::map<std::string, Value> outputs;   // named outputs / final parameter values
};

struct CheckReport {
  std::string routine;
  std::vector<Verdict> verdicts;
  std::vector<Snapshot> snapshots;
  std::vector<LoopTrace> loops;
  long long total_iterations = 0;
  bool aborted = false;

  bool all_pass() const;
  const Verdict* first_failure() const;
};

/// Checkpoint observer for batched candidate filtering: called wherever the
/// loop invariant is (re)checked. `eval_clause` evaluates an assertion in the
/// current state. Returning false aborts the run early (everything dead).
struct CheckpointHook {
  std::function<bool(Obligation ob, int loop_id, long long iteration,
                     const std::function<TruthResult(const Expr&)>& eval_clause)>
      on_checkpoint;
};

struct RunOptions {
  CheckMode mode = CheckMode::Gold;
  long long iteration_cap = 1'000'000;
  double eps_real = 1e-9;
  // Candidate clauses per loop_id, used in Candidates/Both modes.
  std::map<int, std::vector<AnnotatedClause>> candidate_clauses;
  // Only this loop is checked/observed when set (inference targets one loop).
  std::optional<int> focus_loop;
  CheckpointHook* hook = nullptr;
  const TheoryRegistry* registry = nullptr; // defaults to TheoryRegistry::standard()
};

/// Execute the routine with the given argument values bound to parameters
/// (heap-backed arguments must already live in `state`'s heap), dynamically
/// checking every loop proof obligation. Obligation failures are recorded,
/// not thrown; runtime errors become undefined verdicts and abort the run.
std::pair<RunResult, CheckReport> run_checked(const Routine& r,
                                              const std::vector<Value>& args,
                                              ExecState& state,
                                              const RunOptions& opts = {});

/// Aggregated variant well-formedness for one loop of a report: confirms the
/// variant stayed nonnegative on body entry and strictly decreased across
/// each body execution (or reports real-mode when the variant is real-valued).
struct VariantVerdict {
  bool executed = false;
  bool real_mode = false;
  bool ok = true;
  std::string detail;
};
VariantVerdict check_variant_wellformed(const CheckReport& report, int loop_id);

/// Human-readable narrative for the first failing verdict: names the
/// obligation, the clause, the iteration, and the values of the variables
/// appearing in the clause. Throws std::invalid_argument on an all-pass report.
std::string explain_failure(const CheckReport& report);

Json report_to_json(const CheckReport& report);

} // namespace invwb
