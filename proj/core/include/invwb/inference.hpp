#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "invwb/engine.hpp"
#include "invwb/mutation.hpp"
#include "invwb/routine.hpp"
#include "invwb/value.hpp"

namespace invwb {

// ---- Input generation ----

struct TreeShape {
  BigInt value;
  std::shared_ptr<TreeShape> left, right;
};

struct ListShape {
  std::vector<BigInt> values;
};

/// One argument of an input tuple: a plain value or a heap shape that the
/// runner materializes into the execution heap.
using ArgShape = std::variant<Value, ListShape, std::shared_ptr<TreeShape>>;

struct InputTuple {
  std::vector<ArgShape> args;
};

nlohmann::ordered_json input_to_json(const InputTuple& t);
InputTuple input_from_json(const nlohmann::ordered_json& j);

/// Materialize a tuple: heap shapes are allocated into `state.heap` and the
/// resulting argument values are returned in parameter order.
std::vector<Value> materialize_input(const InputTuple& t, ExecState& state);

/// Per-parameter generation policy. Couplings refer to other parameters by
/// name (equal lengths, digit bounds from a base parameter, graph pairs).
struct ParamPolicy {
  std::string kind; // int | real_const | array | digits | list | bst | graph_reaching | graph_outbound | pivot_of | len_of
  long long int_min = 0, int_max = 0;
  double real_value = 0.0;
  long long len_min = 0, len_max = 8;
  long long val_min = -10, val_max = 10;
  long long array_lower = 1;
  bool sorted = false;
  std::string ref_param; // coupled parameter (len_of, pivot_of, digits base, graph pair)
};

struct GenPolicy {
  std::map<std::string, ParamPolicy> params;
  long long graph_nodes_min = 1, graph_nodes_max = 10;
};

struct InputSuite {
  std::string routine;
  std::uint64_t seed = 0;
  std::vector<InputTuple> tuples;
};

/// Deterministic given the seed; starts with the mandatory edge tuples the
/// precondition admits (empty range, singleton, equal elements, zero bounds),
/// then rejection-samples the rest against the routine's precondition.
/// Generation infeasibility (10^4 straight rejections) is an error.
InputSuite generate_inputs(const Routine& routine, const GenPolicy& policy,
                           std::uint64_t seed, std::size_t count = 100);

// ---- Dynamic filtering ----

struct KillInfo {
  Obligation obligation = Obligation::Consecution;
  bool undefined = false;
  std::size_t input_index = 0;
  long long iteration = 0;
  std::string detail;
};

struct CandidateStatus {
  Candidate candidate;
  bool survived = false;
  std::optional<KillInfo> kill;
  // Survivor restored by pairing with a surviving bounding clause (second pass).
  std::optional<int> guarded_by;
};

struct FilterResult {
  std::string routine;
  std::uint64_t seed = 0;
  std::vector<CandidateStatus> statuses;
  std::size_t inputs_run = 0;
  long long iterations_observed = 0;
};

/// Run every input with the candidate clauses installed as the target loop's
/// invariant (gold clauses disabled); a candidate dies on its first false or
/// undefined initiation/consecution verdict and carries a replayable witness.
/// A second pass re-checks undefined-killed essential candidates conjoined
/// with each surviving bounding candidate.
FilterResult filter_candidates(const Routine& routine,
                               const std::vector<Candidate>& candidates,
                               const InputSuite& suite);

/// Re-run a single killed candidate on its witness input; returns the verdict
/// obligation/iteration observed (for replayability checks).
std::optional<KillInfo> replay_kill(const Routine& routine, const Candidate& candidate,
                                    const InputSuite& suite, const KillInfo& kill);

// ---- Ranking and reporting ----

struct GoldClause {
  ExprPtr clause;
  ClauseTag tag = ClauseTag::Essential;
};

struct InferenceReport {
  std::string routine;
  std::uint64_t seed = 0;
  std::vector<CandidateStatus> survivors; // ranked
  std::vector<CandidateStatus> killed;
  std::size_t gold_total = 0;
  std::size_t gold_matched = 0;
  std::vector<std::string> gold_missing;
  std::size_t inputs_run = 0;
};

/// Survivors ordered by (non-tautology, shared function symbols with the
/// postcondition, fewer introduced variables, shorter canonical form); the
/// ranking keys are this workbench's own, not a published scheme.
InferenceReport rank_and_report(const FilterResult& result,
                                const std::vector<GoldClause>& gold,
                                const Routine& routine);

nlohmann::ordered_json inference_report_to_json(const InferenceReport& rep,
                                                bool include_witnesses = true);

} // namespace invwb
