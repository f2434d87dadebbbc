#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invwb/ast.hpp"
#include "invwb/routine.hpp"

namespace invwb {

enum class HeuristicKind {
  Verbatim,        // postcondition clause taken unchanged
  Backward,        // postcondition pulled back through trailing statements
  ConstantRelax,   // constant replaced by a loop variable
  Uncouple,        // variable occurrence split into two variables
  DropTerm,        // conjunct removed
  Aging,           // variable replaced by its previous-iteration value
  Rewrite,         // registered identity applied (gcd(x,x)=x, t*1^1, ...)
  SliceNorm,       // array written in full slice form (free normalization)
};

std::string heuristic_name(HeuristicKind k);

/// One machine-replayable derivation step. Applying the step to the previous
/// clause (apply_step) must reproduce `after` exactly.
struct DerivationStep {
  HeuristicKind kind;
  std::string describe;
  ExprPtr target;               // subexpression being replaced (relax/uncouple/rewrite)
  std::string var;              // variable introduced / aged
  ExprPtr replacement;          // replacement expr (relax var, aging offset, ...)
  std::vector<int> occurrences; // preorder occurrence indices; empty = all occurrences
  std::string identity;         // rewrite identity name
  int conjunct = -1;            // drop_term: index of the dropped conjunct
  ExprPtr after;                // clause after this step
};

enum class CandidateClass { Essential, Bounding };
std::string candidate_class_name(CandidateClass c);

struct Candidate {
  ExprPtr clause;
  ExprPtr source;                      // originating postcondition clause
  std::vector<DerivationStep> derivation;
  ExprPtr exit_contribution;           // may be null
  CandidateClass classification = CandidateClass::Essential;
  std::vector<std::string> fresh_vars; // loop variables standing in for fresh names
  int depth = 0;                       // budget-counted derivation steps
  int id = -1;
};

/// Re-apply one derivation step to `prev`; nullptr if inapplicable.
ExprPtr apply_step(const ExprPtr& prev, const DerivationStep& step, const Routine& routine);

/// Replay the full derivation from the source clause; true iff the steps
/// reproduce the candidate's clause structurally.
bool replay_derivation(const Candidate& cand, const Routine& routine);

// ---- The five generalization heuristics, one operation each ----

/// Replace `target` (a constant of the loop: literal, unassigned variable, or
/// bound field) by each type-compatible loop variable, per occurrence policy:
/// (a) all occurrences, (b) each single occurrence. Interval-bound targets
/// also emit the companion bounding clause (lo <= v <= hi).
std::vector<Candidate> relax_constant(const ExprPtr& clause, const ExprPtr& target,
                                      const Routine& routine);

/// Split occurrences of `var` between itself and another loop variable,
/// optionally enabled by a registered rewrite identity (e.g. gcd(x,x) = x).
/// The equality var = fresh is proposed as exit contribution.
std::vector<Candidate> uncouple(const ExprPtr& clause, const std::string& var,
                                const std::optional<std::string>& rewrite_name,
                                const Routine& routine);

/// Remove one conjunct of a conjunction (comparison chains desugar to
/// conjunctions at parse time); a dropped comparison becomes the proposed
/// exit contribution.
std::vector<Candidate> drop_term(const ExprPtr& clause);

/// Replace `var` by the value it had before the current iteration
/// (var - offset; offsets are 1 and the loop-step expressions found in the body).
Candidate age(const ExprPtr& clause, const std::string& var, const ExprPtr& offset);

/// Weakest-precondition-style substitution of `post` through the trailing
/// statements (assignments and ifs only), yielding the loop's exit-time
/// obligation used as mutation source. Throws on unsupported statements.
ExprPtr backward_substitute(const ExprPtr& post, const std::vector<StmtPtr>& trailing);

struct GenerateOptions {
  int budget = 3;
  std::size_t cap = 4000; // deterministic truncation bound
};

/// Closure of the five heuristics over the routine's postcondition clauses up
/// to derivation depth `budget`, deduplicated by canonical form and
/// classified essential/bounding. Pure function of (routine, options):
/// repeated calls produce identical ordered lists.
std::vector<Candidate> generate_candidates(const Routine& routine,
                                           const GenerateOptions& opts = {});

/// Structural equality up to a bijective renaming of the candidate's
/// introduced variables (used for gold matching).
bool equal_up_to_renaming(const Candidate& cand, const Expr& gold);

bool is_tautology(const Expr& clause);

nlohmann::ordered_json candidates_to_json(const std::vector<Candidate>& cands);

} // namespace invwb
