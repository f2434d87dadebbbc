#pragma once

#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "invwb/value.hpp"

namespace invwb {

enum class EvalErrorKind {
  Undefined,     // partial-function domain violation ("assertion undefined")
  Unbound,       // unbound variable
  OutOfBounds,   // array index / slice outside bounds
  TypeError,     // operand of the wrong kind
  NoSnapshot,    // `old` without a pre-state snapshot
};

struct EvalError : std::runtime_error {
  EvalErrorKind kind;
  EvalError(EvalErrorKind k, std::string msg)
      : std::runtime_error(std::move(msg)), kind(k) {}
};

[[noreturn]] inline void undefined(const std::string& msg) {
  throw EvalError(EvalErrorKind::Undefined, msg);
}

/// Caches for the expensive oracles. One instance per execution; evaluation
/// stays pure because the cached functions are.
struct Memo {
  std::unordered_map<std::string, Value> table;
};

/// Everything a theory function may need besides its arguments.
struct TheoryCtx {
  const Heap* heap = nullptr;
  const Heap* pre_heap = nullptr;
  Memo* memo = nullptr;
  double eps_real = 1e-9;

  const Heap* heap_for(const RefVal& r) const { return r.pre ? pre_heap : heap; }
};

using TheoryFn = std::function<Value(std::span<const Value>, TheoryCtx&)>;

/// Registry of domain-function symbols usable in assertions. Every symbol
/// referenced by any corpus assertion is registered here; definedness is
/// checked before producing a value, so a violation yields "undefined",
/// never a wrong result.
class TheoryRegistry {
 public:
  void add(const std::string& name, int arity, TheoryFn fn);
  bool has(const std::string& name, int arity) const;
  Value call(const std::string& name, std::span<const Value> args, TheoryCtx& ctx) const;
  std::vector<std::string> symbols() const;

  static const TheoryRegistry& standard();

 private:
  std::map<std::pair<std::string, int>, TheoryFn> fns_;
};

// ---- Direct oracle entry points (also exposed through the registry) ----

/// Greatest common divisor of nonnegative integers, undefined for (0, 0).
BigInt gcd_int(const BigInt& a, const BigInt& b);

/// Maximum / minimum over a non-empty value sequence; undefined when empty.
Value max_of(const std::vector<Value>& xs);
Value min_of(const std::vector<Value>& xs);

bool sorted_vals(const std::vector<Value>& xs);
bool gap_sorted_vals(const std::vector<Value>& xs, long long d);
bool perm_vals(std::vector<Value> a, std::vector<Value> b);
BigInt inversions_vals(const std::vector<Value>& xs);

/// Does a[i..j] contain key? Empty range (i > j) is false; indices must
/// otherwise stay within bounds.
bool contains_slice(const ArrayVal& a, long long i, long long j, const Value& key);

BigInt encoded_value(const ArrayVal& digits, const BigInt& base);
bool has_base(const ArrayVal& digits, const BigInt& base);

/// Largest value achievable with weight limit b (unbounded item counts).
/// Follows the recurrence with K(0) = 0; for b > 0 the empty candidate set
/// falls back to K(b-1), matching the iterative program's m[b] := m[b-1].
BigInt max_knapsack(const BigInt& b, const std::vector<BigInt>& v,
                    const std::vector<BigInt>& w, std::size_t n, Memo* memo = nullptr);

/// Best value for weight limit b after trying item types 1..j only;
/// best_value(b, v, w, 0, n) = K(b-1), the running value before any type is tried.
BigInt best_value(const BigInt& b, const std::vector<BigInt>& v,
                  const std::vector<BigInt>& w, std::size_t j, std::size_t n,
                  Memo* memo = nullptr);

/// Minimum number of elementary edit operations turning s into t.
BigInt levenshtein(const std::vector<Value>& s, const std::vector<Value>& t,
                   Memo* memo = nullptr);

std::vector<Value> rev_seq(std::vector<Value> s);

/// Follow the next-chain from r; nullopt when a node repeats (cycle).
std::optional<std::vector<Value>> chain_values(const RefVal& r, const TheoryCtx& ctx);
bool acyclic_chain(const RefVal& r, const TheoryCtx& ctx);

std::optional<std::vector<Value>> bst_values(const RefVal& root, const TheoryCtx& ctx);
RefVal bst_leftmost(const RefVal& root, const TheoryCtx& ctx); // undefined on Void/cycle
bool bst_contains_node(const RefVal& root, const RefVal& node, const TheoryCtx& ctx);
bool is_bst(const RefVal& root, const TheoryCtx& ctx);
BigInt tree_size(const RefVal& root, const TheoryCtx& ctx); // undefined on cycle

/// Fixpoint scores for the link graph: reaching[k] lists the nodes linking to
/// k; outbound[k] is k's outdegree. Iterates the rank update to an L1 step
/// below eps_ref (default 1e-12, capped at 100000 sweeps).
std::vector<double> pagerank_reference(const std::vector<std::vector<long long>>& reaching,
                                       const std::vector<long long>& outbound,
                                       double dampening, double eps_ref = 1e-12);

/// L1 distance between `scores` and the reference fixpoint for the graph.
double pagerank_residual(const std::vector<double>& scores,
                         const std::vector<std::vector<long long>>& reaching,
                         const std::vector<long long>& outbound, double dampening,
                         Memo* memo = nullptr);

/// Lift a value to a plain element sequence: Seq as is, Array's elements,
/// Ref via its next-chain (undefined if cyclic). Scalars become singletons.
std::vector<Value> lift_to_seq(const Value& v, const TheoryCtx& ctx);

} // namespace invwb
