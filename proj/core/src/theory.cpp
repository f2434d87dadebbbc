#include "invwb/theory.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace invwb {

void TheoryRegistry::add(const std::string& name, int arity, TheoryFn fn) {
  fns_[{name, arity}] = std::move(fn);
}

bool TheoryRegistry::has(const std::string& name, int arity) const {
  return fns_.count({name, arity}) > 0;
}

Value TheoryRegistry::call(const std::string& name, std::span<const Value> args,
                           TheoryCtx& ctx) const {
  auto it = fns_.find({name, static_cast<int>(args.size())});
  if (it == fns_.end())
    undefined("unknown function symbol '" + name + "/" + std::to_string(args.size()) + "'");
  return it->second(args, ctx);
}

std::vector<std::string> TheoryRegistry::symbols() const {
  std::vector<std::string> out;
  for (const auto& [key, fn] : fns_) out.push_back(key.first + "/" + std::to_string(key.second));
  return out;
}

// ---- scalar helpers ----

namespace {

const BigInt& want_int(const Value& v, const char* what) {
  if (!v.is_int()) throw EvalError(EvalErrorKind::TypeError, std::string("expected integer ") + what);
  return v.as_int();
}

long long want_i64(const Value& v, const char* what) { return to_i64(want_int(v, what)); }

double want_real(const Value& v, const char* what) {
  if (v.is_real()) return v.as_real();
  if (v.is_int()) return to_f64(v.as_int());
  throw EvalError(EvalErrorKind::TypeError, std::string("expected real ") + what);
}

const ArrayVal& want_array(const Value& v, const char* what) {
  if (!v.is_array()) throw EvalError(EvalErrorKind::TypeError, std::string("expected array ") + what);
  return v.as_array();
}

const RefVal& want_ref(const Value& v, const char* what) {
  if (!v.is_ref()) throw EvalError(EvalErrorKind::TypeError, std::string("expected reference ") + what);
  return v.as_ref();
}

std::string memo_key(const std::string& tag, std::span<const Value> args) {
  std::ostringstream os;
  os << tag;
  for (const auto& a : args) os << "|" << value_to_text(a);
  return os.str();
}

} // namespace

// ---- arithmetic theory ----

BigInt gcd_int(const BigInt& a, const BigInt& b) {
  if (a < 0 || b < 0) undefined("gcd of a negative number");
  if (a == 0 && b == 0) undefined("gcd (0, 0)");
  BigInt x = a, y = b;
  while (y != 0) {
    BigInt t = x % y;
    x = y;
    y = t;
  }
  return x;
}

Value max_of(const std::vector<Value>& xs) {
  if (xs.empty()) undefined("max of an empty sequence");
  Value best = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (value_less(best, xs[i])) best = xs[i];
  return best;
}

Value min_of(const std::vector<Value>& xs) {
  if (xs.empty()) undefined("min of an empty sequence");
  Value best = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (value_less(xs[i], best)) best = xs[i];
  return best;
}

bool sorted_vals(const std::vector<Value>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (value_less(xs[i], xs[i - 1])) return false;
  return true;
}

bool gap_sorted_vals(const std::vector<Value>& xs, long long d) {
  if (d < 1) undefined("gap_sorted with gap < 1");
  for (std::size_t i = 0; i + d < xs.size(); ++i)
    if (value_less(xs[i + d], xs[i])) return false;
  return true;
}

bool perm_vals(std::vector<Value> a, std::vector<Value> b) {
  if (a.size() != b.size()) return false;
  auto lt = [](const Value& x, const Value& y) { return value_less(x, y); };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!value_equal(a[i], b[i])) return false;
  return true;
}

BigInt inversions_vals(const std::vector<Value>& xs) {
  BigInt n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j)
      if (value_less(xs[j], xs[i])) ++n;
  return n;
}

bool contains_slice(const ArrayVal& a, long long i, long long j, const Value& key) {
  if (i > j) return false;
  if (i < a.lower || j > a.upper())
    undefined("contains on a slice outside the array bounds");
  for (long long k = i; k <= j; ++k)
    if (value_equal(a.at(k), key)) return true;
  return false;
}

BigInt encoded_value(const ArrayVal& digits, const BigInt& base) {
  if (base <= 0) undefined("encoded_value with base <= 0");
  if (digits.lower < 0) undefined("encoded_value on an array with negative lower bound");
  BigInt sum = 0;
  BigInt pw = 1;
  for (long long k = 0; k < digits.lower; ++k) pw *= base;
  for (long long k = digits.lower; k <= digits.upper(); ++k) {
    sum += want_int(digits.at(k), "digit") * pw;
    pw *= base;
  }
  return sum;
}

bool has_base(const ArrayVal& digits, const BigInt& base) {
  if (base <= 0) undefined("has_base with base <= 0");
  for (const auto& d : digits.elems) {
    const BigInt& v = want_int(d, "digit");
    if (v < 0 || v >= base) return false;
  }
  return true;
}

// ---- dynamic programming theory ----

namespace {

struct KnapsackInputs {
  std::vector<BigInt> v, w;
};

void check_knapsack(const std::vector<BigInt>& v, const std::vector<BigInt>& w,
                    std::size_t n) {
  if (v.size() < n || w.size() < n) undefined("knapsack arrays shorter than n");
  for (std::size_t k = 0; k < n; ++k)
    if (w[k] <= 0) undefined("knapsack weight w[" + std::to_string(k + 1) + "] <= 0");
}

} // namespace

BigInt max_knapsack(const BigInt& b, const std::vector<BigInt>& v,
                    const std::vector<BigInt>& w, std::size_t n, Memo*) {
  if (b < 0) undefined("max_knapsack with negative weight limit");
  check_knapsack(v, w, n);
  long long limit = to_i64(b);
  std::vector<BigInt> K(static_cast<std::size_t>(limit) + 1, BigInt(0));
  for (long long y = 1; y <= limit; ++y) {
    BigInt best = K[static_cast<std::size_t>(y - 1)]; // empty candidate set falls back
    for (std::size_t k = 0; k < n; ++k) {
      if (w[k] <= y) {
        BigInt cand = v[k] + K[static_cast<std::size_t>(y - to_i64(w[k]))];
        if (cand > best) best = cand;
      }
    }
    K[static_cast<std::size_t>(y)] = best;
  }
  return K[static_cast<std::size_t>(limit)];
}

BigInt best_value(const BigInt& b, const std::vector<BigInt>& v,
                  const std::vector<BigInt>& w, std::size_t j, std::size_t n,
                  Memo* memo) {
  if (b < 1) undefined("best_value with weight limit < 1");
  if (j > n) undefined("best_value with j > n");
  check_knapsack(v, w, n);
  // the running value before any item type is tried is K(b - 1)
  BigInt best = max_knapsack(b - 1, v, w, n, memo);
  for (std::size_t k = 0; k < j; ++k) {
    if (w[k] <= b) {
      BigInt cand = v[k] + max_knapsack(b - w[k], v, w, n, memo);
      if (cand > best) best = cand;
    }
  }
  return best;
}

BigInt levenshtein(const std::vector<Value>& s, const std::vector<Value>& t, Memo*) {
  std::size_t m = s.size(), n = t.size();
  std::vector<long long> row(n + 1);
  for (std::size_t j = 0; j <= n; ++j) row[j] = static_cast<long long>(j);
  for (std::size_t i = 1; i <= m; ++i) {
    long long prev_diag = row[0];
    row[0] = static_cast<long long>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      long long up = row[j];
      long long cand;
      if (value_equal(s[i - 1], t[j - 1])) {
        cand = prev_diag;
      } else {
        cand = 1 + std::min({prev_diag, row[j - 1], up});
      }
      prev_diag = up;
      row[j] = cand;
    }
  }
  return BigInt(row[n]);
}

// ---- sequences, lists, and trees ----

std::vector<Value> rev_seq(std::vector<Value> s) {
  std::reverse(s.begin(), s.end());
  return s;
}

std::optional<std::vector<Value>> chain_values(const RefVal& r, const TheoryCtx& ctx) {
  std::vector<Value> out;
  std::set<int> visited;
  RefVal cur = r;
  while (!cur.is_void()) {
    const Heap* h = ctx.heap_for(cur);
    if (!h || !h->valid(cur)) undefined("dangling reference in chain");
    if (!visited.insert(cur.id).second) return std::nullopt;
    const HeapRec& rec = h->at(cur);
    out.push_back(rec.value);
    RefVal nxt = rec.next;
    nxt.pre = cur.pre;
    cur = nxt;
  }
  return out;
}

bool acyclic_chain(const RefVal& r, const TheoryCtx& ctx) {
  return chain_values(r, ctx).has_value();
}

namespace {

// Preorder walk of a tree; false if a node repeats (cycle or sharing).
bool walk_tree(const RefVal& r, const TheoryCtx& ctx, std::set<int>& visited,
               std::vector<Value>* values, const std::function<bool(const RefVal&)>& visit) {
  if (r.is_void()) return true;
  const Heap* h = ctx.heap_for(r);
  if (!h || !h->valid(r)) undefined("dangling reference in tree");
  if (!visited.insert(r.id).second) return false;
  if (visit && !visit(r)) return true; // early accept
  const HeapRec& rec = h->at(r);
  if (values) values->push_back(rec.value);
  RefVal l = rec.left, rr = rec.right;
  l.pre = r.pre;
  rr.pre = r.pre;
  return walk_tree(l, ctx, visited, values, visit) &&
         walk_tree(rr, ctx, visited, values, visit);
}

} // namespace

std::optional<std::vector<Value>> bst_values(const RefVal& root, const TheoryCtx& ctx) {
  std::set<int> visited;
  std::vector<Value> vals;
  if (!walk_tree(root, ctx, visited, &vals, nullptr)) return std::nullopt;
  std::sort(vals.begin(), vals.end(),
            [](const Value& a, const Value& b) { return value_less(a, b); });
  return vals;
}

RefVal bst_leftmost(const RefVal& root, const TheoryCtx& ctx) {
  if (root.is_void()) undefined("leftmost of an empty tree");
  std::set<int> visited;
  RefVal cur = root;
  while (true) {
    const Heap* h = ctx.heap_for(cur);
    if (!h || !h->valid(cur)) undefined("dangling reference in tree");
    if (!visited.insert(cur.id).second) undefined("leftmost of a cyclic structure");
    RefVal l = h->at(cur).left;
    if (l.is_void()) return cur;
    l.pre = cur.pre;
    cur = l;
  }
}

bool bst_contains_node(const RefVal& root, const RefVal& node, const TheoryCtx& ctx) {
  if (node.is_void()) return false;
  bool found = false;
  std::set<int> visited;
  walk_tree(root, ctx, visited, nullptr, [&](const RefVal& r) {
    if (r.id == node.id) found = true;
    return !found;
  });
  return found;
}

BigInt tree_size(const RefVal& root, const TheoryCtx& ctx) {
  std::set<int> visited;
  std::vector<Value> vals;
  if (!walk_tree(root, ctx, visited, &vals, nullptr))
    undefined("tree_size of a cyclic structure");
  return BigInt(vals.size());
}

namespace {

struct Range {
  bool has = false;
  Value min, max;
};

bool bst_ordered(const RefVal& r, const TheoryCtx& ctx, Range& out) {
  if (r.is_void()) return true;
  const Heap* h = ctx.heap_for(r);
  const HeapRec& rec = h->at(r);
  RefVal l = rec.left, rr = rec.right;
  l.pre = r.pre;
  rr.pre = r.pre;
  Range lr, rrange;
  if (!bst_ordered(l, ctx, lr)) return false;
  if (!bst_ordered(rr, ctx, rrange)) return false;
  if (lr.has && value_less(rec.value, lr.max)) return false;     // left values <= node
  if (rrange.has && value_less(rrange.min, rec.value)) return false; // right values >= node
  out.has = true;
  out.min = lr.has ? lr.min : rec.value;
  out.max = rrange.has ? rrange.max : rec.value;
  return true;
}

} // namespace

bool is_bst(const RefVal& root, const TheoryCtx& ctx) {
  std::set<int> visited;
  if (!walk_tree(root, ctx, visited, nullptr, nullptr))
    undefined("is_bst of a cyclic structure");
  Range range;
  return bst_ordered(root, ctx, range);
}

// ---- PageRank ----

std::vector<double> pagerank_reference(const std::vector<std::vector<long long>>& reaching,
                                       const std::vector<long long>& outbound,
                                       double dampening, double eps_ref) {
  std::size_t n = reaching.size();
  if (n == 0) undefined("pagerank on an empty graph");
  if (outbound.size() != n) undefined("reaching.count /= outbound.count");
  if (!(dampening > 0.0 && dampening < 1.0)) undefined("dampening outside (0, 1)");
  for (const auto& links : reaching) {
    for (long long j : links) {
      if (j < 1 || j > static_cast<long long>(n)) undefined("link index out of range");
      if (outbound[static_cast<std::size_t>(j - 1)] < 1)
        undefined("linking node with no outbound edges");
    }
  }
  std::vector<double> rank(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int iter = 0; iter < 100000; ++iter) {
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (long long j : reaching[i])
        sum += rank[static_cast<std::size_t>(j - 1)] /
               static_cast<double>(outbound[static_cast<std::size_t>(j - 1)]);
      next[i] = (1.0 - dampening) / static_cast<double>(n) + dampening * sum;
      diff += std::abs(next[i] - rank[i]);
    }
    rank.swap(next);
    if (diff <= eps_ref) break;
  }
  return rank;
}

double pagerank_residual(const std::vector<double>& scores,
                         const std::vector<std::vector<long long>>& reaching,
                         const std::vector<long long>& outbound, double dampening,
                         Memo* memo) {
  std::vector<double> ref;
  std::string key;
  if (memo) {
    std::ostringstream os;
    os << "pagerank|" << dampening;
    for (const auto& links : reaching) {
      os << "|r";
      for (long long j : links) os << "," << j;
    }
    os << "|o";
    for (long long o : outbound) os << "," << o;
    key = os.str();
    auto it = memo->table.find(key);
    if (it != memo->table.end()) {
      for (const auto& v : it->second.as_array().elems) ref.push_back(v.as_real());
    }
  }
  if (ref.empty()) {
    ref = pagerank_reference(reaching, outbound, dampening);
    if (memo) {
      ArrayVal a;
      a.lower = 1;
      for (double v : ref) a.elems.emplace_back(v);
      memo->table.emplace(key, Value(std::move(a)));
    }
  }
  if (scores.size() != ref.size()) undefined("rank vector has wrong length");
  double l1 = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) l1 += std::abs(ref[i] - scores[i]);
  return l1;
}

// ---- lifting ----

std::vector<Value> lift_to_seq(const Value& v, const TheoryCtx& ctx) {
  if (v.is_seq()) return v.as_seq().elems;
  if (v.is_array()) return v.as_array().elems;
  if (v.is_ref()) {
    auto chain = chain_values(v.as_ref(), ctx);
    if (!chain) undefined("sequence view of a cyclic chain");
    return *chain;
  }
  return {v};
}

// ---- registry ----

namespace {

std::vector<BigInt> int_vector(const ArrayVal& a, const char* what) {
  std::vector<BigInt> out;
  out.reserve(a.elems.size());
  for (const auto& e : a.elems) out.push_back(want_int(e, what));
  return out;
}

std::vector<std::vector<long long>> reaching_of(const Value& v) {
  const ArrayVal& outer = want_array(v, "reaching");
  std::vector<std::vector<long long>> out;
  for (const auto& e : outer.elems) {
    const ArrayVal& inner = want_array(e, "reaching set");
    std::vector<long long> links;
    for (const auto& x : inner.elems) links.push_back(to_i64(want_int(x, "link")));
    out.push_back(std::move(links));
  }
  return out;
}

TheoryRegistry build_standard() {
  TheoryRegistry reg;

  reg.add("gcd", 2, [](std::span<const Value> a, TheoryCtx&) {
    return Value(gcd_int(want_int(a[0], "gcd operand"), want_int(a[1], "gcd operand")));
  });
  reg.add("abs", 1, [](std::span<const Value> a, TheoryCtx&) -> Value {
    if (a[0].is_int()) return Value(BigInt(abs(a[0].as_int())));
    if (a[0].is_real()) return Value(std::abs(a[0].as_real()));
    throw EvalError(EvalErrorKind::TypeError, "abs of a non-number");
  });
  reg.add("max", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return max_of(lift_to_seq(a[0], ctx));
  });
  reg.add("min", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return min_of(lift_to_seq(a[0], ctx));
  });
  reg.add("elements", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(SeqVal{lift_to_seq(a[0], ctx)});
  });
  reg.add("contains", 4, [](std::span<const Value> a, TheoryCtx&) {
    return Value(contains_slice(want_array(a[0], "contains array"),
                                want_i64(a[1], "contains index"),
                                want_i64(a[2], "contains index"), a[3]));
  });
  reg.add("sorted", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(sorted_vals(lift_to_seq(a[0], ctx)));
  });
  reg.add("gap_sorted", 2, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(gap_sorted_vals(lift_to_seq(a[0], ctx), want_i64(a[1], "gap")));
  });
  reg.add("perm", 2, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(perm_vals(lift_to_seq(a[0], ctx), lift_to_seq(a[1], ctx)));
  });
  reg.add("inversions", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(inversions_vals(lift_to_seq(a[0], ctx)));
  });
  reg.add("has_base", 2, [](std::span<const Value> a, TheoryCtx&) {
    return Value(has_base(want_array(a[0], "digit array"), want_int(a[1], "base")));
  });
  reg.add("encoded_value", 2, [](std::span<const Value> a, TheoryCtx&) {
    return Value(encoded_value(want_array(a[0], "digit array"), want_int(a[1], "base")));
  });
  reg.add("max_knapsack", 4, [](std::span<const Value> a, TheoryCtx& ctx) {
    const ArrayVal& v = want_array(a[1], "values");
    const ArrayVal& w = want_array(a[2], "weights");
    if (v.lower != 1 || w.lower != 1) undefined("knapsack arrays must be indexed from 1");
    long long n = want_i64(a[3], "n");
    if (n < 0) undefined("negative n");
    std::string key = memo_key("K", a);
    if (ctx.memo) {
      auto it = ctx.memo->table.find(key);
      if (it != ctx.memo->table.end()) return it->second;
    }
    Value result(max_knapsack(want_int(a[0], "weight limit"), int_vector(v, "value"),
                              int_vector(w, "weight"), static_cast<std::size_t>(n)));
    if (ctx.memo) ctx.memo->table.emplace(key, result);
    return result;
  });
  reg.add("best_value", 5, [](std::span<const Value> a, TheoryCtx& ctx) {
    const ArrayVal& v = want_array(a[1], "values");
    const ArrayVal& w = want_array(a[2], "weights");
    if (v.lower != 1 || w.lower != 1) undefined("knapsack arrays must be indexed from 1");
    long long j = want_i64(a[3], "j");
    long long n = want_i64(a[4], "n");
    if (j < 0 || n < 0) undefined("negative item count");
    std::string key = memo_key("BV", a);
    if (ctx.memo) {
      auto it = ctx.memo->table.find(key);
      if (it != ctx.memo->table.end()) return it->second;
    }
    Value result(best_value(want_int(a[0], "weight limit"), int_vector(v, "value"),
                            int_vector(w, "weight"), static_cast<std::size_t>(j),
                            static_cast<std::size_t>(n)));
    if (ctx.memo) ctx.memo->table.emplace(key, result);
    return result;
  });
  reg.add("distance", 2, [](std::span<const Value> a, TheoryCtx& ctx) {
    std::string key = memo_key("D", a);
    if (ctx.memo) {
      auto it = ctx.memo->table.find(key);
      if (it != ctx.memo->table.end()) return it->second;
    }
    Value result(levenshtein(lift_to_seq(a[0], ctx), lift_to_seq(a[1], ctx)));
    if (ctx.memo) ctx.memo->table.emplace(key, result);
    return result;
  });
  reg.add("rev", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(SeqVal{rev_seq(lift_to_seq(a[0], ctx))});
  });
  reg.add("cat", 2, [](std::span<const Value> a, TheoryCtx& ctx) {
    auto l = lift_to_seq(a[0], ctx);
    auto r = lift_to_seq(a[1], ctx);
    l.insert(l.end(), r.begin(), r.end());
    return Value(SeqVal{std::move(l)});
  });
  reg.add("acyclic", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(acyclic_chain(want_ref(a[0], "list"), ctx));
  });
  reg.add("values", 1, [](std::span<const Value> a, TheoryCtx& ctx) -> Value {
    auto vals = bst_values(want_ref(a[0], "tree"), ctx);
    if (!vals) undefined("values of a cyclic structure");
    return Value(SeqVal{std::move(*vals)});
  });
  reg.add("leftmost", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(bst_leftmost(want_ref(a[0], "tree"), ctx));
  });
  reg.add("in_tree", 2, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(bst_contains_node(want_ref(a[0], "tree"), want_ref(a[1], "node"), ctx));
  });
  reg.add("is_bst", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(is_bst(want_ref(a[0], "tree"), ctx));
  });
  reg.add("tree_size", 1, [](std::span<const Value> a, TheoryCtx& ctx) {
    return Value(tree_size(want_ref(a[0], "tree"), ctx));
  });
  reg.add("residual", 4, [](std::span<const Value> a, TheoryCtx& ctx) {
    const ArrayVal& scores = want_array(a[0], "rank vector");
    std::vector<double> s;
    for (const auto& e : scores.elems) s.push_back(want_real(e, "rank entry"));
    const ArrayVal& outb = want_array(a[2], "outbound");
    std::vector<long long> outbound;
    for (const auto& e : outb.elems) outbound.push_back(to_i64(want_int(e, "outdegree")));
    return Value(pagerank_residual(s, reaching_of(a[1]), outbound,
                                   want_real(a[3], "dampening"), ctx.memo));
  });

  // executable array constructors used by the corpus programs
  reg.add("make_array", 3, [](std::span<const Value> a, TheoryCtx&) {
    long long lo = want_i64(a[0], "bound");
    long long hi = want_i64(a[1], "bound");
    ArrayVal out;
    out.lower = lo;
    for (long long k = lo; k <= hi; ++k) out.elems.push_back(a[2]);
    return Value(out);
  });
  reg.add("make_matrix", 5, [](std::span<const Value> a, TheoryCtx&) {
    long long r0 = want_i64(a[0], "bound"), r1 = want_i64(a[1], "bound");
    long long c0 = want_i64(a[2], "bound"), c1 = want_i64(a[3], "bound");
    ArrayVal row;
    row.lower = c0;
    for (long long k = c0; k <= c1; ++k) row.elems.push_back(a[4]);
    ArrayVal out;
    out.lower = r0;
    for (long long k = r0; k <= r1; ++k) out.elems.push_back(Value(row));
    return Value(out);
  });

  return reg;
}

} // namespace

const TheoryRegistry& TheoryRegistry::standard() {
  static const TheoryRegistry reg = build_standard();
  return reg;
}

} // namespace invwb
