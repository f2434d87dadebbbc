#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "invwb/bigint.hpp"

namespace invwb {

struct Value;

/// Arrays carry an explicit, adjustable lower bound; element access outside
/// [lower, upper] is an evaluation error, never silent wraparound.
struct ArrayVal {
  long long lower = 1;
  std::vector<Value> elems;

  long long upper() const { return lower + static_cast<long long>(elems.size()) - 1; }
  long long count() const { return static_cast<long long>(elems.size()); }
  bool in_bounds(long long i) const { return i >= lower && i <= upper(); }
  const Value& at(long long i) const;
  Value& at(long long i);
};

/// Reference into the record heap. id 0 is Void. `pre` selects the pre-state
/// snapshot heap (for refs produced under `old`).
struct RefVal {
  int id = 0;
  bool pre = false;
  bool is_void() const { return id == 0; }
};

struct SeqVal {
  std::vector<Value> elems;
};

using ValueNode = std::variant<BigInt, double, bool, ArrayVal, RefVal, SeqVal>;

struct Value {
  ValueNode v;

  Value() : v(BigInt(0)) {}
  Value(ValueNode n) : v(std::move(n)) {}
  Value(BigInt n) : v(std::move(n)) {}
  Value(double d) : v(d) {}
  Value(bool b) : v(b) {}
  Value(ArrayVal a) : v(std::move(a)) {}
  Value(RefVal r) : v(r) {}
  Value(SeqVal s) : v(std::move(s)) {}

  bool is_int() const { return std::holds_alternative<BigInt>(v); }
  bool is_real() const { return std::holds_alternative<double>(v); }
  bool is_bool() const { return std::holds_alternative<bool>(v); }
  bool is_array() const { return std::holds_alternative<ArrayVal>(v); }
  bool is_ref() const { return std::holds_alternative<RefVal>(v); }
  bool is_seq() const { return std::holds_alternative<SeqVal>(v); }

  const BigInt& as_int() const { return std::get<BigInt>(v); }
  double as_real() const { return std::get<double>(v); }
  bool as_bool() const { return std::get<bool>(v); }
  const ArrayVal& as_array() const { return std::get<ArrayVal>(v); }
  ArrayVal& as_array() { return std::get<ArrayVal>(v); }
  const RefVal& as_ref() const { return std::get<RefVal>(v); }
  const SeqVal& as_seq() const { return std::get<SeqVal>(v); }
  SeqVal& as_seq() { return std::get<SeqVal>(v); }
};

/// Heap record for the list/tree programs. Unused links stay Void.
struct HeapRec {
  Value value;
  RefVal next;
  RefVal left;
  RefVal right;
};

struct Heap {
  std::vector<HeapRec> recs; // id i lives at recs[i-1]

  int allocate(Value v) {
    recs.push_back(HeapRec{std::move(v), {}, {}, {}});
    return static_cast<int>(recs.size());
  }
  bool valid(const RefVal& r) const {
    return r.id >= 1 && r.id <= static_cast<int>(recs.size());
  }
  const HeapRec& at(const RefVal& r) const { return recs[r.id - 1]; }
  HeapRec& at(const RefVal& r) { return recs[r.id - 1]; }
};

using Env = std::map<std::string, Value>;

/// Exact equality (no tolerance); mixed int/real compares numerically.
bool value_equal(const Value& a, const Value& b);

/// Strict ordering for sorting values of the same numeric kind.
bool value_less(const Value& a, const Value& b);

std::string value_to_text(const Value& val, const Heap* heap = nullptr,
                          const Heap* pre_heap = nullptr);

} // namespace invwb
