#include "invwb/value.hpp"

#include <cmath>
#include <sstream>

#include "invwb/theory.hpp"

namespace invwb {

const Value& ArrayVal::at(long long i) const {
  if (!in_bounds(i))
    throw EvalError(EvalErrorKind::OutOfBounds,
                    "index " + std::to_string(i) + " outside [" + std::to_string(lower) +
                        ".." + std::to_string(upper()) + "]");
  return elems[static_cast<std::size_t>(i - lower)];
}

Value& ArrayVal::at(long long i) {
  if (!in_bounds(i))
    throw EvalError(EvalErrorKind::OutOfBounds,
                    "index " + std::to_string(i) + " outside [" + std::to_string(lower) +
                        ".." + std::to_string(upper()) + "]");
  return elems[static_cast<std::size_t>(i - lower)];
}

bool value_equal(const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
  if (a.is_real() && b.is_real()) return a.as_real() == b.as_real();
  if (a.is_int() && b.is_real()) return to_f64(a.as_int()) == b.as_real();
  if (a.is_real() && b.is_int()) return a.as_real() == to_f64(b.as_int());
  if (a.is_bool() && b.is_bool()) return a.as_bool() == b.as_bool();
  if (a.is_ref() && b.is_ref())
    return a.as_ref().id == b.as_ref().id && (a.as_ref().is_void() || a.as_ref().pre == b.as_ref().pre);
  auto elems = [](const Value& v) -> const std::vector<Value>* {
    if (v.is_array()) return &v.as_array().elems;
    if (v.is_seq()) return &v.as_seq().elems;
    return nullptr;
  };
  const auto* ea = elems(a);
  const auto* eb = elems(b);
  if (ea && eb) {
    if (ea->size() != eb->size()) return false;
    for (std::size_t i = 0; i < ea->size(); ++i)
      if (!value_equal((*ea)[i], (*eb)[i])) return false;
    return true;
  }
  return false;
}

bool value_less(const Value& a, const Value& b) {
  if (a.is_int() && b.is_int()) return a.as_int() < b.as_int();
  if (a.is_real() || b.is_real()) {
    double x = a.is_real() ? a.as_real() : to_f64(a.as_int());
    double y = b.is_real() ? b.as_real() : to_f64(b.as_int());
    return x < y;
  }
  throw EvalError(EvalErrorKind::TypeError, "values are not order-comparable");
}

static void text_of(const Value& val, const Heap* heap, const Heap* pre_heap,
                    std::ostringstream& os) {
  if (val.is_int()) {
    os << val.as_int().str();
  } else if (val.is_real()) {
    os.precision(17);
    os << val.as_real();
  } else if (val.is_bool()) {
    os << (val.as_bool() ? "true" : "false");
  } else if (val.is_array()) {
    const auto& a = val.as_array();
    os << "[";
    for (std::size_t i = 0; i < a.elems.size(); ++i) {
      if (i) os << ", ";
      text_of(a.elems[i], heap, pre_heap, os);
    }
    os << "]";
    if (a.lower != 1) os << "@" << a.lower;
  } else if (val.is_seq()) {
    const auto& s = val.as_seq();
    os << "<";
    for (std::size_t i = 0; i < s.elems.size(); ++i) {
      if (i) os << ", ";
      text_of(s.elems[i], heap, pre_heap, os);
    }
    os << ">";
  } else {
    const auto& r = val.as_ref();
    if (r.is_void()) {
      os << "Void";
      return;
    }
    const Heap* h = r.pre ? pre_heap : heap;
    if (!h || !h->valid(r)) {
      os << (r.pre ? "pre#" : "ref#") << r.id;
      return;
    }
    // render a short chain / tree preview
    os << (r.pre ? "pre#" : "ref#") << r.id << "{";
    text_of(h->at(r).value, heap, pre_heap, os);
    os << "}";
  }
}

std::string value_to_text(const Value& val, const Heap* heap, const Heap* pre_heap) {
  std::ostringstream os;
  text_of(val, heap, pre_heap, os);
  return os.str();
}

} // namespace invwb
