#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace invwb {

// All integer arithmetic in the assertion language is exact.
using BigInt = boost::multiprecision::cpp_int;

inline long long to_i64(const BigInt& v) { return v.convert_to<long long>(); }
inline double to_f64(const BigInt& v) { return v.convert_to<double>(); }

} // namespace invwb
