#pragma once

#include <cmath>
#include <cstdint>

#include "prw/errors.hpp"

namespace prw {

// Deepest iterated logarithm supported. log_[4](n) > 1 needs n > exp(3814279),
// so deeper families would be frozen on every representable run length.
inline constexpr int kMaxLogDepth = 3;

// log_[0](x) = x, log_[k](x) = log(log_[k-1](x)).
inline double iterated_log(double x, int depth) {
  for (int i = 0; i < depth; ++i) x = std::log(x);
  return x;
}

// x * log x * ... * log_[depth] x
inline double log_product(double x, int depth) {
  double prod = x;
  double l = x;
  for (int i = 0; i < depth; ++i) {
    l = std::log(l);
    prod *= l;
  }
  return prod;
}

// Smallest n >= 1 with log_[i](n) > 1 for every 1 <= i <= depth.
inline std::int64_t log_start(int depth) {
  static constexpr std::int64_t table[kMaxLogDepth + 1] = {1, 3, 16, 3814280};
  if (depth < 0 || depth > kMaxLogDepth)
    throw InvalidParameter("iterated-log depth must be in [0, " + std::to_string(kMaxLogDepth) +
                           "]");
  return table[depth];
}

}  // namespace prw
