#pragma once

#include <algorithm>
#include <cmath>
#include <string_view>
#include <vector>

namespace prw {

enum class Finiteness { Finite, Infinite, Inconclusive };

inline std::string_view to_string(Finiteness f) {
  switch (f) {
    case Finiteness::Finite: return "Finite";
    case Finiteness::Infinite: return "Infinite";
    case Finiteness::Inconclusive: return "Inconclusive";
  }
  return "?";
}

// Exponent vectors describe orders of the form prod_i log_[i](n)^(-x_i), log_[0](n) = n.
// Missing trailing entries are zero.
namespace exponent {

inline constexpr double kEps = 1e-12;

inline double at(const std::vector<double>& x, std::size_t i) { return i < x.size() ? x[i] : 0.0; }

inline bool same(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(at(a, i) - at(b, i)) > kEps) return false;
  return true;
}

inline std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
  a.resize(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

inline std::vector<double> sub(std::vector<double> a, const std::vector<double>& b) {
  a.resize(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
  return a;
}

// Sum over n of prod log_[i](n)^(-t_i) is finite iff the first entry differing from 1 exceeds 1.
inline Finiteness series(const std::vector<double>& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i] - 1.0) <= kEps) continue;
    return t[i] > 1.0 ? Finiteness::Finite : Finiteness::Infinite;
  }
  return Finiteness::Infinite;  // padded zero after an all-ones prefix
}

// Order of the truncated mean sum_{k<=n} T(k) for a tail with exponents b.
inline std::vector<double> partial_sum_order(const std::vector<double>& b) {
  if (series(b) == Finiteness::Finite) return {};
  std::size_t j = 0;
  while (j < b.size() && std::abs(b[j] - 1.0) <= kEps) ++j;
  std::vector<double> e(std::max(b.size(), j + 1), 0.0);
  e[j] = at(b, j) - 1.0;
  for (std::size_t i = j + 1; i < b.size(); ++i) e[i] = b[i];
  return e;
}

// Order of n * alpha_n when alpha_n = sum a_i / (n log n ... log_[i] n).
inline std::vector<double> n_alpha_order(const std::vector<double>& a) {
  std::size_t m = 0;
  while (m < a.size() && a[m] == 0.0) ++m;
  std::vector<double> g(m + 1, 0.0);
  for (std::size_t i = 1; i <= m; ++i) g[i] = 1.0;
  return g;
}

// Order of 1 - n T(n) / sum_{k<=n} T(k).
inline std::vector<double> k_factor_order(const std::vector<double>& b) {
  if (!b.empty() && b[0] > kEps) return {};
  return n_alpha_order(b);
}

}  // namespace exponent
}  // namespace prw
