#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "prw/iterated_log.hpp"

namespace prw {

// coef * (-1)^n / (n^power * log n * ... * log_[log_depth] n), frozen below log_start(log_depth).
struct SequenceTerm {
  double coef = 0.0;
  double power = 1.0;
  int log_depth = 0;
  bool alternating = false;

  double at(std::int64_t n) const {
    const double v = magnitude(static_cast<double>(n));
    return (alternating && (n & 1)) ? -v : v;
  }

  // Smooth interpolation; only meaningful for non-alternating terms.
  double at_real(double x) const { return magnitude(x); }

  double magnitude(double x) const {
    const double m = std::max(x, static_cast<double>(log_start(log_depth)));
    double denom = std::pow(m, power);
    double l = m;
    for (int i = 0; i < log_depth; ++i) {
      l = std::log(l);
      denom *= l;
    }
    return coef / denom;
  }

  friend bool operator==(const SequenceTerm&, const SequenceTerm&) = default;
};

// Explicit values for n = 1..head.size(), the sum of terms afterwards.
struct SequenceSpec {
  std::vector<double> head;
  std::vector<SequenceTerm> terms;

  double at(std::int64_t n) const {
    if (n >= 1 && static_cast<std::size_t>(n) <= head.size()) return head[n - 1];
    double s = 0.0;
    for (const auto& t : terms) s += t.at(n);
    return s;
  }

  bool is_zero() const {
    return std::all_of(head.begin(), head.end(), [](double v) { return v == 0.0; }) &&
           std::all_of(terms.begin(), terms.end(), [](const SequenceTerm& t) { return t.coef == 0.0; });
  }

  friend bool operator==(const SequenceSpec&, const SequenceSpec&) = default;
};

// sum_i c_i / (n log n ... log_[i] n), frozen below log_start(depth).
class IteratedLogSequence {
 public:
  IteratedLogSequence() = default;
  explicit IteratedLogSequence(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw InvalidParameter("empty coefficient vector");
    start_ = log_start(depth());
  }

  int depth() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  std::int64_t start() const noexcept { return start_; }
  const std::vector<double>& coeffs() const noexcept { return coeffs_; }

  double at(double x) const {
    const double m = std::max(x, static_cast<double>(start_));
    double prod = m;
    double l = m;
    double s = coeffs_[0] / prod;
    for (std::size_t i = 1; i < coeffs_.size(); ++i) {
      l = std::log(l);
      prod *= l;
      s += coeffs_[i] / prod;
    }
    return s;
  }

 private:
  std::vector<double> coeffs_{1.0};
  std::int64_t start_ = 1;
};

}  // namespace prw
