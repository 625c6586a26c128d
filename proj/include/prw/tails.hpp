#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prw/exponents.hpp"
#include "prw/transitions.hpp"

namespace prw {

inline constexpr std::int64_t kDefaultRunCap = 1'000'000'000;
inline constexpr double kLogUnderflow = -745.0;

inline double log_tail(const TransitionModel& m, Direction d, std::int64_t n) {
  if (n < 1) throw InvalidParameter("tail index must be >= 1");
  return m.cache(d).log_tail(n);
}

struct TailPoint {
  double log_tail = 0.0;
  double value = 1.0;
  bool analytic_zero = false;  // some alpha_k = 1 with k < n
  bool underflow = false;      // positive but below the smallest double
};

inline TailPoint tail_point(const TransitionModel& m, Direction d, std::int64_t n) {
  TailPoint p;
  p.log_tail = log_tail(m, d, n);
  if (p.log_tail == -std::numeric_limits<double>::infinity()) {
    p.value = 0.0;
    p.analytic_zero = true;
  } else if (p.log_tail < kLogUnderflow) {
    p.value = 0.0;
    p.underflow = true;
  } else {
    p.value = std::exp(p.log_tail);
  }
  return p;
}

inline double tail(const TransitionModel& m, Direction d, std::int64_t n) {
  return tail_point(m, d, n).value;
}

inline double truncated_mean(const TransitionModel& m, Direction d, std::int64_t upto) {
  if (upto < 1) throw InvalidParameter("truncated mean index must be >= 1");
  const auto& cache = m.cache(d);
  auto table = cache.table(upto);
  if (upto <= table->size()) return table->theta[upto - 1];
  double s = table->theta.back();
  for (std::int64_t n = table->size() + 1; n <= upto; ++n) s += std::exp(cache.log_tail(n));
  return s;
}

inline std::optional<std::vector<double>> tail_exponents(const TransitionModel& m, Direction d) {
  return m.family().exponents(d);
}

struct MeanVerdict {
  Finiteness status = Finiteness::Inconclusive;
  std::optional<double> value;
  std::string rule;
  std::optional<std::int64_t> horizon;
  std::optional<double> partial_sum;
  std::optional<double> remainder;
};

struct MeanOptions {
  std::int64_t horizon = 10'000'000;
  double tolerance = 1e-10;
  double integrable_threshold = 1e-3;  // T(n) n^2 over the last decade
  double growth_threshold = 1.0;       // truncated-mean increase over the last decade
};

namespace detail {

struct TailStream {
  double sum = 0.0;
  double sum_at_decade = 0.0;
  double log_tail_end = 0.0;        // log T(last + 1)
  double log_tail_decade = 0.0;     // log T(decade)
  double max_n2_tail = 0.0;         // max of T(n) n^2 over the last decade
  std::int64_t last = 0;
  bool terminated = false;          // T vanished (analytic zero or underflow)
  bool analytic_zero = false;
};

inline TailStream stream_tail(const TransitionModel& m, Direction d, std::int64_t horizon) {
  TailStream s;
  const std::int64_t decade = std::max<std::int64_t>(1, horizon / 10);
  double l = 0.0;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const double t = std::exp(l);
    s.sum += t;
    if (n == decade) {
      s.sum_at_decade = s.sum;
      s.log_tail_decade = l;
    }
    if (n >= decade) s.max_n2_tail = std::max(s.max_n2_tail, t * static_cast<double>(n) * n);
    const double a = m.alpha(d, n);
    s.last = n;
    if (a >= 1.0) {
      s.terminated = s.analytic_zero = true;
      s.log_tail_end = -std::numeric_limits<double>::infinity();
      return s;
    }
    l += std::log1p(-a);
    if (l < kLogUnderflow - 40.0) {
      s.terminated = true;
      s.log_tail_end = l;
      return s;
    }
  }
  s.log_tail_end = l;
  return s;
}

}  // namespace detail

inline MeanVerdict mean_verdict(const TransitionModel& m, Direction d, const MeanOptions& opt = {}) {
  MeanVerdict v;
  const auto& f = m.family();
  if (auto exact = f.closed_form_mean(d)) {
    v.status = Finiteness::Finite;
    v.value = *exact;
    v.rule = "closed-form-geometric";
    return v;
  }
  const auto exps = f.exponents(d);
  if (exps && exponent::series(*exps) == Finiteness::Infinite) {
    v.status = Finiteness::Infinite;
    v.rule = "tail-exponents";
    return v;
  }
  const auto s = detail::stream_tail(m, d, opt.horizon);
  v.horizon = s.last;
  v.partial_sum = s.sum;
  if (s.terminated) {
    v.status = Finiteness::Finite;
    v.value = s.sum;
    v.remainder = 0.0;
    v.rule = s.analytic_zero ? "terminating" : "numeric-underflow";
    return v;
  }
  const double H = static_cast<double>(s.last);
  const double t_end = std::exp(s.log_tail_end);
  if (exps) {
    v.status = Finiteness::Finite;
    v.rule = "tail-exponents";
    const double slope = (s.log_tail_decade - s.log_tail_end) / std::log(10.0);
    if (slope > 1.0) {
      const double r = t_end * (H + 1.0) / (slope - 1.0) + 0.5 * t_end;
      v.remainder = r;
      const bool pure_power = exps->size() == 1;
      if (r < opt.tolerance || (pure_power && r * (slope + 1.0) / H < opt.tolerance))
        v.value = s.sum + r;
    }
    return v;
  }
  if (s.max_n2_tail < opt.integrable_threshold) {
    v.status = Finiteness::Finite;
    v.rule = "numeric";
    const double bound = s.max_n2_tail / H;
    v.remainder = bound;
    if (bound < opt.tolerance) v.value = s.sum;
    return v;
  }
  if (s.sum - s.sum_at_decade > opt.growth_threshold) {
    v.status = Finiteness::Infinite;
    v.rule = "numeric";
    return v;
  }
  v.rule = "numeric";
  return v;
}

// ---------------------------------------------------------------------------
// Run-length sampling by inversion of the tail.

class RunSampler {
 public:
  RunSampler(const TransitionModel& m, Direction d, std::int64_t cap = kDefaultRunCap)
      : cache_(&m.cache(d)), dir_(d), cap_(cap), table_(cache_->table(0)) {
    if (cap < 1) throw InvalidParameter("run cap must be >= 1");
  }

  Direction direction() const noexcept { return dir_; }
  std::int64_t cap() const noexcept { return cap_; }

  // Smallest n >= 1 with log T(n+1) <= log(1-v); returns limit+1 when that n exceeds limit.
  std::int64_t operator()(double v, std::int64_t limit = std::numeric_limits<std::int64_t>::max() - 1) {
    const double target = std::log1p(-v);
    for (;;) {
      const auto& t = *table_;
      const std::int64_t s = t.size();
      if (limit < s && t.log_tail[limit] > target) return limit + 1;
      const std::int64_t n = t.search(v, target);
      if (n < s) {
        if (n > cap_) throw SampleCapExceeded(dir_, cap_);
        return n;
      }
      if (s >= cache_->dense_limit()) break;
      table_ = cache_->table(2 * s);
    }
    if (limit < cap_ && cache_->log_tail(limit + 1) > target) return limit + 1;
    auto r = cache_->extended_inverse(target, static_cast<double>(cap_));
    if (!r) throw SampleCapExceeded(dir_, cap_);
    const auto n = static_cast<std::int64_t>(*r);
    return n > limit ? limit + 1 : n;
  }

  // Same inverse on the reals, for run lengths past the 64-bit range.
  double real(double v, double cap = 1e300) {
    const double target = std::log1p(-v);
    for (;;) {
      const auto& t = *table_;
      const std::int64_t s = t.size();
      const std::int64_t n = t.search(v, target);
      if (n < s) return static_cast<double>(n);
      if (s >= cache_->dense_limit()) break;
      table_ = cache_->table(2 * s);
    }
    auto r = cache_->extended_inverse(target, cap);
    if (!r) throw SampleCapExceeded(dir_, static_cast<std::int64_t>(std::min(cap, 9.2e18)));
    return *r;
  }

 private:
  const detail::TailCache* cache_;
  Direction dir_;
  std::int64_t cap_;
  std::shared_ptr<const detail::TailTable> table_;
};

inline std::int64_t inverse_cdf(const TransitionModel& m, Direction d, double v,
                                std::int64_t cap = kDefaultRunCap) {
  if (!(v >= 0.0 && v < 1.0)) throw InvalidParameter("inverse_cdf needs v in [0,1)");
  RunSampler s(m, d, cap);
  return s(v);
}

}  // namespace prw
