#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "prw/family.hpp"

namespace prw {

inline constexpr std::int64_t kDefaultDenseLimit = std::int64_t{1} << 22;

namespace detail {

inline constexpr std::size_t kGuideBuckets = 1u << 14;
inline constexpr std::int64_t kInitialTableSize = 1024;
inline constexpr std::int64_t kCheckpointStride = std::int64_t{1} << 16;

// Immutable snapshot of the first size() log-tails of one direction.
struct TailTable {
  std::vector<double> log_tail;  // log_tail[i] = log T(i+1)
  std::vector<double> theta;     // theta[i] = T(1) + ... + T(i+1)
  std::vector<std::uint32_t> guide;
  std::int64_t zero_from = 0;  // first n with T(n) = 0 analytically, 0 if none seen

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(log_tail.size()); }

  // Smallest n in [1, size()-1] with log_tail[n] <= target, or size() if none.
  std::int64_t search(double v, double target) const {
    const std::int64_t s = size();
    std::size_t j = static_cast<std::size_t>(v * static_cast<double>(kGuideBuckets));
    if (j >= kGuideBuckets) j = kGuideBuckets - 1;
    std::int64_t lo = std::max<std::int64_t>(1, guide[j]);
    std::int64_t hi = std::min<std::int64_t>(s, guide[j + 1]);
    auto first_below = [&](std::int64_t a, std::int64_t b) {
      auto it = std::partition_point(log_tail.begin() + a, log_tail.begin() + b,
                                     [target](double x) { return x > target; });
      return static_cast<std::int64_t>(it - log_tail.begin());
    };
    if (lo <= hi) {
      std::int64_t n = first_below(lo, hi);
      bool ok = (n == s || log_tail[n] <= target) && (n == 1 || log_tail[n - 1] > target);
      if (ok) return n;
    }
    return first_below(1, s);
  }
};

// log(1 - alpha(x)) integrated past the dense table by Euler-Maclaurin.
class SmoothExtension {
 public:
  SmoothExtension(const Family& f, Direction d, std::int64_t n0, double log_tail_n0)
      : family_(&f), dir_(d), n0_(static_cast<double>(n0)), l0_(log_tail_n0), f0_(g(n0_)) {
    cum_.push_back(0.0);
  }

  // Approximate log T(x) for real x >= n0.
  double log_tail(double x) {
    if (x <= n0_) return l0_;
    const double t = std::log(x / n0_);
    const std::size_t k = static_cast<std::size_t>(t / kStep);
    ensure(k);
    const double a = n0_ * std::exp(static_cast<double>(k) * kStep);
    return l0_ + cum_[k] + panel(std::min(a, x), x) + 0.5 * (f0_ - g(x));
  }

  // Smallest integer m in (n0, cap] with log_tail(m) <= target, as a real.
  std::optional<double> first_below(double target, double cap) {
    double lo = n0_;
    double hi = n0_ + 1.0;
    if (log_tail(hi) <= target) return hi;
    while (log_tail(hi) > target) {
      if (hi >= cap) return std::nullopt;
      lo = hi;
      hi = std::min(cap, hi * 2.0);
    }
    // Illinois iteration on u = log x, then integer resolution.
    double ua = std::log(lo), ub = std::log(hi);
    double fa = log_tail(lo) - target, fb = log_tail(hi) - target;
    int side = 0;
    for (int it = 0; it < 200 && hi - lo > 1.0 && hi > lo * (1.0 + 4e-16); ++it) {
      double uc = (fa == fb) ? 0.5 * (ua + ub) : ub - fb * (ub - ua) / (fb - fa);
      if (!(uc > ua && uc < ub)) uc = 0.5 * (ua + ub);
      double xc = std::exp(uc);
      if (xc <= lo || xc >= hi) xc = 0.5 * (lo + hi);
      uc = std::log(xc);
      const double fc = log_tail(xc) - target;
      if (fc > 0) {
        lo = xc, ua = uc, fa = fc;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        hi = xc, ub = uc, fb = fc;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
    }
    if (lo > 9.0e15) return std::ceil(hi);  // integers no longer resolvable
    double m = std::ceil(lo);
    if (m <= lo) m = lo + 1.0;
    while (m < hi && log_tail(m) > target) m += 1.0;
    return std::min(m, std::ceil(hi));
  }

 private:
  static constexpr double kStep = 0.25;

  double g(double x) const {
    const double a = family_->alpha_at(dir_, x);
    return a >= 1.0 ? -std::numeric_limits<double>::infinity() : std::log1p(-a);
  }

  // Integral of g over [a, b] with x = e^u, 10-point Gauss-Legendre in u.
  double panel(double a, double b) const {
    static constexpr std::array<double, 5> nodes{0.1488743389816312, 0.4333953941292472,
                                                 0.6794095682990244, 0.8650633666889845,
                                                 0.9739065285171717};
    static constexpr std::array<double, 5> weights{0.2955242247147529, 0.2692667193099963,
                                                   0.2190863625159820, 0.1494513491505806,
                                                   0.0666713443086881};
    if (b <= a) return 0.0;
    const double ua = std::log(a), ub = std::log(b);
    const double c = 0.5 * (ua + ub), h = 0.5 * (ub - ua);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double x1 = std::exp(c + h * nodes[i]);
      const double x2 = std::exp(c - h * nodes[i]);
      s += weights[i] * (g(x1) * x1 + g(x2) * x2);
    }
    return s * h;
  }

  void ensure(std::size_t k) {
    while (cum_.size() <= k) {
      const double j = static_cast<double>(cum_.size() - 1);
      const double a = n0_ * std::exp(j * kStep);
      const double b = n0_ * std::exp((j + 1.0) * kStep);
      cum_.push_back(cum_.back() + panel(a, b));
    }
  }

  const Family* family_;
  Direction dir_;
  double n0_;
  double l0_;
  double f0_;
  std::vector<double> cum_;
};

// Exact streaming past the dense table with checkpoints every kCheckpointStride.
class StreamExtension {
 public:
  StreamExtension(const Family& f, Direction d, std::int64_t n0, double log_tail_n0)
      : family_(&f), dir_(d), n0_(n0) {
    cp_.push_back(log_tail_n0);
  }

  double log_tail(std::int64_t n) {
    if (n <= n0_) return cp_.front();
    const std::int64_t j = (n - n0_) / kCheckpointStride;
    ensure(j);
    return advance(cp_[j], n0_ + j * kCheckpointStride, n);
  }

  // Smallest m in (n0, cap] with log T(m) <= target.
  std::optional<std::int64_t> first_below(double target, std::int64_t cap) {
    std::size_t j = 1;
    for (;; ++j) {
      const std::int64_t at = n0_ + static_cast<std::int64_t>(j) * kCheckpointStride;
      if (at - kCheckpointStride >= cap) return std::nullopt;
      ensure(j);
      if (cp_[j] <= target) break;
    }
    std::int64_t m = n0_ + static_cast<std::int64_t>(j - 1) * kCheckpointStride;
    double l = cp_[j - 1];
    while (l > target) {
      l += step(m);
      ++m;
      if (m > cap) return std::nullopt;
    }
    return m;
  }

 private:
  double step(std::int64_t k) const {
    const double a = family_->alpha(dir_, k);
    return a >= 1.0 ? -std::numeric_limits<double>::infinity() : std::log1p(-a);
  }

  double advance(double l, std::int64_t from, std::int64_t to) const {
    for (std::int64_t k = from; k < to; ++k) l += step(k);
    return l;
  }

  void ensure(std::size_t j) {
    while (cp_.size() <= j) {
      const std::int64_t from = n0_ + static_cast<std::int64_t>(cp_.size() - 1) * kCheckpointStride;
      cp_.push_back(advance(cp_.back(), from, from + kCheckpointStride));
    }
  }

  const Family* family_;
  Direction dir_;
  std::int64_t n0_;
  std::vector<double> cp_;
};

// Append-only memo of log-tails for one direction of one model.
class TailCache {
 public:
  TailCache(const Family& f, Direction d, std::int64_t dense_limit = kDefaultDenseLimit)
      : family_(&f), dir_(d), dense_limit_(dense_limit) {}

  TailCache(const TailCache&) = delete;
  TailCache& operator=(const TailCache&) = delete;

  std::int64_t dense_limit() const noexcept { return dense_limit_; }

  // Snapshot holding at least min(min_size, dense_limit) entries.
  std::shared_ptr<const TailTable> table(std::int64_t min_size) const {
    min_size = std::min(min_size, dense_limit_);
    std::lock_guard lock(mutex_);
    if (!table_ || table_->size() < min_size) {
      std::int64_t target = table_ ? table_->size() : 0;
      target = std::max(target, kInitialTableSize);
      while (target < min_size) target *= 2;
      grow(std::min(target, dense_limit_));
    }
    return table_;
  }

  double log_tail(std::int64_t n) const {
    if (n <= dense_limit_) return table(n)->log_tail[n - 1];
    auto t = table(dense_limit_);
    if (t->zero_from != 0) return -std::numeric_limits<double>::infinity();
    std::lock_guard lock(ext_mutex_);
    if (smooth()) return smooth_ext(*t).log_tail(static_cast<double>(n));
    return stream_ext(*t).log_tail(n);
  }

  double log_tail_real(double x) const {
    if (x <= static_cast<double>(dense_limit_)) return log_tail(static_cast<std::int64_t>(x));
    auto t = table(dense_limit_);
    if (t->zero_from != 0) return -std::numeric_limits<double>::infinity();
    std::lock_guard lock(ext_mutex_);
    if (smooth()) return smooth_ext(*t).log_tail(x);
    return stream_ext(*t).log_tail(static_cast<std::int64_t>(x));
  }

  // Smallest n >= 1 with log T(n+1) <= target, searched past the dense table.
  // Returns nullopt if that n exceeds cap.
  std::optional<double> extended_inverse(double target, double cap) const {
    auto t = table(dense_limit_);
    if (t->zero_from != 0) return static_cast<double>(t->zero_from - 1);
    std::lock_guard lock(ext_mutex_);
    if (smooth()) {
      auto m = smooth_ext(*t).first_below(target, cap + 1.0);
      if (!m) return std::nullopt;
      return *m - 1.0;
    }
    const double icap = std::min(cap, 4.0e18);
    auto m = stream_ext(*t).first_below(target, static_cast<std::int64_t>(icap) + 1);
    if (!m) return std::nullopt;
    return static_cast<double>(*m - 1);
  }

  bool smooth() const {
    const std::int64_t s = family_->smooth_from(dir_);
    return s > 0 && s <= dense_limit_;
  }

 private:
  void grow(std::int64_t size) const {
    auto next = std::make_shared<TailTable>();
    std::int64_t old = 0;
    if (table_) {
      next->log_tail.reserve(size);
      next->theta.reserve(size);
      next->log_tail = table_->log_tail;
      next->theta = table_->theta;
      next->zero_from = table_->zero_from;
      old = table_->size();
    } else {
      next->log_tail.reserve(size);
      next->theta.reserve(size);
      next->log_tail.push_back(0.0);
      next->theta.push_back(1.0);
      old = 1;
    }
    double l = next->log_tail.back();
    double th = next->theta.back();
    for (std::int64_t n = old; n < size; ++n) {
      // log T(n+1) = log T(n) + log(1 - alpha_n)
      const double a = family_->alpha(dir_, n);
      if (a >= 1.0) {
        l = -std::numeric_limits<double>::infinity();
        if (next->zero_from == 0) next->zero_from = n + 1;
      } else {
        l += std::log1p(-a);
      }
      th += std::exp(l);
      next->log_tail.push_back(l);
      next->theta.push_back(th);
    }
    build_guide(*next);
    table_ = std::move(next);
  }

  static void build_guide(TailTable& t) {
    t.guide.assign(kGuideBuckets + 1, static_cast<std::uint32_t>(t.size()));
    std::int64_t i = 1;
    const std::int64_t s = t.size();
    for (std::size_t j = 0; j <= kGuideBuckets; ++j) {
      const double v = static_cast<double>(j) / static_cast<double>(kGuideBuckets);
      const double target = std::log1p(-v);
      while (i < s && t.log_tail[i] > target) ++i;
      t.guide[j] = static_cast<std::uint32_t>(i);
    }
  }

  SmoothExtension& smooth_ext(const TailTable& t) const {
    if (!smooth_) smooth_ = std::make_unique<SmoothExtension>(*family_, dir_, t.size(), t.log_tail.back());
    return *smooth_;
  }

  StreamExtension& stream_ext(const TailTable& t) const {
    if (!stream_) stream_ = std::make_unique<StreamExtension>(*family_, dir_, t.size(), t.log_tail.back());
    return *stream_;
  }

  const Family* family_;
  Direction dir_;
  std::int64_t dense_limit_;
  mutable std::mutex mutex_;
  mutable std::shared_ptr<const TailTable> table_;
  mutable std::mutex ext_mutex_;
  mutable std::unique_ptr<SmoothExtension> smooth_;
  mutable std::unique_ptr<StreamExtension> stream_;
};

}  // namespace detail
}  // namespace prw
