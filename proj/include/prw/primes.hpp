#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <vector>

namespace prw {

// Incremental sieve shared by every model; trial division beyond the sieve.
class PrimeTable {
 public:
  static PrimeTable& instance() {
    static PrimeTable table;
    return table;
  }

  bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    std::lock_guard lock(mutex_);
    if (n <= kSieveMax) {
      if (n > limit_) extend(std::min<std::int64_t>(kSieveMax, std::max(2 * limit_, n)));
      return !composite_[static_cast<std::size_t>(n)];
    }
    const auto root = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n))) + 1;
    if (root > limit_) extend(std::min<std::int64_t>(kSieveMax, std::max(2 * limit_, root)));
    for (std::int64_t p : primes_) {
      if (p * p > n) break;
      if (n % p == 0) return false;
    }
    return true;
  }

  // n in P_r = union over k <= r of k * primes.
  bool in_multiples(std::int64_t n, int r) {
    for (int k = 1; k <= r; ++k)
      if (n % k == 0 && is_prime(n / k)) return true;
    return false;
  }

 private:
  static constexpr std::int64_t kSieveMax = std::int64_t{1} << 27;

  PrimeTable() { extend(1 << 16); }

  void extend(std::int64_t limit) {
    composite_.assign(static_cast<std::size_t>(limit) + 1, false);
    composite_[0] = composite_[1] = true;
    for (std::int64_t i = 2; i * i <= limit; ++i)
      if (!composite_[i])
        for (std::int64_t j = i * i; j <= limit; j += i) composite_[j] = true;
    primes_.clear();
    for (std::int64_t i = 2; i <= limit; ++i)
      if (!composite_[i]) primes_.push_back(i);
    limit_ = limit;
  }

  std::mutex mutex_;
  std::vector<bool> composite_;
  std::vector<std::int64_t> primes_;
  std::int64_t limit_ = 0;
};

}  // namespace prw
