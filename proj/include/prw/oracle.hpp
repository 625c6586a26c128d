#pragma once

#include <cstdint>
#include <vector>

#include "prw/tails.hpp"
#include "prw/transitions.hpp"

namespace prw {

inline constexpr std::int64_t kOracleMaxHorizon = 500;
inline constexpr std::int64_t kSkeletonStateBudget = 100'000;

struct ExactDistribution {
  std::int64_t horizon = 0;
  std::int64_t min_position = 0;
  std::vector<double> probabilities;  // probabilities[i] = P(X = min_position + i)
  double retained_mass = 1.0;

  double probability(std::int64_t x) const {
    const std::int64_t i = x - min_position;
    if (i < 0 || i >= static_cast<std::int64_t>(probabilities.size())) return 0.0;
    return probabilities[static_cast<std::size_t>(i)];
  }
  std::int64_t max_position() const { return min_position + static_cast<std::int64_t>(probabilities.size()) - 1; }
  double total() const {
    double s = 0.0;
    for (double p : probabilities) s += p;
    return s;
  }
  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i)
      s += static_cast<double>(min_position + static_cast<std::int64_t>(i)) * probabilities[i];
    return s;
  }
};

namespace detail {

// Dense forward evolution of (position, direction, run length), starting from S_1 = -1 in a descent.
// With absorb set, mass reaching 0 is removed and accumulated instead.
struct ExactWalk {
  ExactWalk(const TransitionModel& m, std::int64_t n) : n_(n), width_(2 * n + 1), runs_(n + 1) {
    for (Direction d : kDirections) {
      auto& a = alpha_[index(d)];
      a.resize(static_cast<std::size_t>(n) + 1);
      for (std::int64_t k = 1; k <= n; ++k) a[k] = m.alpha(d, k);
    }
    cur_.assign(2 * runs_ * width_, 0.0);
    next_.assign(cur_.size(), 0.0);
    at(cur_, Direction::Down, 1, -1) = 1.0;
  }

  double& at(std::vector<double>& v, Direction d, std::int64_t len, std::int64_t pos) {
    return v[(index(d) * runs_ + len) * width_ + (pos + n_)];
  }

  // Advances from time t to t+1; returns the mass that hit 0 if absorbing.
  double step(std::int64_t t, bool absorb) {
    std::fill(next_.begin(), next_.end(), 0.0);
    double hit = 0.0;
    for (Direction d : kDirections) {
      const auto& a = alpha_[index(d)];
      for (std::int64_t len = 1; len <= t; ++len) {
        const double sw = a[len];
        for (std::int64_t pos = -t; pos <= t; ++pos) {
          const double p = at(cur_, d, len, pos);
          if (p == 0.0) continue;
          const std::int64_t stay = pos + step_of(d);
          const std::int64_t flip = pos - step_of(d);
          const double p_stay = p * (1.0 - sw), p_flip = p * sw;
          if (absorb && stay == 0) hit += p_stay;
          else if (p_stay != 0.0) at(next_, d, len + 1, stay) += p_stay;
          if (absorb && flip == 0) hit += p_flip;
          else if (p_flip != 0.0) at(next_, opposite(d), 1, flip) += p_flip;
        }
      }
    }
    cur_.swap(next_);
    return hit;
  }

  ExactDistribution marginal(std::int64_t t) {
    ExactDistribution e;
    e.horizon = t;
    e.min_position = -t;
    e.probabilities.assign(static_cast<std::size_t>(2 * t + 1), 0.0);
    for (Direction d : kDirections)
      for (std::int64_t len = 1; len <= t; ++len)
        for (std::int64_t pos = -t; pos <= t; ++pos) e.probabilities[pos + t] += at(cur_, d, len, pos);
    return e;
  }

 private:
  static std::int64_t step_of(Direction d) { return d == Direction::Up ? 1 : -1; }

  std::int64_t n_;
  std::int64_t width_;
  std::int64_t runs_;
  std::vector<double> alpha_[2];
  std::vector<double> cur_, next_;
};

inline void check_horizon(std::int64_t n) {
  if (n < 1) throw InvalidParameter("oracle horizon must be >= 1");
  if (n > kOracleMaxHorizon) throw HorizonTooLarge("oracle horizon " + std::to_string(n) + " exceeds 500");
}

}  // namespace detail

inline ExactDistribution exact_pmf(const TransitionModel& m, std::int64_t n) {
  detail::check_horizon(n);
  detail::ExactWalk w(m, n);
  for (std::int64_t t = 1; t < n; ++t) w.step(t, false);
  return w.marginal(n);
}

inline double exact_mean(const TransitionModel& m, std::int64_t n) { return exact_pmf(m, n).mean(); }

inline double exact_return_prob(const TransitionModel& m, std::int64_t n) {
  detail::check_horizon(n);
  detail::ExactWalk w(m, n);
  double hit = 0.0;
  for (std::int64_t t = 1; t < n; ++t) hit += w.step(t, true);
  return hit;
}

// Law of M_pairs with both run lengths truncated to [1, run_cap]; the lost mass is reported, not renormalized.
inline ExactDistribution exact_skeleton_pmf(const TransitionModel& m, std::int64_t pairs, std::int64_t run_cap) {
  if (pairs < 1 || run_cap < 1) throw InvalidParameter("pairs and run_cap must be >= 1");
  if (pairs > kSkeletonStateBudget / run_cap)
    throw BudgetExceeded("pairs * run_cap exceeds the state budget of " + std::to_string(kSkeletonStateBudget));
  std::vector<double> pu(static_cast<std::size_t>(run_cap) + 1, 0.0), pd = pu;
  for (Direction d : kDirections) {
    auto& p = d == Direction::Up ? pu : pd;
    for (std::int64_t k = 1; k <= run_cap; ++k) p[k] = tail(m, d, k) * m.alpha(d, k);
  }
  // One increment Y = tau^u - tau^d on [1 - cap, cap - 1].
  const std::int64_t span = run_cap - 1;
  std::vector<double> y(static_cast<std::size_t>(2 * span + 1), 0.0);
  double mass_u = 0.0, mass_d = 0.0;
  for (std::int64_t k = 1; k <= run_cap; ++k) mass_u += pu[k], mass_d += pd[k];
  for (std::int64_t u = 1; u <= run_cap; ++u)
    for (std::int64_t d = 1; d <= run_cap; ++d) y[u - d + span] += pu[u] * pd[d];

  ExactDistribution e;
  e.horizon = pairs;
  e.min_position = -span;
  e.probabilities = y;
  for (std::int64_t k = 2; k <= pairs; ++k) {
    std::vector<double> next(e.probabilities.size() + y.size() - 1, 0.0);
    for (std::size_t i = 0; i < e.probabilities.size(); ++i) {
      if (e.probabilities[i] == 0.0) continue;
      for (std::size_t j = 0; j < y.size(); ++j) next[i + j] += e.probabilities[i] * y[j];
    }
    e.probabilities.swap(next);
    e.min_position -= span;
  }
  e.retained_mass = std::pow(mass_u * mass_d, static_cast<double>(pairs));
  return e;
}

}  // namespace prw
