#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "prw/oracle.hpp"

using namespace prw;
using Catch::Approx;

namespace {

struct Enumerated {
  std::map<std::int64_t, double> pmf;
  double returned = 0.0;
};

// Sums the probability of every +-1 path of length n.
Enumerated enumerate_paths(const TransitionModel& m, int n) {
  Enumerated e;
  const int free = n - 1;  // the first step is always down
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free); ++mask) {
    double p = 1.0;
    std::int64_t pos = -1, len = 1;
    int dir = -1;
    bool hit = false;
    for (int i = 0; i < free && p > 0.0; ++i) {
      const int next = (mask >> i) & 1 ? 1 : -1;
      const double a = m.alpha(dir > 0 ? Direction::Up : Direction::Down, len);
      if (next == dir) {
        p *= 1.0 - a;
        ++len;
      } else {
        p *= a;
        len = 1;
        dir = next;
      }
      pos += next;
      if (pos == 0) hit = true;
    }
    e.pmf[pos] += p;
    if (hit) e.returned += p;
  }
  return e;
}

}  // namespace

TEST_CASE("exact law against path enumeration") {
  for (const auto& m : {make_constant(0.5, 0.25), make_harmonic(0.5, 0.8), make_prime_lacunar(0.9, 1),
                        make_override(make_constant(0.3, 0.6), {{2, 1.0}}, {{1, 0.0}})})
    for (int n : {1, 2, 5, 11, 14}) {
      auto ex = exact_pmf(m, n);
      auto br = enumerate_paths(m, n);
      CHECK(ex.horizon == n);
      CHECK(ex.total() == Approx(1.0).epsilon(1e-12));
      for (std::int64_t x = -n - 1; x <= n + 1; ++x) CHECK(ex.probability(x) == Approx(br.pmf[x]).margin(1e-14));
      CHECK(exact_return_prob(m, n) == Approx(br.returned).margin(1e-14));
    }
}

TEST_CASE("known values") {
  auto c = make_constant(0.5, 0.25);
  // n = 2: down-down with 3/4, down-up with 1/4
  auto two = exact_pmf(c, 2);
  CHECK(two.probability(-2) == Approx(0.75));
  CHECK(two.probability(0) == Approx(0.25));
  CHECK(exact_return_prob(c, 2) == Approx(0.25));
  CHECK(exact_pmf(c, 1).probability(-1) == 1.0);

  // parity: S_n has the parity of n
  auto e = exact_pmf(make_harmonic(0.5, 0.5), 40);
  for (std::int64_t x = -40; x <= 40; ++x)
    if ((x + 40) % 2) CHECK(e.probability(x) == 0.0);
  CHECK(e.mean() < 0.0);
  CHECK(e.min_position == -40);
  CHECK(e.max_position() == 40);
}

TEST_CASE("mass is conserved over long horizons") {
  for (const auto& m : {make_harmonic(0.3, 0.9), make_random_lacunar(1, 2), make_boundary(BoundaryType::Upper, 2)}) {
    auto e = exact_pmf(m, 500);
    CHECK(e.total() == Approx(1.0).epsilon(1e-12));
    for (double p : e.probabilities) CHECK(p >= 0.0);
    const double r = exact_return_prob(m, 500);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
  // returns grow with the horizon
  auto h = make_harmonic(0.5, 0.5);
  double prev = 0.0;
  for (std::int64_t n : {10, 50, 100, 200}) {
    const double r = exact_return_prob(h, n);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("skeleton law") {
  auto c = make_constant(0.5, 0.25);
  // one pair by direct double sum over the geometric laws
  const std::int64_t cap = 60;
  auto one = exact_skeleton_pmf(c, 1, cap);
  std::map<std::int64_t, double> direct;
  double mu = 0, md = 0;
  for (std::int64_t u = 1; u <= cap; ++u) mu += 0.5 * std::pow(0.5, u - 1);
  for (std::int64_t d = 1; d <= cap; ++d) md += 0.25 * std::pow(0.75, d - 1);
  for (std::int64_t u = 1; u <= cap; ++u)
    for (std::int64_t d = 1; d <= cap; ++d) direct[u - d] += 0.5 * std::pow(0.5, u - 1) * 0.25 * std::pow(0.75, d - 1);
  for (auto [x, p] : direct) CHECK(one.probability(x) == Approx(p).margin(1e-15));
  CHECK(one.retained_mass == Approx(mu * md));
  CHECK(one.total() == Approx(one.retained_mass));

  // two pairs is the self-convolution
  auto two = exact_skeleton_pmf(c, 2, cap);
  for (std::int64_t x = -10; x <= 10; ++x) {
    double s = 0;
    for (auto [y, p] : direct) s += p * one.probability(x - y);
    CHECK(two.probability(x) == Approx(s).margin(1e-15));
  }
  CHECK(two.mean() == Approx(-4.0).margin(1e-6));

  // certain switches put all the mass at 0
  auto ones = exact_skeleton_pmf(make_constant(1, 1), 7, 3);
  CHECK(ones.probability(0) == 1.0);
  CHECK(ones.retained_mass == 1.0);
}

TEST_CASE("oracle limits") {
  auto c = make_constant(0.5, 0.5);
  CHECK_THROWS_AS(exact_pmf(c, 501), HorizonTooLarge);
  CHECK_THROWS_AS(exact_return_prob(c, 501), HorizonTooLarge);
  CHECK_THROWS_AS(exact_pmf(c, 0), InvalidParameter);
  CHECK_THROWS_AS(exact_skeleton_pmf(c, 1001, 100), BudgetExceeded);
  CHECK_THROWS_AS(exact_skeleton_pmf(c, 100001, 1), BudgetExceeded);
  CHECK_NOTHROW(exact_skeleton_pmf(c, 100000, 1));
  CHECK_THROWS_AS(exact_skeleton_pmf(c, 0, 10), InvalidParameter);
}
