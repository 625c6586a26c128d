#include <catch_amalgamated.hpp>

#include <cmath>

#include "prw/tails.hpp"

using namespace prw;
using Catch::Approx;

namespace {

// Plain running product, independent of the cached log-domain tables.
double product_tail(const TransitionModel& m, Direction d, std::int64_t n) {
  double t = 1.0;
  for (std::int64_t k = 1; k < n; ++k) t *= 1.0 - m.alpha(d, k);
  return t;
}

}  // namespace

TEST_CASE("tail of one is one") {
  for (const auto& m : {make_constant(0.3, 0.7), make_harmonic(0.5, 2.0), make_boundary(BoundaryType::Lower, 1)})
    for (Direction d : kDirections) {
      CHECK(tail(m, d, 1) == 1.0);
      CHECK(truncated_mean(m, d, 1) == 1.0);
    }
}

TEST_CASE("constant tails and truncated means") {
  auto m = make_constant(0.5, 0.25);
  CHECK(tail(m, Direction::Up, 3) == Approx(0.25));
  CHECK(truncated_mean(m, Direction::Up, 3) == Approx(1.75));
  CHECK(tail(m, Direction::Down, 4) == Approx(std::pow(0.75, 3)));
  auto v = mean_verdict(m, Direction::Up);
  CHECK(v.status == Finiteness::Finite);
  REQUIRE(v.value);
  CHECK(*v.value == Approx(2.0));
  CHECK(*mean_verdict(m, Direction::Down).value == Approx(4.0));
  CHECK(truncated_mean(m, Direction::Up, 200) == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("tails agree with a direct product") {
  for (const auto& m : {make_harmonic(0.5, 1.7), make_log_family({1, 1}, {0.5, 2}), make_boundary(BoundaryType::Upper, 2),
                        make_prime_lacunar(0.9, 2)})
    for (Direction d : kDirections)
      for (std::int64_t n : {2, 5, 17, 100, 1000, 30000}) CHECK(tail(m, d, n) == Approx(product_tail(m, d, n)).epsilon(1e-10));
}

TEST_CASE("analytic zero versus underflow") {
  auto one = make_constant(1, 1);
  CHECK(tail(one, Direction::Up, 2) == 0.0);
  auto p = tail_point(one, Direction::Up, 2);
  CHECK(p.analytic_zero);
  CHECK(!p.underflow);

  auto m = make_constant(0.5, 0.5);
  auto q = tail_point(m, Direction::Up, 2000);
  CHECK(q.value == 0.0);
  CHECK(q.underflow);
  CHECK(!q.analytic_zero);
  CHECK(q.log_tail == Approx(1999 * std::log(0.5)));
}

TEST_CASE("harmonic tail exponent") {
  auto h = make_harmonic(0.5, 0.5);
  const double r5 = std::sqrt(1e5) * tail(h, Direction::Up, 100000);
  const double r6 = std::sqrt(1e6) * tail(h, Direction::Up, 1000000);
  CHECK(std::abs(r6 / r5 - 1.0) < 0.02);
  // for lambda/n with lambda < 1 the constant is 1/Gamma(1 - lambda)
  CHECK(r6 == Approx(1.0 / std::tgamma(0.5)).epsilon(1e-5));
  // beyond the dense table
  CHECK(std::sqrt(1e8) * tail(h, Direction::Up, 100000000) == Approx(1.0 / std::tgamma(0.5)).epsilon(1e-6));
  for (std::int64_t n = 1000; n <= 1000000; n *= 10)
    CHECK(std::abs(log_tail(h, Direction::Up, n) + 0.5 * std::log(static_cast<double>(n))) < 1.0);
}

TEST_CASE("tail exponents") {
  CHECK(tail_exponents(make_harmonic(0.5, 0.5), Direction::Up) == std::vector<double>{0.5});
  CHECK(tail_exponents(make_log_family({1, 1}, {1, 1}), Direction::Down) == std::vector<double>{1, 1});
  CHECK(tail_exponents(make_log_family({0.5}, {0.5}), Direction::Up) == std::vector<double>{0.5});
  TabulatedSpec s{{0.5}, {}};
  CHECK(!tail_exponents(make_tabulated(s, s), Direction::Up));
}

TEST_CASE("mean verdicts") {
  CHECK(mean_verdict(make_harmonic(0.5, 0.5), Direction::Up).status == Finiteness::Infinite);
  CHECK(mean_verdict(make_log_family({1, 2}, {1, 2}), Direction::Up).status == Finiteness::Finite);
  CHECK(mean_verdict(make_log_family({1, 1}, {1, 1}), Direction::Up).status == Finiteness::Infinite);
  CHECK(mean_verdict(make_boundary(BoundaryType::Upper, 2), Direction::Up).status == Finiteness::Infinite);

  // harmonic lambda > 1 has a finite mean; compare with a long direct sum
  auto h = make_harmonic(2.5, 2.5);
  auto v = mean_verdict(h, Direction::Up);
  CHECK(v.status == Finiteness::Finite);
  double sum = 0.0, t = 1.0;
  for (std::int64_t n = 1; n <= 20'000'000; ++n) {
    sum += t;
    t *= 1.0 - h.alpha(Direction::Up, n);
  }
  REQUIRE(v.value);
  CHECK(*v.value == Approx(sum).epsilon(1e-6));
  CHECK(*v.value >= 1.0);

  // a finite table ending in a certain switch
  TabulatedSpec s{{0.5, 0.5, 1.0}, {TailRuleKind::RepeatLast}};
  auto tv = mean_verdict(make_tabulated(s, s), Direction::Up);
  CHECK(tv.status == Finiteness::Finite);
  CHECK(*tv.value == Approx(1.75));
}

TEST_CASE("inverse cdf") {
  auto m = make_constant(0.5, 0.5);
  CHECK(inverse_cdf(m, Direction::Up, 0.0) == 1);
  CHECK(inverse_cdf(m, Direction::Up, 0.5) == 1);
  CHECK(inverse_cdf(m, Direction::Up, 0.75) == 2);
  CHECK(inverse_cdf(m, Direction::Up, 0.7500001) == 3);
  auto one = make_constant(1, 1);
  for (double v : {0.0, 0.3, 0.999999}) CHECK(inverse_cdf(one, Direction::Down, v) == 1);
  CHECK_THROWS_AS(inverse_cdf(m, Direction::Up, 1.0), InvalidParameter);
  CHECK_THROWS_AS(inverse_cdf(m, Direction::Up, -0.1), InvalidParameter);

  // generalized inverse on a grid: tail(n + 1) <= 1 - v < tail(n), up to rounding of the log tail
  auto h = make_harmonic(0.5, 0.8);
  std::int64_t prev = 1;
  for (int i = 0; i < 2000; ++i) {
    const double v = i / 2000.0;
    const auto n = inverse_cdf(h, Direction::Down, v);
    CHECK(n >= prev);
    prev = n;
    CHECK(tail(h, Direction::Down, n + 1) <= (1.0 - v) * (1 + 1e-12));
    if (n > 1) CHECK(tail(h, Direction::Down, n) > (1.0 - v) * (1 - 1e-12));
  }
}

TEST_CASE("run sampler cap") {
  auto h = make_harmonic(0.5, 0.5);
  RunSampler s(h, Direction::Up, 1000);
  CHECK(s(0.5) == 1);
  CHECK_THROWS_AS(s(0.99999), SampleCapExceeded);
  // a limit below the cap reports limit + 1 instead of throwing
  CHECK(s(0.99999, 100) == 101);
}
