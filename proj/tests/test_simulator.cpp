#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "prw/oracle.hpp"
#include "prw/simulator.hpp"

using namespace prw;
using Catch::Approx;

namespace {

TrajectorySummary with_path(const TransitionModel& m, std::int64_t steps, std::uint64_t seed) {
  SimulationOptions o;
  o.store_path = true;
  return simulate(m, steps, seed, o);
}

// Recomputes every summary field from the stored path and runs.
void check_consistent(const TrajectorySummary& s) {
  REQUIRE(s.positions);
  const auto& p = *s.positions;
  REQUIRE(static_cast<std::int64_t>(p.size()) == s.steps + 1);
  CHECK(p.front() == 0);
  CHECK(p.back() == s.final_position);
  std::int64_t lo = 0, hi = 0, returns = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    CHECK(std::abs(p[k] - p[k - 1]) == 1);
    lo = std::min(lo, p[k]);
    hi = std::max(hi, p[k]);
    if (p[k] == 0 && p[k - 1] != 0) ++returns;
  }
  CHECK(lo == s.min_pos);
  CHECK(hi == s.max_pos);
  CHECK(returns == s.returns_to_origin);

  // direction changes happen exactly at the breaking times
  std::set<std::int64_t> breaks(s.breaking_times.begin(), s.breaking_times.end());
  for (std::size_t k = 1; k + 1 < p.size(); ++k) {
    const bool turn = (p[k] - p[k - 1]) != (p[k + 1] - p[k]);
    CHECK(turn == (breaks.count(static_cast<std::int64_t>(k)) == 1));
  }
  if (s.steps > 0) CHECK(p[1] == -1);

  std::int64_t t = 0;
  for (std::size_t i = 0; i < s.run_lengths.size(); ++i) {
    t += s.run_lengths[i];
    CHECK(s.breaking_times[i] == t);
  }
  std::int64_t M = 0, T = 0, changes = 0;
  int last = 0;
  for (std::size_t i = 0; i + 1 < s.run_lengths.size(); i += 2) {
    M += s.run_lengths[i + 1] - s.run_lengths[i];
    T += s.run_lengths[i + 1] + s.run_lengths[i];
    CHECK(s.skeleton_M[i / 2] == M);
    CHECK(s.skeleton_T[i / 2] == T);
    const int sg = (M > 0) - (M < 0);
    if (sg != 0) {
      if (last != 0 && sg != last) ++changes;
      last = sg;
    }
  }
  CHECK(static_cast<std::int64_t>(s.skeleton_M.size()) == s.completed_pairs);
  CHECK(s.final_M == M);
  CHECK(s.sign_changes_M == changes);
}

}  // namespace

TEST_CASE("certain switches alternate every step") {
  auto s = with_path(make_constant(1, 1), 7, 3);
  CHECK(*s.positions == std::vector<std::int64_t>{0, -1, 0, -1, 0, -1, 0, -1});
  CHECK(s.returns_to_origin == 3);
  CHECK(s.completed_pairs == 3);
  CHECK(s.final_M == 0);
  CHECK(s.skeleton_T.back() == 6);

  auto sk = skeleton(make_constant(1, 1), 50, 9);
  CHECK(sk.final_M == 0);
  for (std::size_t k = 0; k < sk.T.size(); ++k) CHECK(sk.T[k] == 2 * static_cast<std::int64_t>(k + 1));
  CHECK(sk.sign_changes == 0);
}

TEST_CASE("same seed gives the same trajectory") {
  for (const auto& m : {make_harmonic(0.5, 0.5), make_constant(0.3, 0.6), make_random_lacunar(1, 4)}) {
    auto a = with_path(m, 5000, 77), b = with_path(m, 5000, 77), c = with_path(m, 5000, 78);
    CHECK(a == b);
    CHECK(a.positions != c.positions);
  }
  for (const auto& m : {make_harmonic(0.5, 0.5), make_constant(0.3, 0.6)}) CHECK(skeleton(m, 200, 5).M == skeleton(m, 200, 5).M);
}

TEST_CASE("summary fields agree with the stored path") {
  for (const auto& m : {make_harmonic(0.5, 0.5), make_constant(0.3, 0.6), make_prime_lacunar(0.7, 2),
                        make_boundary(BoundaryType::Upper, 1), make_constant(1, 1)})
    for (std::uint64_t seed = 0; seed < 20; ++seed) check_consistent(with_path(m, 3000, seed));
}

TEST_CASE("walk runs match the skeleton under the same seed") {
  auto m = make_harmonic(0.4, 0.7);
  auto s = simulate(m, 1'000'000, 12);
  auto k = skeleton(m, s.completed_pairs, 12);
  CHECK(k.M == s.skeleton_M);
  CHECK(k.T == s.skeleton_T);
}

TEST_CASE("skeleton drift") {
  auto m = make_constant(0.5, 0.25);
  const std::int64_t k = 100000;
  auto sk = skeleton(m, k, 2024, {false});
  // sd of tau_u - tau_d is sqrt(14)
  CHECK(static_cast<double>(sk.final_M) / k == Approx(-2.0).margin(5 * std::sqrt(14.0 / k)));
  CHECK(static_cast<double>(sk.final_T) / k == Approx(6.0).margin(5 * std::sqrt(14.0 / k)));
  CHECK(sk.M.empty());

  auto fl = skeleton<double>(m, k, 2024, {false});
  CHECK(fl.final_M == static_cast<double>(sk.final_M));
}

TEST_CASE("randomized skeleton") {
  auto m = make_constant(0.5, 0.25);
  auto r = randomized_skeleton(m, 0.999, 100000, 8);
  CHECK(static_cast<double>(r.rises) / 100000 == Approx(0.999).margin(0.001));
  CHECK(r.final_M > 0);
  // the run draws line up with the plain skeleton
  auto a = randomized_skeleton(m, 0.5, 1000, 8);
  auto s = skeleton(m, 1000, 8);
  std::int64_t ups = 0;
  for (std::size_t i = 0; i < a.M.size(); ++i) {
    const std::int64_t inc = a.M[i] - (i ? a.M[i - 1] : 0);
    const std::int64_t tu = s.M[i] - (i ? s.M[i - 1] : 0) + (s.T[i] - (i ? s.T[i - 1] : 0));
    if (inc > 0) {
      CHECK(2 * inc == tu);
      ++ups;
    }
  }
  CHECK(ups == a.rises);
  CHECK_THROWS_AS(randomized_skeleton(m, 1.0, 10, 1), InvalidParameter);
}

TEST_CASE("empirical law of S_n matches the exact law") {
  // per-step Bernoulli walk with its own generator as a second, unrelated sampler
  auto m = make_harmonic(0.5, 0.8);
  const std::int64_t n = 12;
  const int reps = 200000;
  auto exact = exact_pmf(m, n);
  std::map<std::int64_t, double> inv, bern;
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int r = 0; r < reps; ++r) {
    inv[simulate(m, n, replica_seed(5, r), {false, false}).final_position] += 1.0 / reps;
    std::int64_t pos = 0, len = 0;
    Direction d = Direction::Down;
    for (std::int64_t t = 0; t < n; ++t) {
      if (len > 0 && u(g) < m.alpha(d, len)) {
        d = opposite(d);
        len = 0;
      }
      pos += step(d);
      ++len;
    }
    bern[pos] += 1.0 / reps;
  }
  double worst_inv = 0, worst_bern = 0;
  for (std::int64_t x = -n; x <= n; ++x) {
    worst_inv = std::max(worst_inv, std::abs(inv[x] - exact.probability(x)));
    worst_bern = std::max(worst_bern, std::abs(bern[x] - exact.probability(x)));
  }
  CHECK(worst_inv < 0.005);
  CHECK(worst_bern < 0.005);
}

TEST_CASE("coupling") {
  auto a = make_constant(0.6, 0.3), b = make_constant(0.3, 0.6);
  CHECK(tail_dominance(a, b, 1000));
  CHECK(!tail_dominance(b, a, 1000));
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto r = couple(a, b, 2000, s);
    CHECK(r.violations == 0);
    CHECK(!r.first_violation);
    CHECK(r.a == simulate(a, 2000, s));
  }
  auto same = couple(a, a, 5000, 3);
  CHECK(same.identical);
  CHECK(same.violations == 0);
  std::int64_t v = 0;
  for (std::uint64_t s = 0; s < 50; ++s) v += couple(b, a, 2000, s).violations;
  CHECK(v > 0);
}

TEST_CASE("parameter checks") {
  auto m = make_constant(0.5, 0.5);
  CHECK_THROWS_AS(simulate(m, 0, 1), InvalidParameter);
  CHECK_THROWS_AS(skeleton(m, 0, 1), InvalidParameter);
  CHECK_THROWS_AS(couple(m, m, 0, 1), InvalidParameter);
  SimulationOptions o;
  o.cap = 10;
  CHECK_THROWS_AS(simulate(make_harmonic(0.1, 0.1), 100000, 4, o), SampleCapExceeded);
  // runs are cut at the horizon before the cap applies
  CHECK_NOTHROW(simulate(make_harmonic(0.1, 0.1), 10, 4, o));
  UniformStream st(1);
  CHECK(sample_run(make_constant(1, 1), Direction::Up, st) == 1);
}
