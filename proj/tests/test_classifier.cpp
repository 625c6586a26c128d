#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "prw/classifier.hpp"

using namespace prw;
using Catch::Approx;

namespace {

struct Direct {
  std::vector<double> tail;   // tail[n] = T(n), n = 1..N+1
  std::vector<double> theta;  // theta[n] = T(1) + ... + T(n)
};

Direct direct(const TransitionModel& m, Direction d, std::int64_t N) {
  Direct r;
  r.tail.assign(N + 2, 0.0);
  r.theta.assign(N + 2, 0.0);
  r.tail[1] = 1.0;
  for (std::int64_t n = 1; n <= N; ++n) {
    r.tail[n + 1] = r.tail[n] * (1.0 - m.alpha(d, n));
    r.theta[n] = r.theta[n - 1] + r.tail[n];
  }
  return r;
}

// J, K and Ktilde partial sums written straight from their definitions.
struct DirectSeries {
  double J = 0, K = 0, Kt = 0;
  double min_factor = 1, max_factor = 0;
};

DirectSeries direct_series(const TransitionModel& m, Direction l1, Direction l2, std::int64_t N) {
  auto a = direct(m, l1, N), b = direct(m, l2, N);
  DirectSeries s;
  for (std::int64_t n = 1; n <= N; ++n) {
    const double factor = 1.0 - static_cast<double>(n) * b.tail[n] / b.theta[n];
    s.min_factor = std::min(s.min_factor, factor);
    s.max_factor = std::max(s.max_factor, factor);
    s.J += static_cast<double>(n) * (a.tail[n] - a.tail[n + 1]) / b.theta[n];
    s.K += factor * a.tail[n] / b.theta[n];
    s.Kt += a.tail[n] / b.theta[n];
  }
  return s;
}

Budget quick() {
  Budget b;
  b.terms = 1'000'000;
  b.admissibility_horizon = 100'000;
  b.diagnostic_terms = 10'000;
  return b;
}

}  // namespace

TEST_CASE("constant drift") {
  auto c = classify(make_constant(0.5, 0.25), quick());
  CHECK(c.label == Label::TransientDown);
  CHECK(c.regime == Regime::DefinedDrift);
  REQUIRE(c.drift.drift_S.state == DriftValue::State::Finite);
  CHECK(c.drift.drift_S.value == Approx(-1.0 / 3.0));
  CHECK(c.drift.drift_M.value == Approx(-2.0));
  CHECK(c.drift.drift_T.value == Approx(6.0));
  CHECK(!c.j_ud);

  auto s = classify(make_constant(0.4, 0.4), quick());
  CHECK(s.label == Label::Recurrent);
  CHECK(s.drift.exact_zero);
  CHECK(s.drift.drift_S.value == 0.0);
}

TEST_CASE("one infinite mean forces the drift sign") {
  auto m = make_tabulated({{}, {TailRuleKind::Power, 0.5, 1.0}}, {{0.5}, {TailRuleKind::RepeatLast}}, 0.5, 0.5);
  auto c = classify(m, quick());
  CHECK(c.regime == Regime::DefinedDrift);
  CHECK(c.drift.drift_S.value == 1.0);
  CHECK(c.drift.drift_M.state == DriftValue::State::PlusInfinity);
  CHECK(c.label == Label::TransientUp);
}

TEST_CASE("harmonic undefined drift") {
  auto m = make_harmonic(0.3, 0.6);
  auto c = classify(m, quick());
  CHECK(c.regime == Regime::UndefinedDrift);
  REQUIRE(c.j_ud);
  CHECK(c.j_ud->status == Finiteness::Infinite);
  CHECK(c.j_du->status == Finiteness::Finite);
  CHECK(c.k_ud->status == Finiteness::Infinite);
  CHECK(c.k_du->status == Finiteness::Finite);
  CHECK(c.label == Label::TransientUp);
  CHECK(classify_closed_form(m)->label == Label::TransientUp);

  auto eq = classify(make_harmonic(0.5, 0.5), quick());
  CHECK(eq.label == Label::Recurrent);
  CHECK(eq.j_ud->status == Finiteness::Infinite);
  CHECK(eq.j_du->status == Finiteness::Infinite);
}

TEST_CASE("series pass matches the definitions") {
  for (const auto& m : {make_harmonic(0.3, 0.6), make_log_family({1, 0.5}, {1, 1.5}), make_prime_lacunar(0.7, 2),
                        make_constant(0.2, 0.9)}) {
    const std::int64_t N = 3000;
    auto pass = series_pass(m, N);
    for (Direction l1 : kDirections)
      for (Direction l2 : kDirections) {
        auto d = direct_series(m, l1, l2, N);
        CHECK(pass.track(SeriesKind::J, l1, l2).sum == Approx(d.J).epsilon(1e-9));
        CHECK(pass.track(SeriesKind::K, l1, l2).sum == Approx(d.K).epsilon(1e-9).margin(1e-12));
        CHECK(pass.track(SeriesKind::Ktilde, l1, l2).sum == Approx(d.Kt).epsilon(1e-9));
      }
    for (Direction d : kDirections) {
      auto ds = direct_series(m, d, d, N);
      CHECK(pass.min_factor[index(d)] >= 0.0);
      CHECK(pass.max_factor[index(d)] <= 1.0);
      CHECK(pass.min_factor[index(d)] == Approx(std::max(0.0, ds.min_factor)).margin(1e-9));
    }
  }
}

TEST_CASE("K factor stays in the unit interval") {
  for (const auto& m : {make_harmonic(0.05, 0.95), make_boundary(BoundaryType::Upper, 1), make_random_lacunar(0, 11)}) {
    auto pass = series_pass(m, 200000);
    for (Direction d : kDirections) {
      CHECK(pass.min_factor[index(d)] >= 0.0);
      CHECK(pass.max_factor[index(d)] <= 1.0);
    }
    for (auto& t : pass.tracks) CHECK(t.monotone);
  }
}

TEST_CASE("swapping directions mirrors the label") {
  const std::vector<std::pair<TransitionModel, TransitionModel>> pairs{
      {make_harmonic(0.2, 0.7), make_harmonic(0.7, 0.2)},
      {make_constant(0.3, 0.6), make_constant(0.6, 0.3)},
      {make_log_family({1, 0.5}, {1, 2}), make_log_family({1, 2}, {1, 0.5})},
  };
  auto mirror = [](Label l) {
    if (l == Label::TransientUp) return Label::TransientDown;
    if (l == Label::TransientDown) return Label::TransientUp;
    return l;
  };
  for (const auto& [a, b] : pairs) {
    const auto la = classify(a, quick()).label, lb = classify(b, quick()).label;
    CHECK(la != Label::Inconclusive);
    CHECK(lb == mirror(la));
  }
}

TEST_CASE("log family verdicts") {
  // tails n^-1 (log n)^-0.5 against n^-1 (log n)^-2: only the down mean is finite
  auto c = classify(make_log_family({1, 0.5}, {1, 2}), quick());
  CHECK(c.label == Label::TransientUp);
  CHECK(c.rules.back() == "drift-sign");
  CHECK(c.drift.drift_S.value == 1.0);
  auto r = classify(make_log_family({1, 1}, {1, 1}), quick());
  CHECK(r.regime == Regime::UndefinedDrift);
  CHECK(r.rules.back() == "series:analytic");
  CHECK(r.label == Label::Recurrent);
  auto t = classify(make_log_family({1, 0.5}, {1, 0.9}), quick());
  CHECK(t.regime == Regime::UndefinedDrift);
  CHECK(t.label == Label::TransientUp);
}

TEST_CASE("boundary families") {
  for (int p = 0; p <= 2; ++p) {
    CHECK(classify(make_boundary(BoundaryType::Lower, p), quick()).label == Label::Recurrent);
    CHECK(classify(make_boundary(BoundaryType::Upper, p), quick()).label == Label::Recurrent);
  }
}

TEST_CASE("closed form labels") {
  CHECK(classify_closed_form(make_constant(0.5, 0.5))->label == Label::Recurrent);
  CHECK(classify_closed_form(make_harmonic(0.6, 0.3))->label == Label::TransientDown);
  CHECK(!classify_closed_form(make_harmonic(1.5, 0.3)));
  CHECK(classify_closed_form(make_prime_lacunar(0.5, 1))->label == Label::Recurrent);
  CHECK(classify_closed_form(make_prime_lacunar(0.8, 2))->label == Label::TransientDown);
  CHECK(classify_closed_form(make_prime_lacunar(1.0, 1))->label == Label::TransientDown);
  CHECK(classify_closed_form(make_random_lacunar(1, 5))->label == Label::Recurrent);
  CHECK(classify_closed_form(make_boundary_perturbed(BoundaryType::Upper, 0, 0.5))->label == Label::Recurrent);
  CHECK(classify_closed_form(make_boundary_perturbed(BoundaryType::Upper, 0, 1.5, Direction::Down))->label ==
        Label::TransientUp);
}

TEST_CASE("prime lacunar verdicts from the tail orders") {
  for (auto [lambda, r] : std::vector<std::pair<double, int>>{{0.5, 1}, {0.8, 2}, {1.0, 1}, {0.7, 2}, {0.6, 1}, {0.5, 3}}) {
    auto m = make_prime_lacunar(lambda, r);
    INFO(lambda << " " << r);
    const auto c = classify(m, quick());
    CHECK(c.label == classify_closed_form(m)->label);
    CHECK(c.label != Label::Inconclusive);

    // -log T_d - lambda log n + lambda H_r log log n settles (Mertens), computed term by term
    double h = 0.0;
    for (int k = 1; k <= r; ++k) h += 1.0 / k;
    double log_t = 0.0, at_1e5 = 0.0;
    for (std::int64_t n = 1; n < 1'000'000; ++n) {
      log_t += std::log1p(-m.alpha(Direction::Down, n));
      if (n + 1 == 100'000) at_1e5 = log_t;
    }
    auto resid = [&](double lt, double n) { return lt + lambda * std::log(n) - lambda * h * std::log(std::log(n)); };
    CHECK(std::abs(resid(log_t, 1e6) - resid(at_1e5, 1e5)) < 0.02);
  }
}

TEST_CASE("same order check") {
  auto a = make_harmonic(0.4, 0.6);
  CHECK(same_order_check(a, make_harmonic(0.4, 0.6), quick()) == SameOrder::Agree);
  CHECK(same_order_check(a, make_override(a, {{3, 0.9}}, {{2, 0.1}}), quick()) == SameOrder::Agree);
  CHECK(same_order_check(a, make_harmonic(0.6, 0.4), quick()) == SameOrder::Absent);
  CHECK(same_order_check(a, make_prime_lacunar(0.4, 1), quick()) == SameOrder::Absent);
}

TEST_CASE("inadmissible models are rejected") {
  TabulatedSpec geo{{}, {TailRuleKind::Geometric, 1.0, 0.5}};
  auto m = make_tabulated(geo, geo, 0.5, 0.5);
  CHECK_THROWS_AS(classify(m, quick()), InvalidModel);
  Budget b = quick();
  b.allow_inadmissible = true;
  CHECK_NOTHROW(classify(m, b));
}

TEST_CASE("numeric series on a family without exponents") {
  // the tabulated harmonic tail has no declared exponents, so the verdict is numeric
  auto m = make_tabulated({{}, {TailRuleKind::Power, 0.2, 1.0}}, {{}, {TailRuleKind::Power, 0.8, 1.0}}, 0.2, 0.8);
  Budget b = quick();
  b.terms = 4'000'000;
  auto c = classify(m, b);
  CHECK(c.regime == Regime::UndefinedDrift);
  CHECK(c.rules.back() == "series:numeric");
  CHECK(c.j_ud->rule == "numeric");
  CHECK(c.label == Label::TransientUp);
}
