#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "prw/exponents.hpp"
#include "prw/tails.hpp"
#include "prw/transitions.hpp"

namespace prw {

enum class SeriesKind { J, K, Ktilde };
enum class Regime { DefinedDrift, UndefinedDrift };
enum class SameOrder { Agree, Disagree, Absent };

inline std::string_view to_string(SeriesKind k) {
  switch (k) {
    case SeriesKind::J: return "J";
    case SeriesKind::K: return "K";
    case SeriesKind::Ktilde: return "Ktilde";
  }
  return "?";
}

inline std::string_view to_string(Regime r) {
  return r == Regime::DefinedDrift ? "DefinedDrift" : "UndefinedDrift";
}

inline std::string_view to_string(SameOrder s) {
  switch (s) {
    case SameOrder::Agree: return "Agree";
    case SameOrder::Disagree: return "Disagree";
    case SameOrder::Absent: return "Absent";
  }
  return "?";
}

struct Budget {
  std::int64_t terms = 10'000'000;
  double seconds = 120.0;
  std::int64_t admissibility_horizon = 1'000'000;
  std::int64_t diagnostic_terms = 100'000;  // partial sums reported next to analytic verdicts
  bool allow_inadmissible = false;
  MeanOptions mean;
};

struct NumericThresholds {
  double infinite_increase = 0.2;
  double infinite_slope = -1.0;
  double finite_remainder = 1e-4;
  double tie = 1e-12;
};

struct SeriesVerdict {
  SeriesKind which = SeriesKind::J;
  Direction l1 = Direction::Up;
  Direction l2 = Direction::Down;
  Finiteness status = Finiteness::Inconclusive;
  double partial_sum = 0.0;
  std::int64_t horizon = 0;
  double tail_term_estimate = 0.0;
  std::string rule;  // "analytic" or "numeric"
  std::optional<std::vector<double>> term_exponents;
  std::optional<double> fitted_slope;
  double last_decade_increase = 0.0;
  bool budget_hit = false;
};

// Extended real with the states a drift can take.
struct DriftValue {
  enum class State { Finite, PlusInfinity, MinusInfinity, Undefined, Inconclusive };
  State state = State::Inconclusive;
  double value = 0.0;

  bool defined() const { return state == State::Finite || state == State::PlusInfinity || state == State::MinusInfinity; }
  static DriftValue finite(double v) { return {State::Finite, v}; }
  static DriftValue plus_inf() { return {State::PlusInfinity, std::numeric_limits<double>::infinity()}; }
  static DriftValue minus_inf() { return {State::MinusInfinity, -std::numeric_limits<double>::infinity()}; }
  static DriftValue undefined() { return {State::Undefined, 0.0}; }
  static DriftValue inconclusive() { return {State::Inconclusive, 0.0}; }
};

struct DriftReport {
  MeanVerdict theta_up;
  MeanVerdict theta_down;
  DriftValue drift_T;
  DriftValue drift_M;
  DriftValue drift_S;
  bool exact_zero = false;  // drift_S = 0 by symmetry of the parameters
};

struct Classification {
  Label label = Label::Inconclusive;
  Regime regime = Regime::DefinedDrift;
  DriftReport drift;
  std::optional<SeriesVerdict> j_ud, j_du, k_ud, k_du;
  AdmissibilityVerdict admissibility;
  std::vector<std::string> rules;
  std::vector<std::string> diagnostics;
  bool tie_tolerance = false;
};

// ---------------------------------------------------------------------------
// Drift

inline DriftReport drift_report(const TransitionModel& m, const MeanOptions& opt = {}) {
  DriftReport r;
  r.theta_up = mean_verdict(m, Direction::Up, opt);
  r.theta_down = mean_verdict(m, Direction::Down, opt);
  const auto& u = r.theta_up;
  const auto& d = r.theta_down;
  const bool u_inf = u.status == Finiteness::Infinite, d_inf = d.status == Finiteness::Infinite;
  const bool u_fin = u.status == Finiteness::Finite, d_fin = d.status == Finiteness::Finite;

  if (u_inf || d_inf)
    r.drift_T = DriftValue::plus_inf();
  else if (u.value && d.value)
    r.drift_T = DriftValue::finite(*u.value + *d.value);

  if (u_inf && d_inf) {
    r.drift_M = DriftValue::undefined();
    r.drift_S = DriftValue::undefined();
    return r;
  }
  if (u_inf && d_fin) {
    r.drift_M = DriftValue::plus_inf();
    r.drift_S = DriftValue::finite(1.0);
    return r;
  }
  if (d_inf && u_fin) {
    r.drift_M = DriftValue::minus_inf();
    r.drift_S = DriftValue::finite(-1.0);
    return r;
  }
  if (!(u_fin && d_fin)) return r;
  if (m.family().mirror_symmetric()) {
    r.exact_zero = true;
    r.drift_S = DriftValue::finite(0.0);
    r.drift_M = DriftValue::finite(0.0);
    return r;
  }
  if (u.value && d.value) {
    r.drift_M = DriftValue::finite(*u.value - *d.value);
    r.drift_S = DriftValue::finite((*u.value - *d.value) / (*u.value + *d.value));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Series J, K, Ktilde

struct SeriesTrack {
  double sum = 0.0;
  std::vector<double> at_grid;
  bool monotone = true;
};

struct SeriesPass {
  std::int64_t horizon = 0;
  bool budget_hit = false;
  std::vector<std::int64_t> grid;
  std::array<SeriesTrack, 12> tracks;
  std::array<double, 2> min_factor{1.0, 1.0};
  std::array<double, 2> max_factor{0.0, 0.0};

  static std::size_t slot(SeriesKind k, Direction l1, Direction l2) {
    return static_cast<std::size_t>(k) * 4 + index(l1) * 2 + index(l2);
  }
  const SeriesTrack& track(SeriesKind k, Direction l1, Direction l2) const { return tracks[slot(k, l1, l2)]; }
};

inline std::vector<std::int64_t> log_grid(std::int64_t horizon, int per_decade = 20) {
  std::vector<std::int64_t> g;
  for (int k = 0;; ++k) {
    const auto n = static_cast<std::int64_t>(std::llround(std::pow(10.0, static_cast<double>(k) / per_decade)));
    if (n > horizon) break;
    if (g.empty() || n > g.back()) g.push_back(n);
  }
  if (g.empty() || g.back() != horizon) g.push_back(horizon);
  return g;
}

// One streaming pass computing every J, K and Ktilde partial sum up to the horizon.
inline SeriesPass series_pass(const TransitionModel& m, std::int64_t horizon, double seconds = 1e300) {
  if (horizon < 2) throw InvalidParameter("series horizon must be >= 2");
  SeriesPass p;
  p.grid = log_grid(horizon);
  for (auto& t : p.tracks) t.at_grid.reserve(p.grid.size());
  const auto start = std::chrono::steady_clock::now();
  std::array<double, 2> l{0.0, 0.0}, s{0.0, 0.0}, dsum{0.0, 0.0};
  std::size_t gi = 0;
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const double dn = static_cast<double>(n);
    std::array<double, 2> t{}, a{}, drop{}, factor{};
    for (Direction d : kDirections) {
      const auto i = index(d);
      t[i] = std::exp(l[i]);
      s[i] += t[i];
      a[i] = m.alpha(d, n);
      drop[i] = t[i] * a[i];  // T(n) - T(n+1)
      // 1 - n T(n)/S(n) = sum_{k<n} k (T(k) - T(k+1)) / S(n)
      factor[i] = std::min(1.0, dsum[i] / s[i]);
      p.min_factor[i] = std::min(p.min_factor[i], factor[i]);
      p.max_factor[i] = std::max(p.max_factor[i], factor[i]);
    }
    for (Direction l1 : kDirections)
      for (Direction l2 : kDirections) {
        const auto i1 = index(l1), i2 = index(l2);
        const double terms[3] = {dn * drop[i1] / s[i2], factor[i2] * t[i1] / s[i2], t[i1] / s[i2]};
        for (int k = 0; k < 3; ++k) {
          auto& tr = p.tracks[SeriesPass::slot(static_cast<SeriesKind>(k), l1, l2)];
          const double next = tr.sum + terms[k];
          if (!(terms[k] >= 0.0) || next < tr.sum) tr.monotone = false;
          tr.sum = next;
        }
      }
    for (Direction d : kDirections) {
      const auto i = index(d);
      dsum[i] += dn * drop[i];
      l[i] += a[i] >= 1.0 ? -std::numeric_limits<double>::infinity() : std::log1p(-a[i]);
    }
    p.horizon = n;
    if (gi < p.grid.size() && p.grid[gi] == n) {
      for (auto& tr : p.tracks) tr.at_grid.push_back(tr.sum);
      ++gi;
    }
    if ((n & 0xffff) == 0) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
      if (el.count() > seconds) {
        p.budget_hit = true;
        break;
      }
    }
  }
  if (p.budget_hit) {
    p.grid.resize(gi);
    if (p.grid.empty() || p.grid.back() != p.horizon) {
      p.grid.push_back(p.horizon);
      for (auto& tr : p.tracks) tr.at_grid.push_back(tr.sum);
    }
  }
  return p;
}

namespace detail {

inline std::optional<std::vector<double>> term_exponents(const TransitionModel& m, SeriesKind k,
                                                         Direction l1, Direction l2) {
  const auto a = m.family().exponents(l1);
  const auto b = m.family().exponents(l2);
  if (!a || !b) return std::nullopt;
  const auto e = exponent::partial_sum_order(*b);
  switch (k) {
    case SeriesKind::J: return exponent::sub(exponent::add(*a, exponent::n_alpha_order(*a)), e);
    case SeriesKind::K: return exponent::sub(exponent::add(*a, exponent::k_factor_order(*b)), e);
    case SeriesKind::Ktilde: return exponent::sub(*a, e);
  }
  return std::nullopt;
}

inline void numeric_status(SeriesVerdict& v, const SeriesTrack& tr, const std::vector<std::int64_t>& grid,
                           const NumericThresholds& th) {
  const std::int64_t h = grid.back();
  v.partial_sum = tr.sum;
  v.horizon = h;
  if (grid.size() < 3 || h < 100) return;
  std::size_t d0 = 0;
  while (d0 + 1 < grid.size() && grid[d0 + 1] * 10 <= h) ++d0;
  v.last_decade_increase = tr.at_grid.back() - tr.at_grid[d0];
  std::vector<double> xs, ys;
  bool all_zero = true;
  double last_term = 0.0;
  for (std::size_t i = d0; i + 1 < grid.size(); ++i) {
    const double width = static_cast<double>(grid[i + 1] - grid[i]);
    const double term = (tr.at_grid[i + 1] - tr.at_grid[i]) / width;
    last_term = term;
    if (term > 0.0) {
      all_zero = false;
      xs.push_back(std::log(0.5 * static_cast<double>(grid[i] + grid[i + 1])));
      ys.push_back(std::log(term));
    }
  }
  v.tail_term_estimate = last_term;
  if (all_zero) {
    v.status = Finiteness::Finite;
    v.rule = "numeric";
    return;
  }
  if (xs.size() < 3) return;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double slope = sxy / sxx;
  v.fitted_slope = slope;
  if (v.last_decade_increase > th.infinite_increase && slope > th.infinite_slope) {
    v.status = Finiteness::Infinite;
  } else if (slope < -1.0) {
    const double remainder = last_term * static_cast<double>(h) / (-slope - 1.0);
    if (remainder < th.finite_remainder) v.status = Finiteness::Finite;
  }
}

}  // namespace detail

inline SeriesVerdict series_verdict(const TransitionModel& m, const SeriesPass& pass, SeriesKind k,
                                    Direction l1, Direction l2, const NumericThresholds& th = {}) {
  SeriesVerdict v;
  v.which = k;
  v.l1 = l1;
  v.l2 = l2;
  v.rule = "numeric";
  v.budget_hit = pass.budget_hit;
  detail::numeric_status(v, pass.track(k, l1, l2), pass.grid, th);
  if (auto t = detail::term_exponents(m, k, l1, l2)) {
    v.term_exponents = t;
    v.status = exponent::series(*t);
    v.rule = "analytic";
  } else if (pass.budget_hit) {
    v.status = Finiteness::Inconclusive;
  }
  return v;
}

inline SeriesVerdict series_J(const TransitionModel& m, Direction l1, Direction l2, std::int64_t horizon) {
  return series_verdict(m, series_pass(m, horizon), SeriesKind::J, l1, l2);
}

inline SeriesVerdict series_K(const TransitionModel& m, Direction l1, Direction l2, std::int64_t horizon,
                              SeriesKind variant = SeriesKind::K) {
  if (variant == SeriesKind::J) throw InvalidParameter("series_K variant must be K or Ktilde");
  return series_verdict(m, series_pass(m, horizon), variant, l1, l2);
}

// ---------------------------------------------------------------------------
// Classification

inline Label label_from_sign(double s) {
  if (s == 0.0) return Label::Recurrent;
  return s > 0 ? Label::TransientUp : Label::TransientDown;
}

inline Classification classify(const TransitionModel& m, const Budget& budget = {},
                               const NumericThresholds& th = {}) {
  Classification c;
  c.admissibility = admissibility(m, budget.admissibility_horizon);
  if (c.admissibility.status == AdmissibilityStatus::NotAdmissible && !budget.allow_inadmissible)
    throw InvalidModel("model violates the run-finiteness assumption (" +
                       c.admissibility.at(c.admissibility.directions[0].status ==
                                                  AdmissibilityStatus::NotAdmissible
                                              ? Direction::Up
                                              : Direction::Down)
                           .rule +
                       ")");
  if (c.admissibility.status == AdmissibilityStatus::Inconclusive)
    c.diagnostics.push_back("admissibility inconclusive at horizon " +
                            std::to_string(budget.admissibility_horizon));
  MeanOptions mo = budget.mean;
  mo.horizon = std::min(mo.horizon, budget.terms);
  c.drift = drift_report(m, mo);
  c.rules.push_back("theta_up:" + c.drift.theta_up.rule);
  c.rules.push_back("theta_down:" + c.drift.theta_down.rule);
  const auto& ds = c.drift.drift_S;

  if (ds.state == DriftValue::State::Finite) {
    c.regime = Regime::DefinedDrift;
    c.rules.push_back(c.drift.exact_zero ? "drift-sign:symmetry" : "drift-sign");
    if (!c.drift.exact_zero && ds.value != 0.0 && std::abs(ds.value) < th.tie) {
      c.tie_tolerance = true;
      c.label = Label::Recurrent;
    } else {
      c.label = label_from_sign(ds.value);
    }
    return c;
  }
  if (ds.state != DriftValue::State::Undefined) {
    c.regime = Regime::DefinedDrift;
    c.label = Label::Inconclusive;
    c.diagnostics.push_back("mean run length verdict inconclusive");
    return c;
  }

  c.regime = Regime::UndefinedDrift;
  const bool analytic = m.family().exponents(Direction::Up) && m.family().exponents(Direction::Down);
  const std::int64_t horizon = std::max<std::int64_t>(2, analytic ? std::min(budget.diagnostic_terms, budget.terms) : budget.terms);
  const auto pass = series_pass(m, horizon, budget.seconds);
  c.j_ud = series_verdict(m, pass, SeriesKind::J, Direction::Up, Direction::Down, th);
  c.j_du = series_verdict(m, pass, SeriesKind::J, Direction::Down, Direction::Up, th);
  c.k_ud = series_verdict(m, pass, SeriesKind::K, Direction::Up, Direction::Down, th);
  c.k_du = series_verdict(m, pass, SeriesKind::K, Direction::Down, Direction::Up, th);
  c.rules.push_back(std::string("series:") + (analytic ? "analytic" : "numeric"));

  auto pick = [&](const SeriesVerdict& j, const SeriesVerdict& k, const char* name) {
    if (j.status != Finiteness::Inconclusive && k.status != Finiteness::Inconclusive && j.status != k.status) {
      c.diagnostics.push_back(std::string("J and K disagree for ") + name);
      return Finiteness::Inconclusive;
    }
    return j.status != Finiteness::Inconclusive ? j.status : k.status;
  };
  const auto ud = pick(*c.j_ud, *c.k_ud, "u|d");
  const auto du = pick(*c.j_du, *c.k_du, "d|u");
  using F = Finiteness;
  if (ud == F::Infinite && du == F::Infinite)
    c.label = Label::Recurrent;
  else if (ud == F::Infinite && du == F::Finite)
    c.label = Label::TransientUp;
  else if (ud == F::Finite && du == F::Infinite)
    c.label = Label::TransientDown;
  else {
    c.label = Label::Inconclusive;
    if (ud == F::Finite && du == F::Finite)
      c.diagnostics.push_back("both J series finite with both mean run lengths infinite: pattern outside the classification");
  }
  return c;
}

inline std::optional<ClosedFormLabel> classify_closed_form(const TransitionModel& m) {
  return m.family().closed_form_label();
}

inline SameOrder same_order_check(const TransitionModel& a, const TransitionModel& b, const Budget& budget = {}) {
  for (Direction d : kDirections) {
    const auto ea = a.family().exponents(d);
    const auto eb = b.family().exponents(d);
    if (!ea || !eb || !exponent::same(*ea, *eb)) return SameOrder::Absent;
  }
  return classify(a, budget).label == classify(b, budget).label ? SameOrder::Agree : SameOrder::Disagree;
}

}  // namespace prw
