#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prw/direction.hpp"
#include "prw/errors.hpp"
#include "prw/family.hpp"
#include "prw/iterated_log.hpp"
#include "prw/primes.hpp"
#include "prw/rng.hpp"
#include "prw/sequence.hpp"
#include "prw/tail_cache.hpp"

namespace prw {

inline constexpr double kAlphaCeiling = 1.0 - 1e-9;

enum class BoundaryType { Lower, Upper };

inline std::string_view to_string(BoundaryType t) { return t == BoundaryType::Lower ? "lower" : "upper"; }

class TransitionModel {
 public:
  explicit TransitionModel(std::shared_ptr<const detail::Family> family)
      : state_(std::make_shared<State>(std::move(family))) {}

  ModelKind kind() const noexcept { return state_->family->kind(); }
  std::string_view name() const noexcept { return state_->family->name(); }

  double alpha(Direction d, std::int64_t n) const {
    if (n < 1) throw InvalidParameter("alpha index must be >= 1");
    return state_->family->alpha(d, n);
  }

  double alpha_inf(Direction d) const { return state_->family->alpha_inf(d); }
  std::vector<double> params() const { return state_->family->params(); }
  const detail::Family& family() const noexcept { return *state_->family; }

  const detail::TailCache& cache(Direction d) const noexcept {
    return d == Direction::Up ? state_->up : state_->down;
  }

  bool shares_state_with(const TransitionModel& o) const noexcept { return state_ == o.state_; }

 private:
  struct State {
    explicit State(std::shared_ptr<const detail::Family> f)
        : family(std::move(f)), up(*family, Direction::Up), down(*family, Direction::Down) {}
    std::shared_ptr<const detail::Family> family;
    detail::TailCache up;
    detail::TailCache down;
  };
  std::shared_ptr<State> state_;
};

inline nlohmann::json describe(const detail::Family& f) {
  return nlohmann::json{{"kind", std::string(f.name())}, {"params", f.params_json()}};
}

inline nlohmann::json descriptor(const TransitionModel& m) { return describe(m.family()); }

namespace detail {

inline double clamp_unit(double a, double lo = 0.0, double hi = kAlphaCeiling) {
  return std::min(hi, std::max(lo, a));
}

inline void require_probability(double p, const char* what, bool allow_zero = false) {
  if (!(p <= 1.0) || !(allow_zero ? p >= 0.0 : p > 0.0))
    throw InvalidParameter(std::string(what) + " must be in " + (allow_zero ? "[0,1]" : "(0,1]"));
}

// Analytic run-finiteness rule for an alpha of the form sum a_i / (n log n ... log_[i] n).
inline std::optional<AnalyticRule> iterated_log_rule(const std::vector<double>& a) {
  for (double c : a) {
    if (c > 0) return AnalyticRule{AdmissibilityStatus::Admissible, "iterated-log-leading-positive"};
    if (c < 0) return AnalyticRule{AdmissibilityStatus::NotAdmissible, "iterated-log-leading-negative"};
  }
  return std::nullopt;
}

class ConstantFamily final : public Family {
 public:
  ConstantFamily(double up, double down) : p_{up, down} {
    require_probability(up, "p_up");
    require_probability(down, "p_down");
  }
  ModelKind kind() const noexcept override { return ModelKind::Constant; }
  std::string_view name() const noexcept override { return "constant"; }
  double alpha(Direction d, std::int64_t) const override { return p_[index(d)]; }
  double alpha_inf(Direction d) const override { return p_[index(d)]; }
  std::vector<double> params() const override { return {p_[0], p_[1]}; }
  nlohmann::json params_json() const override { return {{"p_up", p_[0]}, {"p_down", p_[1]}}; }
  std::int64_t smooth_from(Direction) const override { return 1; }
  double alpha_at(Direction d, double) const override { return p_[index(d)]; }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    if (p_[index(d)] == 1.0) return std::nullopt;  // the scan reports the witness
    return AnalyticRule{AdmissibilityStatus::Admissible, "constant-positive"};
  }
  std::optional<double> limsup(Direction d) const override { return p_[index(d)]; }
  std::optional<double> closed_form_mean(Direction d) const override { return 1.0 / p_[index(d)]; }
  bool mirror_symmetric() const override { return p_[0] == p_[1]; }
  std::optional<bool> alpha_square_summable(Direction) const override { return false; }
  std::optional<ClosedFormLabel> closed_form_label() const override {
    const double tu = 1.0 / p_[0], td = 1.0 / p_[1];
    if (tu == td) return ClosedFormLabel{Label::Recurrent, "constant-drift", "drift_S = 0"};
    return ClosedFormLabel{tu > td ? Label::TransientUp : Label::TransientDown, "constant-drift",
                           "sign of 1/p_up - 1/p_down"};
  }

 private:
  std::array<double, 2> p_;
};

class HarmonicFamily final : public Family {
 public:
  HarmonicFamily(double up, double down) : lambda_{up, down} {
    for (double l : lambda_)
      if (!(l > 0) || !std::isfinite(l)) throw InvalidParameter("harmonic lambda must be > 0");
    for (int i = 0; i < 2; ++i) m0_[i] = std::floor(lambda_[i]) + 1.0;
  }
  ModelKind kind() const noexcept override { return ModelKind::Harmonic; }
  std::string_view name() const noexcept override { return "harmonic"; }
  double alpha(Direction d, std::int64_t n) const override {
    return alpha_at(d, static_cast<double>(n));
  }
  double alpha_at(Direction d, double x) const override {
    const auto i = index(d);
    return lambda_[i] / std::max(x, m0_[i]);
  }
  std::int64_t smooth_from(Direction d) const override {
    return static_cast<std::int64_t>(m0_[index(d)]);
  }
  std::vector<double> params() const override { return {lambda_[0], lambda_[1]}; }
  nlohmann::json params_json() const override {
    return {{"lambda_up", lambda_[0]}, {"lambda_down", lambda_[1]}};
  }
  std::optional<std::vector<double>> exponents(Direction d) const override {
    return std::vector<double>{lambda_[index(d)]};
  }
  std::optional<AnalyticRule> admissibility_rule(Direction) const override {
    return AnalyticRule{AdmissibilityStatus::Admissible, "harmonic-divergent"};
  }
  std::optional<double> limsup(Direction) const override { return 0.0; }
  bool mirror_symmetric() const override { return lambda_[0] == lambda_[1]; }
  std::optional<ClosedFormLabel> closed_form_label() const override {
    if (!(lambda_[0] < 1.0 && lambda_[1] < 1.0)) return std::nullopt;
    if (lambda_[0] == lambda_[1])
      return ClosedFormLabel{Label::Recurrent, "harmonic-equal-lambda", "lambda_up == lambda_down"};
    return ClosedFormLabel{lambda_[0] < lambda_[1] ? Label::TransientUp : Label::TransientDown,
                           "harmonic-equal-lambda", "lambda_up != lambda_down"};
  }

 private:
  std::array<double, 2> lambda_;
  std::array<double, 2> m0_{};
};

// Shared machinery for families whose alpha is sum_i a_i / (n log n ... log_[i] n).
class IteratedLogFamily : public Family {
 public:
  IteratedLogFamily(std::vector<double> up, std::vector<double> down, double floor)
      : seq_{IteratedLogSequence(std::move(up)), IteratedLogSequence(std::move(down))}, floor_(floor) {}

  double alpha(Direction d, std::int64_t n) const override {
    return alpha_at(d, static_cast<double>(n));
  }
  double alpha_at(Direction d, double x) const override {
    return clamp_unit(seq_[index(d)].at(x), floor_);
  }
  std::int64_t smooth_from(Direction d) const override { return seq_[index(d)].start(); }
  std::optional<std::vector<double>> exponents(Direction d) const override {
    return seq_[index(d)].coeffs();
  }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    return iterated_log_rule(seq_[index(d)].coeffs());
  }
  std::optional<double> limsup(Direction) const override { return 0.0; }
  bool mirror_symmetric() const override { return seq_[0].coeffs() == seq_[1].coeffs(); }

 protected:
  std::array<IteratedLogSequence, 2> seq_;
  double floor_;
};

class LogFamily final : public IteratedLogFamily {
 public:
  LogFamily(std::vector<double> up, std::vector<double> down)
      : IteratedLogFamily(validate(std::move(up)), validate(std::move(down)), 0.0) {}
  ModelKind kind() const noexcept override { return ModelKind::LogFamily; }
  std::string_view name() const noexcept override { return "log_family"; }
  std::vector<double> params() const override {
    std::vector<double> v = seq_[0].coeffs();
    v.insert(v.end(), seq_[1].coeffs().begin(), seq_[1].coeffs().end());
    return v;
  }
  nlohmann::json params_json() const override {
    return {{"up", seq_[0].coeffs()}, {"down", seq_[1].coeffs()}};
  }

 private:
  static std::vector<double> validate(std::vector<double> v) {
    if (v.empty() || static_cast<int>(v.size()) > kMaxLogDepth + 1)
      throw InvalidParameter("log_family needs 1.." + std::to_string(kMaxLogDepth + 1) + " exponents");
    for (double x : v)
      if (!(x > 0) || !std::isfinite(x)) throw InvalidParameter("log_family exponents must be > 0");
    return v;
  }
};

inline std::vector<double> boundary_coeffs(BoundaryType t, int p) {
  if (p < 0) throw InvalidParameter("boundary order p must be >= 0");
  std::vector<double> c(static_cast<std::size_t>(p) + 1, t == BoundaryType::Upper ? 1.0 : 0.0);
  c.back() = 1.0;
  return c;
}

class BoundaryFamily final : public IteratedLogFamily {
 public:
  BoundaryFamily(BoundaryType t, int p)
      : IteratedLogFamily(boundary_coeffs(t, check(p)), boundary_coeffs(t, p), 0.0), type_(t), p_(p) {}
  ModelKind kind() const noexcept override { return ModelKind::Boundary; }
  std::string_view name() const noexcept override { return "boundary"; }
  std::vector<double> params() const override {
    return {type_ == BoundaryType::Upper ? 1.0 : 0.0, static_cast<double>(p_)};
  }
  nlohmann::json params_json() const override {
    return {{"type", std::string(to_string(type_))}, {"p", p_}};
  }

 private:
  static int check(int p) {
    if (p < 0 || p > kMaxLogDepth) throw InvalidParameter("boundary order p must be in [0, 3]");
    return p;
  }
  BoundaryType type_;
  int p_;
};

inline std::vector<double> perturbed_boundary_coeffs(BoundaryType t, int p, double c) {
  auto v = boundary_coeffs(t, p);
  if (t == BoundaryType::Upper) v.push_back(0.0);
  v.push_back(c);
  if (static_cast<int>(v.size()) > kMaxLogDepth + 1)
    throw InvalidParameter("boundary_perturbed needs log_[" + std::to_string(v.size() - 1) +
                           "], deeper than supported (upper p <= 1, lower p <= 2)");
  return v;
}

class BoundaryPerturbedFamily final : public IteratedLogFamily {
 public:
  BoundaryPerturbedFamily(BoundaryType t, int p, double c, Direction perturbed)
      : IteratedLogFamily(perturbed == Direction::Up ? perturbed_boundary_coeffs(t, p, c) : boundary_coeffs(t, p),
                  perturbed == Direction::Down ? perturbed_boundary_coeffs(t, p, c) : boundary_coeffs(t, p),
                  0.0),
        type_(t),
        p_(p),
        c_(c),
        perturbed_(perturbed) {
    if (!std::isfinite(c)) throw InvalidParameter("boundary_perturbed c must be finite");
  }
  ModelKind kind() const noexcept override { return ModelKind::BoundaryPerturbed; }
  std::string_view name() const noexcept override { return "boundary_perturbed"; }
  std::vector<double> params() const override {
    return {type_ == BoundaryType::Upper ? 1.0 : 0.0, static_cast<double>(p_), c_,
            perturbed_ == Direction::Up ? 1.0 : 0.0};
  }
  nlohmann::json params_json() const override {
    return {{"type", std::string(to_string(type_))},
            {"p", p_},
            {"c", c_},
            {"perturbed", std::string(to_string(perturbed_))}};
  }
  bool mirror_symmetric() const override { return c_ == 0.0; }
  std::optional<ClosedFormLabel> closed_form_label() const override {
    const std::string rule =
        type_ == BoundaryType::Upper ? "upper-boundary-thinning" : "lower-boundary-thickening";
    if (std::abs(c_) <= 1.0) return ClosedFormLabel{Label::Recurrent, rule, "|c| <= 1"};
    // A larger switch probability shortens runs on the perturbed side.
    const bool towards_other = c_ > 0;
    const Direction dir = towards_other ? opposite(perturbed_) : perturbed_;
    return ClosedFormLabel{dir == Direction::Up ? Label::TransientUp : Label::TransientDown, rule,
                           "|c| > 1"};
  }

 private:
  BoundaryType type_;
  int p_;
  double c_;
  Direction perturbed_;
};

class PrimeLacunarFamily final : public Family {
 public:
  PrimeLacunarFamily(double lambda, int r) : lambda_(lambda), r_(r) {
    if (!(lambda > 0 && lambda <= 1)) throw InvalidParameter("prime_lacunar lambda must be in (0,1]");
    if (r < 1) throw InvalidParameter("prime_lacunar r must be >= 1");
    m0_ = std::floor(lambda) + 1.0;
  }
  ModelKind kind() const noexcept override { return ModelKind::Lacunar; }
  std::string_view name() const noexcept override { return "prime_lacunar"; }
  double alpha(Direction d, std::int64_t n) const override {
    const double h = lambda_ / std::max(static_cast<double>(n), m0_);
    if (d == Direction::Up) return h;
    return PrimeTable::instance().in_multiples(n, r_) ? 0.0 : h;
  }
  double alpha_at(Direction d, double x) const override {
    if (d == Direction::Up) return lambda_ / std::max(x, m0_);
    return alpha(d, static_cast<std::int64_t>(x));
  }
  std::int64_t smooth_from(Direction d) const override {
    return d == Direction::Up ? static_cast<std::int64_t>(m0_) : 0;
  }
  std::vector<double> params() const override { return {lambda_, static_cast<double>(r_)}; }
  nlohmann::json params_json() const override { return {{"lambda", lambda_}, {"r", r_}}; }
  std::optional<std::vector<double>> exponents(Direction d) const override {
    if (d == Direction::Up) return std::vector<double>{lambda_};
    // the lacunes remove sum 1/k ~ H_r log log n from -log T (Mertens; the kP overlap finitely),
    // so T_d is of order n^-lambda (log n)^(lambda H_r)
    double h = 0.0;
    for (int k = 1; k <= r_; ++k) h += 1.0 / k;
    return std::vector<double>{lambda_, -lambda_ * h};
  }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    return AnalyticRule{AdmissibilityStatus::Admissible,
                        d == Direction::Up ? "harmonic-divergent" : "prime-lacunes-density-zero"};
  }
  std::optional<double> limsup(Direction) const override { return 0.0; }
  std::optional<bool> alpha_square_summable(Direction) const override { return true; }
  std::optional<ClosedFormLabel> closed_form_label() const override {
    double h = 0.0;
    for (int k = 1; k <= r_; ++k) h += 1.0 / k;
    if (r_ == 1 && lambda_ == 1.0)
      return ClosedFormLabel{Label::TransientDown, "prime-lacunar-r1-lambda1",
                             "r = 1, lambda = 1 is the transient edge case"};
    if (h * lambda_ <= 1.0)
      return ClosedFormLabel{Label::Recurrent, "prime-lacunar-harmonic-number", "H_r*lambda <= 1"};
    return ClosedFormLabel{Label::TransientDown, "prime-lacunar-harmonic-number", "H_r*lambda > 1"};
  }

 private:
  double lambda_;
  int r_;
  double m0_;
};

// P(eps_n = 0) for the random lacunar family; zero before the iterated log exceeds 1.
inline double lacune_probability(int p, double n) {
  const double l = iterated_log(n, p + 1);
  if (!(l > 1.0)) return 0.0;
  return 1.0 / l;
}

class RandomLacunarFamily final : public Family {
 public:
  RandomLacunarFamily(int p, std::uint64_t seed)
      : base_(boundary_coeffs(BoundaryType::Lower, p)), p_(p), seed_(seed) {
    if (p < 0 || p + 1 > kMaxLogDepth) throw InvalidParameter("random_lacunar p must be in [0, 2]");
    start_ = log_start(p + 1);
  }
  ModelKind kind() const noexcept override { return ModelKind::Lacunar; }
  std::string_view name() const noexcept override { return "random_lacunar"; }
  double alpha(Direction d, std::int64_t n) const override {
    const double b = clamp_unit(base_.at(static_cast<double>(n)));
    if (d == Direction::Up) return b;
    return lacune(n) ? 0.0 : b;
  }
  double alpha_at(Direction d, double x) const override {
    if (d == Direction::Up) return clamp_unit(base_.at(x));
    return alpha(d, static_cast<std::int64_t>(x));
  }
  bool lacune(std::int64_t n) const {
    if (n < start_) return false;
    return hash_uniform(seed_, 0x6c6163756e65ULL, static_cast<std::uint64_t>(n)) <
           lacune_probability(p_, static_cast<double>(n));
  }
  std::int64_t smooth_from(Direction d) const override {
    return d == Direction::Up ? base_.start() : 0;
  }
  std::vector<double> params() const override {
    return {static_cast<double>(p_), static_cast<double>(seed_)};
  }
  nlohmann::json params_json() const override { return {{"p", p_}, {"seed", seed_}}; }
  std::optional<std::vector<double>> exponents(Direction d) const override {
    if (d == Direction::Up) return base_.coeffs();
    return std::nullopt;
  }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    return AnalyticRule{AdmissibilityStatus::Admissible,
                        d == Direction::Up ? "iterated-log-leading-positive" : "random-lacunes-density-zero"};
  }
  std::optional<double> limsup(Direction) const override { return 0.0; }
  std::optional<bool> alpha_square_summable(Direction) const override { return true; }
  std::optional<ClosedFormLabel> closed_form_label() const override {
    return ClosedFormLabel{Label::Recurrent, "random-lacunar-lower-boundary", "almost surely"};
  }

 private:
  IteratedLogSequence base_;
  int p_;
  std::uint64_t seed_;
  std::int64_t start_;
};

}  // namespace detail

enum class TailRuleKind { Zero, RepeatLast, Power, Geometric };

inline std::string_view to_string(TailRuleKind k) {
  switch (k) {
    case TailRuleKind::Zero: return "zero";
    case TailRuleKind::RepeatLast: return "repeat_last";
    case TailRuleKind::Power: return "power";
    case TailRuleKind::Geometric: return "geometric";
  }
  return "?";
}

// Values past the table: 0, the last value, coef * n^-rate, or coef * rate^n (capped at 1).
struct TailRule {
  TailRuleKind kind = TailRuleKind::RepeatLast;
  double coef = 0.0;
  double rate = 0.0;
};

struct TabulatedSpec {
  std::vector<double> values;
  TailRule tail;
};

namespace detail {

class TabulatedFamily final : public Family {
 public:
  TabulatedFamily(TabulatedSpec up, TabulatedSpec down, double inf_up, double inf_down)
      : spec_{std::move(up), std::move(down)}, inf_{inf_up, inf_down} {
    for (const auto& s : spec_) {
      for (double v : s.values) require_probability(v, "tabulated value", true);
      if (!(s.tail.coef >= 0) || !(s.tail.rate >= 0) || !std::isfinite(s.tail.coef) ||
          !std::isfinite(s.tail.rate))
        throw InvalidParameter("tabulated tail coef and rate must be finite and >= 0");
    }
    require_probability(inf_up, "alpha_inf_up");
    require_probability(inf_down, "alpha_inf_down");
  }
  ModelKind kind() const noexcept override { return ModelKind::Tabulated; }
  std::string_view name() const noexcept override { return "tabulated"; }
  double alpha(Direction d, std::int64_t n) const override {
    const auto& s = spec_[index(d)];
    if (static_cast<std::size_t>(n) <= s.values.size()) return s.values[n - 1];
    return tail_value(s, static_cast<double>(n));
  }
  double alpha_at(Direction d, double x) const override {
    const auto& s = spec_[index(d)];
    if (x <= static_cast<double>(s.values.size())) return alpha(d, static_cast<std::int64_t>(x));
    return tail_value(s, x);
  }
  std::int64_t smooth_from(Direction d) const override {
    return static_cast<std::int64_t>(spec_[index(d)].values.size()) + 1;
  }
  double alpha_inf(Direction d) const override { return inf_[index(d)]; }
  std::vector<double> params() const override {
    std::vector<double> v;
    for (const auto& s : spec_) v.insert(v.end(), s.values.begin(), s.values.end());
    return v;
  }
  nlohmann::json params_json() const override {
    auto side = [](const TabulatedSpec& s) {
      return nlohmann::json{{"values", s.values},
                            {"tail",
                             {{"rule", std::string(to_string(s.tail.kind))},
                              {"coef", s.tail.coef},
                              {"rate", s.tail.rate}}}};
    };
    return {{"up", side(spec_[0])},
            {"down", side(spec_[1])},
            {"alpha_inf_up", inf_[0]},
            {"alpha_inf_down", inf_[1]}};
  }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    const auto& s = spec_[index(d)];
    using S = AdmissibilityStatus;
    if (std::find(s.values.begin(), s.values.end(), 1.0) != s.values.end()) return std::nullopt;
    switch (s.tail.kind) {
      case TailRuleKind::Zero: return AnalyticRule{S::NotAdmissible, "tail-zero-summable"};
      case TailRuleKind::RepeatLast:
        if (!s.values.empty() && s.values.back() > 0)
          return AnalyticRule{S::Admissible, "tail-constant-positive"};
        return AnalyticRule{S::NotAdmissible, "tail-zero-summable"};
      case TailRuleKind::Power:
        if (s.tail.coef > 0 && s.tail.rate <= 1) return AnalyticRule{S::Admissible, "tail-power-divergent"};
        return AnalyticRule{S::NotAdmissible, "tail-power-summable"};
      case TailRuleKind::Geometric:
        if (s.tail.coef > 0 && s.tail.rate >= 1)
          return AnalyticRule{S::Admissible, "tail-geometric-nonsummable"};
        return AnalyticRule{S::NotAdmissible, "tail-geometric-summable"};
    }
    return std::nullopt;
  }
  std::optional<double> limsup(Direction d) const override {
    const auto& s = spec_[index(d)];
    switch (s.tail.kind) {
      case TailRuleKind::Zero: return 0.0;
      case TailRuleKind::RepeatLast: return s.values.empty() ? 0.0 : s.values.back();
      case TailRuleKind::Power: return s.tail.rate > 0 ? 0.0 : std::min(1.0, s.tail.coef);
      case TailRuleKind::Geometric:
        if (s.tail.rate < 1) return 0.0;
        return s.tail.rate == 1 ? std::min(1.0, s.tail.coef) : 1.0;
    }
    return std::nullopt;
  }
  std::optional<bool> alpha_square_summable(Direction d) const override {
    const auto& s = spec_[index(d)];
    switch (s.tail.kind) {
      case TailRuleKind::Zero: return true;
      case TailRuleKind::RepeatLast: return s.values.empty() || s.values.back() == 0.0;
      case TailRuleKind::Power: return s.tail.coef == 0.0 || 2.0 * s.tail.rate > 1.0;
      case TailRuleKind::Geometric: return s.tail.coef == 0.0 || s.tail.rate < 1.0;
    }
    return std::nullopt;
  }
  bool mirror_symmetric() const override {
    const auto& a = spec_[0];
    const auto& b = spec_[1];
    return a.values == b.values && a.tail.kind == b.tail.kind && a.tail.coef == b.tail.coef &&
           a.tail.rate == b.tail.rate;
  }

 private:
  static double tail_value(const TabulatedSpec& s, double x) {
    switch (s.tail.kind) {
      case TailRuleKind::Zero: return 0.0;
      case TailRuleKind::RepeatLast: return s.values.empty() ? 0.0 : s.values.back();
      case TailRuleKind::Power: return std::min(1.0, s.tail.coef * std::pow(x, -s.tail.rate));
      case TailRuleKind::Geometric: return std::min(1.0, s.tail.coef * std::pow(s.tail.rate, x));
    }
    return 0.0;
  }

  std::array<TabulatedSpec, 2> spec_;
  std::array<double, 2> inf_;
};

// Base model with finitely many alpha values replaced.
class OverrideFamily final : public Family {
 public:
  using Table = std::map<std::int64_t, double>;

  OverrideFamily(TransitionModel base, Table up, Table down)
      : base_(std::move(base)), table_{std::move(up), std::move(down)} {
    for (const auto& t : table_)
      for (const auto& [n, q] : t) {
        if (n < 1) throw InvalidParameter("override index must be >= 1");
        require_probability(q, "override value", true);
      }
  }
  ModelKind kind() const noexcept override { return ModelKind::Composite; }
  std::string_view name() const noexcept override { return "override"; }
  const TransitionModel& base() const noexcept { return base_; }
  const Table& table(Direction d) const noexcept { return table_[index(d)]; }
  double alpha(Direction d, std::int64_t n) const override {
    const auto& t = table_[index(d)];
    if (auto it = t.find(n); it != t.end()) return it->second;
    return base_.alpha(d, n);
  }
  double alpha_at(Direction d, double x) const override {
    if (x <= static_cast<double>(last(d))) return alpha(d, static_cast<std::int64_t>(x));
    return base_.family().alpha_at(d, x);
  }
  std::int64_t smooth_from(Direction d) const override {
    const std::int64_t s = base_.family().smooth_from(d);
    return s > 0 ? std::max(s, last(d) + 1) : 0;
  }
  double alpha_inf(Direction d) const override { return base_.alpha_inf(d); }
  std::vector<double> params() const override { return base_.params(); }
  nlohmann::json params_json() const override {
    auto side = [](const Table& t) {
      nlohmann::json j = nlohmann::json::object();
      for (const auto& [n, q] : t) j[std::to_string(n)] = q;
      return j;
    };
    return {{"base", descriptor(base_)}, {"up", side(table_[0])}, {"down", side(table_[1])}};
  }
  std::optional<std::vector<double>> exponents(Direction d) const override {
    for (const auto& [n, q] : table_[index(d)])
      if (q == 1.0) return std::nullopt;
    return base_.family().exponents(d);
  }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    for (const auto& [n, q] : table_[index(d)])
      if (q == 1.0) return std::nullopt;
    return base_.family().admissibility_rule(d);
  }
  std::optional<double> limsup(Direction d) const override { return base_.family().limsup(d); }
  std::optional<double> closed_form_mean(Direction d) const override {
    if (table_[index(d)].empty()) return base_.family().closed_form_mean(d);
    return std::nullopt;
  }
  std::optional<bool> alpha_square_summable(Direction d) const override {
    return base_.family().alpha_square_summable(d);
  }
  bool mirror_symmetric() const override {
    return base_.family().mirror_symmetric() && table_[0] == table_[1];
  }

 private:
  std::int64_t last(Direction d) const {
    const auto& t = table_[index(d)];
    return t.empty() ? 0 : t.rbegin()->first;
  }

  TransitionModel base_;
  std::array<Table, 2> table_;
};

}  // namespace detail

inline TransitionModel make_constant(double p_up, double p_down) {
  return TransitionModel(std::make_shared<detail::ConstantFamily>(p_up, p_down));
}

inline TransitionModel make_harmonic(double lambda_up, double lambda_down) {
  return TransitionModel(std::make_shared<detail::HarmonicFamily>(lambda_up, lambda_down));
}

inline TransitionModel make_log_family(std::vector<double> up, std::vector<double> down) {
  return TransitionModel(std::make_shared<detail::LogFamily>(std::move(up), std::move(down)));
}

inline TransitionModel make_boundary(BoundaryType type, int p) {
  return TransitionModel(std::make_shared<detail::BoundaryFamily>(type, p));
}

inline TransitionModel make_boundary_perturbed(BoundaryType type, int p, double c,
                                               Direction perturbed = Direction::Down) {
  return TransitionModel(std::make_shared<detail::BoundaryPerturbedFamily>(type, p, c, perturbed));
}

inline TransitionModel make_tabulated(TabulatedSpec up, TabulatedSpec down, double alpha_inf_up = 1.0,
                                      double alpha_inf_down = 1.0) {
  return TransitionModel(std::make_shared<detail::TabulatedFamily>(std::move(up), std::move(down),
                                                                   alpha_inf_up, alpha_inf_down));
}

inline TransitionModel make_prime_lacunar(double lambda, int r) {
  return TransitionModel(std::make_shared<detail::PrimeLacunarFamily>(lambda, r));
}

inline TransitionModel make_random_lacunar(int p, std::uint64_t seed) {
  return TransitionModel(std::make_shared<detail::RandomLacunarFamily>(p, seed));
}

inline TransitionModel make_override(TransitionModel base, std::map<std::int64_t, double> up,
                                     std::map<std::int64_t, double> down) {
  return TransitionModel(
      std::make_shared<detail::OverrideFamily>(std::move(base), std::move(up), std::move(down)));
}

inline bool in_prime_multiples(std::int64_t n, int r) {
  return PrimeTable::instance().in_multiples(n, r);
}

// ---------------------------------------------------------------------------
// Admissibility

inline constexpr double kDivergenceSum = 50.0;
inline constexpr double kDivergenceDecade = 0.5;

struct DirectionAdmissibility {
  Direction dir = Direction::Up;
  AdmissibilityStatus status = AdmissibilityStatus::Inconclusive;
  std::string rule;
  std::optional<std::int64_t> witness;
  std::optional<double> partial_sum;
  std::optional<double> last_decade_increase;
  std::optional<std::int64_t> horizon;
};

struct AdmissibilityVerdict {
  AdmissibilityStatus status = AdmissibilityStatus::Inconclusive;
  std::array<DirectionAdmissibility, 2> directions;

  const DirectionAdmissibility& at(Direction d) const { return directions[index(d)]; }
};

inline DirectionAdmissibility admissibility(const TransitionModel& m, Direction d,
                                            std::int64_t horizon) {
  if (horizon < 1) throw InvalidParameter("admissibility horizon must be >= 1");
  DirectionAdmissibility r;
  r.dir = d;
  if (!(m.alpha_inf(d) > 0)) {
    r.status = AdmissibilityStatus::NotAdmissible;
    r.rule = "alpha-inf-zero";
    return r;
  }
  const auto& f = m.family();
  auto rule = f.admissibility_rule(d);
  if (!rule)
    if (auto e = f.exponents(d)) rule = detail::iterated_log_rule(*e);
  if (rule && rule->status == AdmissibilityStatus::Admissible) {
    r.status = rule->status;
    r.rule = rule->rule;
    return r;
  }
  double sum = 0.0, at_decade = 0.0;
  const std::int64_t decade = std::max<std::int64_t>(1, horizon / 10);
  for (std::int64_t n = 1; n <= horizon; ++n) {
    const double a = m.alpha(d, n);
    if (a >= 1.0) {
      r.status = AdmissibilityStatus::Admissible;
      r.rule = "alpha-equals-one";
      r.witness = n;
      return r;
    }
    sum += a;
    if (n == decade) at_decade = sum;
  }
  r.partial_sum = sum;
  r.last_decade_increase = sum - at_decade;
  r.horizon = horizon;
  if (rule) {
    r.status = rule->status;
    r.rule = rule->rule;
    return r;
  }
  if (sum > kDivergenceSum && sum - at_decade > kDivergenceDecade) {
    r.status = AdmissibilityStatus::Admissible;
    r.rule = "numeric-divergence";
  } else {
    r.status = AdmissibilityStatus::Inconclusive;
    r.rule = "numeric";
  }
  return r;
}

inline AdmissibilityVerdict admissibility(const TransitionModel& m, std::int64_t horizon = 1'000'000) {
  AdmissibilityVerdict v;
  for (Direction d : kDirections) v.directions[index(d)] = admissibility(m, d, horizon);
  auto is = [&](AdmissibilityStatus s) {
    return v.directions[0].status == s || v.directions[1].status == s;
  };
  if (is(AdmissibilityStatus::NotAdmissible))
    v.status = AdmissibilityStatus::NotAdmissible;
  else if (is(AdmissibilityStatus::Inconclusive))
    v.status = AdmissibilityStatus::Inconclusive;
  else
    v.status = AdmissibilityStatus::Admissible;
  return v;
}

}  // namespace prw
