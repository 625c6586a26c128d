#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "prw/rng.hpp"
#include "prw/sequence.hpp"
#include "prw/transitions.hpp"

namespace prw {

inline constexpr std::int64_t kPerturbationProbe = 100'000;
inline constexpr double kBoundedBand = 20.0;

struct Perturbation {
  std::array<SequenceSpec, 2> gamma;  // indexed by direction
  std::string tag;

  const SequenceSpec& at(Direction d) const { return gamma[index(d)]; }
  double value(Direction d, std::int64_t n) const { return gamma[index(d)].at(n); }
  bool is_zero() const { return gamma[0].is_zero() && gamma[1].is_zero(); }

  friend bool operator==(const Perturbation&, const Perturbation&) = default;
};

inline Perturbation zero_perturbation() { return {}; }

namespace detail {

inline bool term_square_summable(const SequenceTerm& t) {
  return t.coef == 0.0 || t.power > 0.5 || (t.power == 0.5 && t.log_depth >= 1);
}

inline bool term_summable(const SequenceTerm& t) { return t.coef == 0.0 || t.power > 1.0; }

// Terms whose effect on the tail is a bounded factor: absolutely summable, or alternating and square summable.
inline bool term_bounded(const SequenceTerm& t) {
  return term_summable(t) || (t.alternating && term_square_summable(t));
}

class PerturbedFamily final : public Family {
 public:
  PerturbedFamily(TransitionModel base, Perturbation p) : base_(std::move(base)), pert_(std::move(p)) {
    for (const auto& g : pert_.gamma)
      for (const auto& t : g.terms)
        if (!std::isfinite(t.coef) || !(t.power > 0.0) || t.log_depth < 0 || t.log_depth > kMaxLogDepth)
          throw InvalidParameter("perturbation term needs finite coef, power > 0, log depth in [0,3]");
  }

  ModelKind kind() const noexcept override { return ModelKind::Composite; }
  std::string_view name() const noexcept override { return "perturbed"; }
  const TransitionModel& base() const noexcept { return base_; }
  const Perturbation& perturbation() const noexcept { return pert_; }

  double raw(Direction d, std::int64_t n) const { return base_.alpha(d, n) + pert_.value(d, n); }

  double alpha(Direction d, std::int64_t n) const override { return std::clamp(raw(d, n), 0.0, 1.0); }

  double alpha_at(Direction d, double x) const override {
    const auto& g = pert_.at(d);
    if (g.is_zero()) return base_.family().alpha_at(d, x);
    double s = base_.family().alpha_at(d, x);
    for (const auto& t : g.terms) s += t.at_real(x);
    return std::clamp(s, 0.0, 1.0);
  }

  std::int64_t smooth_from(Direction d) const override {
    const std::int64_t b = base_.family().smooth_from(d);
    const auto& g = pert_.at(d);
    if (g.is_zero() || b == 0) return b;
    std::int64_t s = std::max<std::int64_t>(b, static_cast<std::int64_t>(g.head.size()) + 1);
    for (const auto& t : g.terms) {
      if (t.alternating && t.coef != 0.0) return 0;
      s = std::max(s, log_start(t.log_depth));
    }
    return s;
  }

  double alpha_inf(Direction d) const override { return base_.alpha_inf(d); }
  std::vector<double> params() const override { return base_.params(); }
  nlohmann::json params_json() const override;

  // Exponent vector of the perturbed tail: non-summable 1/(n log n ...) terms shift the matching entry,
  // bounded terms leave it alone, anything else has no closed form here.
  std::optional<std::vector<double>> exponents(Direction d) const override {
    auto e = base_.family().exponents(d);
    const auto& g = pert_.at(d);
    if (!e || g.is_zero()) return e;
    for (std::size_t n = 1; n <= g.head.size(); ++n)
      if (raw(d, static_cast<std::int64_t>(n)) >= 1.0) return std::nullopt;
    for (const auto& t : g.terms) {
      if (term_bounded(t)) continue;
      if (t.alternating || t.power != 1.0) return std::nullopt;
      if (static_cast<int>(e->size()) <= t.log_depth) e->resize(t.log_depth + 1, 0.0);
      (*e)[t.log_depth] += t.coef;
    }
    return e;
  }

  std::optional<double> limsup(Direction d) const override { return base_.family().limsup(d); }

  std::optional<bool> alpha_square_summable(Direction d) const override {
    const auto& g = pert_.at(d);
    for (const auto& t : g.terms)
      if (!term_square_summable(t)) return std::nullopt;
    return base_.family().alpha_square_summable(d);
  }

  bool mirror_symmetric() const override {
    return base_.family().mirror_symmetric() && pert_.gamma[0] == pert_.gamma[1];
  }

 private:
  TransitionModel base_;
  Perturbation pert_;
};

inline nlohmann::json sequence_json(const SequenceSpec& s) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : s.terms)
    terms.push_back({{"coef", t.coef}, {"power", t.power}, {"log_depth", t.log_depth}, {"alternating", t.alternating}});
  return {{"head", s.head}, {"terms", terms}};
}

inline nlohmann::json PerturbedFamily::params_json() const {
  return {{"base", descriptor(base_)},
          {"up", sequence_json(pert_.at(Direction::Up))},
          {"down", sequence_json(pert_.at(Direction::Down))},
          {"tag", pert_.tag}};
}

}  // namespace detail

inline TransitionModel apply_perturbation(const TransitionModel& base, const Perturbation& pert,
                                          std::int64_t probe = kPerturbationProbe) {
  auto f = std::make_shared<detail::PerturbedFamily>(base, pert);
  for (Direction d : kDirections) {
    const auto& g = pert.at(d);
    if (g.is_zero()) continue;
    for (std::int64_t n = 1; n <= probe; ++n) {
      const double v = f->raw(d, n);
      if (!(v >= 0.0 && v <= 1.0)) throw RangeViolation(d, n, v);
    }
  }
  return TransitionModel(std::move(f));
}

inline const detail::PerturbedFamily* as_perturbed(const TransitionModel& m) {
  return dynamic_cast<const detail::PerturbedFamily*>(&m.family());
}

// ---------------------------------------------------------------------------
// Bounded perturbations

enum class Boundedness { Bounded, Unbounded, Inconclusive };

inline std::string_view to_string(Boundedness b) {
  switch (b) {
    case Boundedness::Bounded: return "Bounded";
    case Boundedness::Unbounded: return "Unbounded";
    case Boundedness::Inconclusive: return "Inconclusive";
  }
  return "?";
}

struct DirectionBoundedness {
  Direction dir = Direction::Up;
  Boundedness status = Boundedness::Inconclusive;
  std::string rule;
  double partial_sum = 0.0;  // sum_{k<=horizon} log(1 - gamma_k / (1 - alpha_k)), when evaluated
  double min_sum = 0.0;
  double max_sum = 0.0;
  std::int64_t horizon = 0;
};

struct BoundednessVerdict {
  Boundedness status = Boundedness::Inconclusive;
  std::array<DirectionBoundedness, 2> directions;
  const DirectionBoundedness& at(Direction d) const { return directions[index(d)]; }
};

namespace detail {

inline std::optional<DirectionBoundedness> analytic_boundedness(const TransitionModel& base, const SequenceSpec& g,
                                                                Direction d) {
  if (g.is_zero()) return DirectionBoundedness{d, Boundedness::Bounded, "zero-perturbation"};
  const auto ls = base.family().limsup(d);
  if (!ls || !(*ls < 1.0)) return std::nullopt;
  // a head value that empties the perturbed tail is left to the numeric pass
  for (std::size_t k = 1; k <= g.head.size(); ++k) {
    const double a = base.alpha(d, static_cast<std::int64_t>(k));
    if (a >= 1.0 || g.head[k - 1] / (1.0 - a) >= 1.0) return std::nullopt;
  }
  for (const auto& t : g.terms)
    if (!term_square_summable(t)) return std::nullopt;
  if (std::all_of(g.terms.begin(), g.terms.end(), term_bounded))
    return DirectionBoundedness{d, Boundedness::Bounded, "bounded-partial-sums-square-summable"};
  // Leading non-bounded term: smallest power, then smallest log depth; like terms are merged.
  std::optional<std::pair<double, int>> lead;
  for (const auto& t : g.terms) {
    if (term_bounded(t)) continue;
    if (t.alternating) return std::nullopt;
    const std::pair<double, int> key{t.power, t.log_depth};
    if (!lead || key < *lead) lead = key;
  }
  double c = 0.0;
  for (const auto& t : g.terms)
    if (!term_bounded(t) && std::pair<double, int>{t.power, t.log_depth} == *lead) c += t.coef;
  if (c == 0.0) return std::nullopt;
  return DirectionBoundedness{d, Boundedness::Unbounded, "divergent-one-signed-sum"};
}

inline DirectionBoundedness numeric_boundedness(const TransitionModel& base, const SequenceSpec& g, Direction d,
                                                std::int64_t horizon) {
  DirectionBoundedness r{d, Boundedness::Inconclusive, "numeric-band", 0.0, 0.0, 0.0, horizon};
  double s = 0.0;
  std::int64_t last_flip = 0;  // last k at which the partial sums changed direction
  int last_sign = 0;
  for (std::int64_t k = 1; k <= horizon; ++k) {
    const double gk = g.at(k);
    if (gk == 0.0) continue;
    const double a = base.alpha(d, k);
    if (a >= 1.0) throw DivisionByZero(d, k);
    const double x = gk / (1.0 - a);
    if (x >= 1.0) {
      r.status = Boundedness::Unbounded;
      r.rule = "perturbed-tail-vanishes";
      r.partial_sum = -std::numeric_limits<double>::infinity();
      r.min_sum = r.partial_sum;
      r.horizon = k;
      return r;
    }
    const double inc = std::log1p(-x);
    const int sg = inc > 0 ? 1 : (inc < 0 ? -1 : 0);
    if (sg != 0 && sg != last_sign) {
      last_flip = k;
      last_sign = sg;
    }
    s += inc;
    r.min_sum = std::min(r.min_sum, s);
    r.max_sum = std::max(r.max_sum, s);
  }
  r.partial_sum = s;
  if (r.min_sum >= -kBoundedBand && r.max_sum <= kBoundedBand) {
    r.status = Boundedness::Bounded;
    r.rule = "numeric-band";
  } else if (std::abs(s) > kBoundedBand && last_flip <= horizon / 10) {
    r.status = Boundedness::Unbounded;
    r.rule = "numeric-monotone-drift";
  }
  return r;
}

}  // namespace detail

inline BoundednessVerdict bounded_perturbation_verdict(const TransitionModel& base, const Perturbation& pert,
                                                       std::int64_t horizon = 10'000'000) {
  if (horizon < 1) throw InvalidParameter("horizon must be >= 1");
  BoundednessVerdict v;
  for (Direction d : kDirections) {
    const auto& g = pert.at(d);
    if (auto a = detail::analytic_boundedness(base, g, d)) {
      // Guard still applies to the probed range.
      for (std::int64_t k = 1; k <= std::min(horizon, kPerturbationProbe); ++k)
        if (g.at(k) != 0.0 && base.alpha(d, k) >= 1.0) throw DivisionByZero(d, k);
      a->horizon = horizon;
      v.directions[index(d)] = *a;
    } else {
      v.directions[index(d)] = detail::numeric_boundedness(base, g, d, horizon);
    }
  }
  const auto s0 = v.directions[0].status, s1 = v.directions[1].status;
  if (s0 == Boundedness::Unbounded || s1 == Boundedness::Unbounded) v.status = Boundedness::Unbounded;
  else if (s0 == Boundedness::Bounded && s1 == Boundedness::Bounded) v.status = Boundedness::Bounded;
  else v.status = Boundedness::Inconclusive;
  return v;
}

inline BoundednessVerdict bounded_perturbation_verdict(const TransitionModel& perturbed,
                                                       std::int64_t horizon = 10'000'000) {
  const auto* p = as_perturbed(perturbed);
  if (!p) throw InvalidParameter("model is not a perturbed model");
  return bounded_perturbation_verdict(p->base(), p->perturbation(), horizon);
}

// ---------------------------------------------------------------------------
// Random environments

enum class EnvDistribution { MultiplicativeUniform, TwoPoint };

inline std::string_view to_string(EnvDistribution e) {
  return e == EnvDistribution::MultiplicativeUniform ? "multiplicative_uniform" : "two_point";
}

// A_n = alpha_n * eps_n with E eps = 1: uniform on [1-w, 1+w] or +-w with probability 1/2.
struct EnvSpec {
  TransitionModel mean;
  EnvDistribution distribution = EnvDistribution::MultiplicativeUniform;
  double width = 0.0;

  // Var(A_n) / alpha_n^2
  double relative_variance() const {
    return distribution == EnvDistribution::MultiplicativeUniform ? width * width / 3.0 : width * width;
  }
  double variance(Direction d, std::int64_t n) const {
    const double a = mean.alpha(d, n);
    return a * a * relative_variance();
  }
};

struct EnvHypothesis {
  std::optional<bool> holds;  // nullopt: cannot be decided analytically
  std::array<std::optional<bool>, 2> limsup_below_one{};
  std::array<std::optional<bool>, 2> variance_summable{};
  std::string note;
};

namespace detail {

class RandomEnvFamily final : public Family {
 public:
  RandomEnvFamily(EnvSpec spec, std::uint64_t seed, EnvHypothesis h)
      : spec_(std::move(spec)), seed_(seed), hyp_(std::move(h)) {}

  ModelKind kind() const noexcept override { return ModelKind::Composite; }
  std::string_view name() const noexcept override { return "random_env"; }
  const EnvSpec& spec() const noexcept { return spec_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double alpha(Direction d, std::int64_t n) const override {
    const double a = spec_.mean.alpha(d, n);
    if (spec_.width == 0.0 || a == 0.0) return a;
    const double u = hash_uniform(seed_, 0x656e76ULL + static_cast<std::uint64_t>(index(d)),
                                  static_cast<std::uint64_t>(n));
    const double eps = spec_.distribution == EnvDistribution::MultiplicativeUniform
                           ? 1.0 + spec_.width * (2.0 * u - 1.0)
                           : (u < 0.5 ? 1.0 - spec_.width : 1.0 + spec_.width);
    return std::clamp(a * eps, 0.0, kAlphaCeiling);
  }

  double alpha_inf(Direction d) const override { return spec_.mean.alpha_inf(d); }
  std::vector<double> params() const override { return spec_.mean.params(); }
  nlohmann::json params_json() const override {
    return {{"mean", descriptor(spec_.mean)},
            {"distribution", std::string(to_string(spec_.distribution))},
            {"width", spec_.width},
            {"seed", seed_}};
  }

  // Under the variance condition the realized tail is a.s. a positive multiple of the mean tail,
  // so the asymptotic exponents carry over.
  std::optional<std::vector<double>> exponents(Direction d) const override {
    if (hyp_.holds != true && spec_.width != 0.0) return std::nullopt;
    return spec_.mean.family().exponents(d);
  }
  std::optional<AnalyticRule> admissibility_rule(Direction d) const override {
    if (hyp_.holds != true && spec_.width != 0.0) return std::nullopt;
    return spec_.mean.family().admissibility_rule(d);
  }
  std::optional<double> limsup(Direction d) const override {
    const auto l = spec_.mean.family().limsup(d);
    if (!l) return std::nullopt;
    return std::min(1.0, *l * (1.0 + spec_.width));
  }
  std::optional<bool> alpha_square_summable(Direction d) const override {
    return spec_.mean.family().alpha_square_summable(d);
  }
  bool mirror_symmetric() const override { return spec_.width == 0.0 && spec_.mean.family().mirror_symmetric(); }

 private:
  EnvSpec spec_;
  std::uint64_t seed_;
  EnvHypothesis hyp_;
};

}  // namespace detail

inline EnvHypothesis env_hypothesis(const EnvSpec& spec) {
  EnvHypothesis h;
  if (spec.width == 0.0) {
    h.holds = true;
    h.limsup_below_one = {true, true};
    h.variance_summable = {true, true};
    h.note = "zero variance";
    return h;
  }
  bool all = true, undecided = false;
  for (Direction d : kDirections) {
    const auto i = index(d);
    if (auto l = spec.mean.family().limsup(d)) h.limsup_below_one[i] = *l * (1.0 + spec.width) < 1.0;
    h.variance_summable[i] = spec.mean.family().alpha_square_summable(d);
    for (const auto& c : {h.limsup_below_one[i], h.variance_summable[i]}) {
      if (!c) undecided = true;
      else if (!*c) all = false;
    }
  }
  if (!all) h.holds = false;
  else if (!undecided) h.holds = true;
  h.note = "variance is " + std::to_string(spec.relative_variance()) + " * alpha_n^2";
  return h;
}

struct RealizedEnv {
  TransitionModel model;
  EnvHypothesis hypothesis;
};

inline RealizedEnv realize_random_env(const EnvSpec& spec, std::uint64_t seed) {
  if (!(spec.width >= 0.0 && spec.width <= 1.0)) throw InvalidParameter("environment width must be in [0,1]");
  auto h = env_hypothesis(spec);
  return {TransitionModel(std::make_shared<detail::RandomEnvFamily>(spec, seed, h)), h};
}

}  // namespace prw
