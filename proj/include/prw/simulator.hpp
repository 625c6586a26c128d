#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <type_traits>
#include <vector>

#include "prw/rng.hpp"
#include "prw/tails.hpp"
#include "prw/transitions.hpp"

namespace prw {

struct SimulationOptions {
  bool store_path = false;
  bool store_runs = true;
  std::int64_t cap = kDefaultRunCap;
};

struct TrajectorySummary {
  std::int64_t steps = 0;
  std::int64_t final_position = 0;
  std::optional<std::vector<std::int64_t>> positions;  // S_0 .. S_steps
  std::vector<std::int64_t> breaking_times;            // B_1, B_2, ...
  std::vector<std::int64_t> run_lengths;               // tau^d_1, tau^u_1, tau^d_2, ...
  std::vector<std::int64_t> skeleton_M;
  std::vector<std::int64_t> skeleton_T;
  std::int64_t completed_pairs = 0;
  std::int64_t final_M = 0;
  std::int64_t sign_changes_M = 0;
  std::int64_t min_pos = 0;
  std::int64_t max_pos = 0;
  std::int64_t returns_to_origin = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrajectorySummary&, const TrajectorySummary&) = default;
};

// Counts strict sign changes of a sequence, ignoring zeros.
template <class T>
class SignChangeCounter {
 public:
  void push(T x) {
    const int s = x > T{0} ? 1 : (x < T{0} ? -1 : 0);
    if (s == 0) return;
    if (last_ != 0 && s != last_) ++count_;
    last_ = s;
  }
  std::int64_t count() const noexcept { return count_; }

 private:
  int last_ = 0;
  std::int64_t count_ = 0;
};

namespace detail {

struct PlainRuns {
  PlainRuns(const TransitionModel& m, std::int64_t cap)
      : up(m, Direction::Up, cap), down(m, Direction::Down, cap) {}
  std::int64_t draw(Direction d, double v, std::int64_t limit) {
    return (d == Direction::Up ? up : down)(v, limit);
  }
  void finished(Direction, std::int64_t, bool) {}
  RunSampler up;
  RunSampler down;
};

// Alternating descent/rise runs; the first run is a descent starting at time 0.
template <class Runs>
TrajectorySummary run_walk(Runs& runs, std::int64_t steps, std::uint64_t seed, const SimulationOptions& opt) {
  if (steps < 1) throw InvalidParameter("steps must be >= 1");
  TrajectorySummary s;
  s.steps = steps;
  s.seed = seed;
  UniformStream vd(stream_seed(seed, Stream::Down));
  UniformStream vu(stream_seed(seed, Stream::Up));
  if (opt.store_path) {
    s.positions.emplace();
    s.positions->reserve(static_cast<std::size_t>(steps) + 1);
    s.positions->push_back(0);
  }
  SignChangeCounter<std::int64_t> signs;
  std::int64_t pos = 0, t = 0, M = 0, T = 0, tau_d = 0;
  Direction dir = Direction::Down;
  while (t < steps) {
    const std::int64_t remaining = steps - t;
    const double v = (dir == Direction::Down ? vd : vu).next();
    const std::int64_t tau = runs.draw(dir, v, remaining);
    const bool complete = tau <= remaining;
    const std::int64_t len = complete ? tau : remaining;
    runs.finished(dir, len, complete);
    const std::int64_t next = pos + step(dir) * len;
    if ((dir == Direction::Up && pos < 0 && next >= 0) || (dir == Direction::Down && pos > 0 && next <= 0))
      ++s.returns_to_origin;
    if (s.positions)
      for (std::int64_t k = 1; k <= len; ++k) s.positions->push_back(pos + step(dir) * k);
    pos = next;
    s.min_pos = std::min(s.min_pos, pos);
    s.max_pos = std::max(s.max_pos, pos);
    t += len;
    if (!complete) break;
    if (opt.store_runs) {
      s.breaking_times.push_back(t);
      s.run_lengths.push_back(tau);
    }
    if (dir == Direction::Down) {
      tau_d = tau;
    } else {
      M += tau - tau_d;
      T += tau + tau_d;
      ++s.completed_pairs;
      signs.push(M);
      if (opt.store_runs) {
        s.skeleton_M.push_back(M);
        s.skeleton_T.push_back(T);
      }
    }
    dir = opposite(dir);
  }
  s.final_position = pos;
  s.final_M = M;
  s.sign_changes_M = signs.count();
  return s;
}

}  // namespace detail

inline std::int64_t sample_run(const TransitionModel& m, Direction d, UniformStream& stream,
                               std::int64_t cap = kDefaultRunCap) {
  RunSampler s(m, d, cap);
  return s(stream.next());
}

inline TrajectorySummary simulate(const TransitionModel& m, std::int64_t steps, std::uint64_t seed,
                                  const SimulationOptions& opt = {}) {
  detail::PlainRuns runs(m, opt.cap);
  return detail::run_walk(runs, steps, seed, opt);
}

// ---------------------------------------------------------------------------
// Skeleton walks

template <class Value>
struct SkeletonPath {
  std::vector<Value> T;
  std::vector<Value> M;
  Value final_M{};
  Value final_T{};
  std::int64_t sign_changes = 0;
};

struct SkeletonOptions {
  bool store = true;
  std::int64_t cap = kDefaultRunCap;  // integral values only
};

namespace detail {

template <class Value>
struct SkeletonDraw {
  SkeletonDraw(const TransitionModel& m, std::uint64_t seed, std::int64_t cap)
      : up(m, Direction::Up, cap), down(m, Direction::Down, cap),
        vd(stream_seed(seed, Stream::Down)), vu(stream_seed(seed, Stream::Up)) {}

  Value draw(Direction d) {
    auto& s = d == Direction::Up ? up : down;
    auto& v = d == Direction::Up ? vu : vd;
    if constexpr (std::is_floating_point_v<Value>)
      return static_cast<Value>(s.real(v.next()));
    else
      return static_cast<Value>(s(v.next()));
  }

  RunSampler up, down;
  UniformStream vd, vu;
};

template <class Value>
Value checked_add(Value a, Value b) {
  if constexpr (std::is_integral_v<Value>) {
    Value r;
    if (__builtin_add_overflow(a, b, &r)) throw Error("skeleton value overflows 64 bits; use a floating value type");
    return r;
  } else {
    return a + b;
  }
}

}  // namespace detail

template <class Value = std::int64_t>
SkeletonPath<Value> skeleton(const TransitionModel& m, std::int64_t pairs, std::uint64_t seed,
                             const SkeletonOptions& opt = {}) {
  if (pairs < 1) throw InvalidParameter("pairs must be >= 1");
  detail::SkeletonDraw<Value> d(m, seed, opt.cap);
  SkeletonPath<Value> p;
  if (opt.store) {
    p.T.reserve(static_cast<std::size_t>(pairs));
    p.M.reserve(static_cast<std::size_t>(pairs));
  }
  SignChangeCounter<Value> signs;
  Value M{}, T{};
  for (std::int64_t k = 0; k < pairs; ++k) {
    const Value td = d.draw(Direction::Down);
    const Value tu = d.draw(Direction::Up);
    M = detail::checked_add<Value>(M, tu - td);
    T = detail::checked_add<Value>(T, detail::checked_add<Value>(tu, td));
    signs.push(M);
    if (opt.store) {
      p.M.push_back(M);
      p.T.push_back(T);
    }
  }
  p.final_M = M;
  p.final_T = T;
  p.sign_changes = signs.count();
  return p;
}

template <class Value>
struct RandomizedSkeletonPath {
  std::vector<Value> M;
  Value final_M{};
  std::int64_t sign_changes = 0;
  std::int64_t rises = 0;  // increments with xi = 1
};

// M^xi with increments xi tau^u - (1 - xi) tau^d; both run lengths are drawn every step
// so the run-length streams stay aligned with skeleton() under the same seed.
template <class Value = std::int64_t>
RandomizedSkeletonPath<Value> randomized_skeleton(const TransitionModel& m, double p, std::int64_t n,
                                                  std::uint64_t seed, const SkeletonOptions& opt = {}) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("randomized skeleton needs p in (0,1)");
  if (n < 1) throw InvalidParameter("n must be >= 1");
  detail::SkeletonDraw<Value> d(m, seed, opt.cap);
  UniformStream coin(stream_seed(seed, Stream::Coin));
  RandomizedSkeletonPath<Value> r;
  if (opt.store) r.M.reserve(static_cast<std::size_t>(n));
  SignChangeCounter<Value> signs;
  Value M{};
  for (std::int64_t k = 0; k < n; ++k) {
    const Value td = d.draw(Direction::Down);
    const Value tu = d.draw(Direction::Up);
    const bool xi = coin.bernoulli(p);
    r.rises += xi ? 1 : 0;
    M = detail::checked_add<Value>(M, xi ? tu : -td);
    signs.push(M);
    if (opt.store) r.M.push_back(M);
  }
  r.final_M = M;
  r.sign_changes = signs.count();
  return r;
}

// ---------------------------------------------------------------------------
// Coupling

// Step-by-step view of a walk, drawing runs lazily from the seed's streams.
class PathCursor {
 public:
  PathCursor(const TransitionModel& m, std::int64_t steps, std::uint64_t seed, std::int64_t cap = kDefaultRunCap)
      : runs_(m, cap), steps_(steps), vd_(stream_seed(seed, Stream::Down)), vu_(stream_seed(seed, Stream::Up)) {}

  std::int64_t position() const noexcept { return pos_; }
  std::int64_t time() const noexcept { return t_; }

  std::int64_t advance() {
    if (left_ == 0) {
      if (t_ > 0) dir_ = opposite(dir_);
      const double v = (dir_ == Direction::Down ? vd_ : vu_).next();
      const std::int64_t tau = runs_.draw(dir_, v, steps_ - t_);
      left_ = std::min(tau, steps_ - t_);
    }
    --left_;
    ++t_;
    pos_ += step(dir_);
    return pos_;
  }

 private:
  detail::PlainRuns runs_;
  std::int64_t steps_;
  UniformStream vd_, vu_;
  Direction dir_ = Direction::Down;
  std::int64_t left_ = 0;
  std::int64_t t_ = 0;
  std::int64_t pos_ = 0;
};

struct CouplingResult {
  TrajectorySummary a;
  TrajectorySummary b;
  std::int64_t violations = 0;  // steps with S_n > S~_n
  std::optional<std::int64_t> first_violation;
  bool identical = true;
};

// Both walks read the same uniform streams through their own inverse CDFs.
inline CouplingResult couple(const TransitionModel& a, const TransitionModel& b, std::int64_t steps,
                             std::uint64_t seed, const SimulationOptions& opt = {}) {
  if (steps < 1) throw InvalidParameter("steps must be >= 1");
  CouplingResult r;
  PathCursor ca(a, steps, seed, opt.cap), cb(b, steps, seed, opt.cap);
  for (std::int64_t t = 1; t <= steps; ++t) {
    const std::int64_t sa = ca.advance(), sb = cb.advance();
    if (sa != sb) r.identical = false;
    if (sa > sb) {
      ++r.violations;
      if (!r.first_violation) r.first_violation = t;
    }
  }
  r.a = simulate(a, steps, seed, opt);
  r.b = simulate(b, steps, seed, opt);
  return r;
}

// Tail dominance T_a^u <= T_b^u and T_a^d >= T_b^d for n <= horizon, the hypothesis under which
// couple() must keep S_a <= S_b.
inline bool tail_dominance(const TransitionModel& a, const TransitionModel& b, std::int64_t horizon) {
  for (std::int64_t n = 1; n <= horizon; ++n) {
    if (log_tail(a, Direction::Up, n) > log_tail(b, Direction::Up, n)) return false;
    if (log_tail(a, Direction::Down, n) < log_tail(b, Direction::Down, n)) return false;
  }
  return true;
}

}  // namespace prw
