#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "prw/classifier.hpp"
#include "prw/simulator.hpp"

namespace prw {

// Finite binary context subtree. A node without children is a leaf carrying the switch probability q;
// otherwise children[0] follows letter u and children[1] letter d.
struct GraftNode {
  double q = 0.0;
  std::vector<GraftNode> children;

  static GraftNode leaf(double q) { return GraftNode{q, {}}; }
  static GraftNode split(GraftNode u, GraftNode d) {
    GraftNode n;
    n.children.push_back(std::move(u));
    n.children.push_back(std::move(d));
    return n;
  }

  bool is_leaf() const noexcept { return children.empty(); }

  int depth() const {
    if (is_leaf()) return 0;
    return 1 + std::max(children[0].depth(), children[1].depth());
  }

  void leaves(std::vector<double>& out) const {
    if (is_leaf()) {
      out.push_back(q);
      return;
    }
    for (const auto& c : children) c.leaves(out);
  }

  friend bool operator==(const GraftNode&, const GraftNode&) = default;
};

// Comb leaf l^n l' where the graft is attached.
struct GraftKey {
  Direction dir = Direction::Up;
  std::int64_t n = 1;
  friend auto operator<=>(const GraftKey&, const GraftKey&) = default;
};

struct GraftedTree {
  explicit GraftedTree(TransitionModel b) : base(std::move(b)) {}
  GraftedTree(TransitionModel b, std::map<GraftKey, GraftNode> g) : base(std::move(b)), grafts(std::move(g)) {}

  TransitionModel base;
  std::map<GraftKey, GraftNode> grafts;

  int max_extra_depth() const {
    int d = 0;
    for (const auto& [k, node] : grafts) d = std::max(d, node.depth());
    return d;
  }

  void validate() const {
    for (const auto& [k, node] : grafts) {
      if (k.n < 1) throw ContextUnresolvable("graft attached at run length < 1");
      check(node);
    }
  }

 private:
  static void check(const GraftNode& node) {
    if (node.is_leaf()) {
      if (!(node.q >= 0.0 && node.q < 1.0))
        throw InvalidParameter("graft leaf probability must be in [0,1)");
      return;
    }
    if (node.children.size() != 2) throw ContextUnresolvable("graft node must have 0 or 2 children");
    for (const auto& c : node.children) check(c);
  }
};

struct LeafStats {
  std::int64_t visits = 0;
  std::int64_t switches = 0;
  double frequency() const { return visits ? static_cast<double>(switches) / static_cast<double>(visits) : 0.0; }
};

struct GraftedTrajectory {
  TrajectorySummary summary;
  std::map<GraftKey, std::vector<LeafStats>> leaves;  // leaf order: depth first, u before d
};

namespace detail {

class GraftedRuns {
 public:
  GraftedRuns(const GraftedTree& tree, std::int64_t cap)
      : tree_(&tree), plain_(tree.base, cap), cap_(cap), keep_(tree.max_extra_depth() + 2) {
    // Letters before time 0 are all u.
    history_.push_back({Direction::Up, std::numeric_limits<std::int64_t>::max()});
    for (const auto& [k, node] : tree.grafts) {
      std::vector<double> qs;
      node.leaves(qs);
      stats[k].assign(qs.size(), {});
    }
  }

  std::int64_t draw(Direction d, double v, std::int64_t limit) {
    active_.clear();
    for (auto it = tree_->grafts.lower_bound({d, 1}); it != tree_->grafts.end() && it->first.dir == d; ++it) {
      std::size_t leaf = 0;
      const double q = resolve(it->second, leaf);
      active_.push_back({it->first.n, q, leaf});
    }
    if (active_.empty()) return plain_.draw(d, v, limit);
    return draw_overridden(d, v, limit);
  }

  void finished(Direction d, std::int64_t len, bool complete) {
    for (const auto& a : active_) {
      if (a.n < len || (a.n == len && complete)) {
        auto& s = stats[{d, a.n}][a.leaf];
        ++s.visits;
        if (a.n == len) ++s.switches;
      }
    }
    if (complete) {
      history_.push_back({d, len});
      while (static_cast<int>(history_.size()) > keep_) history_.pop_front();
    }
  }

  std::map<GraftKey, std::vector<LeafStats>> stats;

 private:
  struct Active {
    std::int64_t n;
    double q;
    std::size_t leaf;
  };

  // Letter j positions before the comb leaf's separating letter.
  Direction letter(std::size_t j) const {
    auto it = history_.rbegin();
    std::int64_t skip = static_cast<std::int64_t>(j) + 1;
    for (; it != history_.rend(); ++it) {
      if (skip < it->second) return it->first;
      skip -= it->second;
    }
    throw ContextUnresolvable("history shorter than graft depth");
  }

  double resolve(const GraftNode& root, std::size_t& leaf) const {
    const GraftNode* node = &root;
    std::size_t j = 0;
    std::size_t offset = 0;
    while (!node->is_leaf()) {
      if (node->children.size() != 2) throw ContextUnresolvable("graft node must have 0 or 2 children");
      const Direction l = letter(j++);
      if (l == Direction::Up) {
        node = &node->children[0];
      } else {
        std::vector<double> skipped;
        node->children[0].leaves(skipped);
        offset += skipped.size();
        node = &node->children[1];
      }
    }
    leaf = offset;
    return node->q;
  }

  std::int64_t draw_overridden(Direction d, double v, std::int64_t limit) {
    const double target = std::log1p(-v);
    std::int64_t g = 0;
    for (const auto& a : active_) g = std::max(g, a.n);
    const auto& base = tree_->base;
    auto alpha_eff = [&](std::int64_t k) {
      for (const auto& a : active_)
        if (a.n == k) return a.q;
      return base.alpha(d, k);
    };
    double l = 0.0;
    for (std::int64_t m = 1; m <= g; ++m) {
      const double a = alpha_eff(m);
      l = a >= 1.0 ? -std::numeric_limits<double>::infinity() : l + std::log1p(-a);
      if (l <= target) return m > limit ? limit + 1 : m;
      if (m >= limit) return limit + 1;
    }
    const double lb = base.cache(d).log_tail(g + 1);
    if (std::isfinite(lb)) {
      const double shifted = target + (lb - l);
      RunSampler& s = d == Direction::Up ? plain_.up : plain_.down;
      const double v2 = -std::expm1(shifted);
      const std::int64_t n = s(std::min(std::max(v2, 0.0), std::nextafter(1.0, 0.0)), limit);
      return std::max(n, g + 1);
    }
    // Base tail vanished inside the overridden prefix: continue the product explicitly.
    for (std::int64_t m = g + 1;; ++m) {
      if (m > limit) return limit + 1;
      if (m > cap_) throw SampleCapExceeded(d, cap_);
      const double a = base.alpha(d, m);
      l = a >= 1.0 ? -std::numeric_limits<double>::infinity() : l + std::log1p(-a);
      if (l <= target) return m;
    }
  }

  const GraftedTree* tree_;
  PlainRuns plain_;
  std::int64_t cap_;
  int keep_;
  std::deque<std::pair<Direction, std::int64_t>> history_;
  std::vector<Active> active_;
};

}  // namespace detail

inline GraftedTrajectory simulate_grafted(const GraftedTree& tree, std::int64_t steps, std::uint64_t seed,
                                          const SimulationOptions& opt = {}) {
  tree.validate();
  detail::GraftedRuns runs(tree, opt.cap);
  GraftedTrajectory r;
  r.summary = detail::run_walk(runs, steps, seed, opt);
  r.leaves = std::move(runs.stats);
  return r;
}

struct GraftBounds {
  TransitionModel check;  // sup on rises, inf on descents
  TransitionModel hat;    // inf on rises, sup on descents
};

inline GraftBounds graft_bounds(const GraftedTree& tree) {
  tree.validate();
  std::map<std::int64_t, double> check_up, check_down, hat_up, hat_down;
  for (const auto& [k, node] : tree.grafts) {
    std::vector<double> qs;
    node.leaves(qs);
    const auto [lo, hi] = std::minmax_element(qs.begin(), qs.end());
    if (k.dir == Direction::Up) {
      check_up[k.n] = *hi;
      hat_up[k.n] = *lo;
    } else {
      check_down[k.n] = *lo;
      hat_down[k.n] = *hi;
    }
  }
  if (tree.grafts.empty()) return {tree.base, tree.base};
  return {make_override(tree.base, check_up, check_down), make_override(tree.base, hat_up, hat_down)};
}

struct GraftAssessment {
  Classification check;
  Classification hat;
  std::optional<Label> implied;  // common label of both bounds when conclusive
};

inline GraftAssessment assess_graft(const GraftedTree& tree, const Budget& budget = {}) {
  const auto b = graft_bounds(tree);
  GraftAssessment a{classify(b.check, budget), classify(b.hat, budget), std::nullopt};
  if (a.check.label == a.hat.label && a.check.label != Label::Inconclusive) a.implied = a.check.label;
  return a;
}

}  // namespace prw
