#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "prw/classifier.hpp"
#include "prw/graft.hpp"
#include "prw/perturb.hpp"
#include "prw/transitions.hpp"

namespace prw {

using nlohmann::json;

namespace detail {

// Field access that reports the JSON path of the offending value.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& value() const { return *j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_ + ": " + what); }

  bool has(const char* key) const { return j_->is_object() && j_->contains(key); }

  Reader at(const char* key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) fail(std::string("missing field '") + key + "'");
    return Reader(*it, path_ + "." + key);
  }

  Reader at(std::size_t i) const {
    if (!j_->is_array() || i >= j_->size()) fail("index " + std::to_string(i) + " out of range");
    return Reader((*j_)[i], path_ + "[" + std::to_string(i) + "]");
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  std::int64_t integer() const {
    if (j_->is_number_integer()) return j_->get<std::int64_t>();
    if (j_->is_number_float()) {
      const double v = j_->get<double>();
      if (v == std::floor(v)) return static_cast<std::int64_t>(v);
    }
    fail("expected an integer");
  }

  std::uint64_t unsigned_integer() const {
    if (j_->is_number_unsigned()) return j_->get<std::uint64_t>();
    const auto v = integer();
    if (v < 0) fail("expected a nonnegative integer");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected a boolean");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> v;
    for (std::size_t i = 0; i < size(); ++i) v.push_back(at(i).number());
    return v;
  }

  double number_or(const char* key, double dflt) const { return has(key) ? at(key).number() : dflt; }
  std::int64_t integer_or(const char* key, std::int64_t dflt) const { return has(key) ? at(key).integer() : dflt; }
  bool boolean_or(const char* key, bool dflt) const { return has(key) ? at(key).boolean() : dflt; }
  std::string string_or(const char* key, std::string dflt) const { return has(key) ? at(key).string() : dflt; }

 private:
  const json* j_;
  std::string path_;
};

inline Direction read_direction(const Reader& r) {
  if (auto d = parse_direction(r.string())) return *d;
  r.fail("direction must be 'up' or 'down'");
}

inline BoundaryType read_boundary(const Reader& r) {
  const auto s = r.string();
  if (s == "lower") return BoundaryType::Lower;
  if (s == "upper") return BoundaryType::Upper;
  r.fail("boundary type must be 'lower' or 'upper'");
}

inline TabulatedSpec read_tabulated_side(const Reader& r) {
  TabulatedSpec s;
  if (r.value().is_object())
    for (const auto& [k, v] : r.value().items())
      if (k != "values" && k != "tail") r.fail("unknown field '" + k + "'");
  s.values = r.at("values").numbers();
  if (r.has("tail")) {
    const auto t = r.at("tail");
    const auto rule = t.string_or("rule", "repeat_last");
    if (rule == "zero") s.tail.kind = TailRuleKind::Zero;
    else if (rule == "repeat_last") s.tail.kind = TailRuleKind::RepeatLast;
    else if (rule == "power") s.tail.kind = TailRuleKind::Power;
    else if (rule == "geometric") s.tail.kind = TailRuleKind::Geometric;
    else t.at("rule").fail("unknown tail rule '" + rule + "'");
    s.tail.coef = t.number_or("coef", 0.0);
    s.tail.rate = t.number_or("rate", 0.0);
  }
  return s;
}

inline std::map<std::int64_t, double> read_override_side(const Reader& r) {
  std::map<std::int64_t, double> t;
  if (!r.value().is_object()) r.fail("expected an object of run length -> probability");
  for (const auto& [k, v] : r.value().items()) {
    std::int64_t n = 0;
    try {
      std::size_t used = 0;
      n = std::stoll(k, &used);
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      r.fail("key '" + k + "' is not an integer");
    }
    t[n] = Reader(v, r.path() + "." + k).number();
  }
  return t;
}

inline SequenceSpec read_sequence(const Reader& r) {
  SequenceSpec s;
  if (r.has("head")) s.head = r.at("head").numbers();
  if (r.has("terms")) {
    const auto ts = r.at("terms");
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const auto t = ts.at(i);
      SequenceTerm term;
      term.coef = t.at("coef").number();
      term.power = t.number_or("power", 1.0);
      term.log_depth = static_cast<int>(t.integer_or("log_depth", 0));
      term.alternating = t.boolean_or("alternating", false);
      s.terms.push_back(term);
    }
  }
  return s;
}

inline EnvDistribution read_env_distribution(const Reader& r) {
  const auto s = r.string();
  if (s == "multiplicative_uniform") return EnvDistribution::MultiplicativeUniform;
  if (s == "two_point") return EnvDistribution::TwoPoint;
  r.fail("unknown distribution '" + s + "'");
}

TransitionModel read_model(const Reader& r);

inline TransitionModel read_model_params(const std::string& kind, const Reader& p) {
  if (kind == "constant") return make_constant(p.at("p_up").number(), p.at("p_down").number());
  if (kind == "harmonic") {
    if (p.has("lambda")) {
      const double l = p.at("lambda").number();
      return make_harmonic(l, l);
    }
    return make_harmonic(p.at("lambda_up").number(), p.at("lambda_down").number());
  }
  if (kind == "log_family") return make_log_family(p.at("up").numbers(), p.at("down").numbers());
  if (kind == "boundary")
    return make_boundary(read_boundary(p.at("type")), static_cast<int>(p.at("p").integer()));
  if (kind == "boundary_perturbed")
    return make_boundary_perturbed(read_boundary(p.at("type")), static_cast<int>(p.at("p").integer()),
                                   p.at("c").number(),
                                   p.has("perturbed") ? read_direction(p.at("perturbed")) : Direction::Down);
  if (kind == "tabulated")
    return make_tabulated(read_tabulated_side(p.at("up")), read_tabulated_side(p.at("down")),
                          p.number_or("alpha_inf_up", 1.0), p.number_or("alpha_inf_down", 1.0));
  if (kind == "prime_lacunar")
    return make_prime_lacunar(p.at("lambda").number(), static_cast<int>(p.at("r").integer()));
  if (kind == "random_lacunar")
    return make_random_lacunar(static_cast<int>(p.at("p").integer()), p.at("seed").unsigned_integer());
  if (kind == "override")
    return make_override(read_model(p.at("base")), p.has("up") ? read_override_side(p.at("up")) : std::map<std::int64_t, double>{},
                         p.has("down") ? read_override_side(p.at("down")) : std::map<std::int64_t, double>{});
  if (kind == "perturbed") {
    Perturbation pert;
    if (p.has("up")) pert.gamma[index(Direction::Up)] = read_sequence(p.at("up"));
    if (p.has("down")) pert.gamma[index(Direction::Down)] = read_sequence(p.at("down"));
    pert.tag = p.string_or("tag", "");
    return apply_perturbation(read_model(p.at("base")), pert);
  }
  if (kind == "random_env") {
    EnvSpec spec{read_model(p.at("mean")),
                 p.has("distribution") ? read_env_distribution(p.at("distribution"))
                                       : EnvDistribution::MultiplicativeUniform,
                 p.number_or("width", 0.0)};
    return realize_random_env(spec, p.has("seed") ? p.at("seed").unsigned_integer() : 0).model;
  }
  p.fail("unknown model kind '" + kind + "'");
}

inline TransitionModel read_model(const Reader& r) {
  const auto kind = r.at("kind").string();
  const auto params = r.at("params");
  try {
    return read_model_params(kind, params);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    params.fail(e.what());
  }
}

inline GraftNode read_graft_node(const Reader& r) {
  if (r.has("q")) {
    if (r.has("u") || r.has("d")) r.fail("a node has either 'q' or both 'u' and 'd'");
    return GraftNode::leaf(r.at("q").number());
  }
  if (!r.has("u") || !r.has("d")) r.fail("internal node needs both 'u' and 'd'");
  return GraftNode::split(read_graft_node(r.at("u")), read_graft_node(r.at("d")));
}

inline json graft_node_json(const GraftNode& n) {
  if (n.is_leaf()) return {{"q", n.q}};
  return {{"u", graft_node_json(n.children[0])}, {"d", graft_node_json(n.children[1])}};
}

}  // namespace detail

// Parses JSON text; syntax errors report line and column.
inline json parse_json_text(const std::string& text, const std::string& source = "<input>") {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

inline TransitionModel model_from_json(const json& j, const std::string& path = "$") {
  return detail::read_model(detail::Reader(j, path));
}

inline TransitionModel model_from_json_text(const std::string& text) {
  return model_from_json(parse_json_text(text));
}

inline json model_to_json(const TransitionModel& m) { return descriptor(m); }

inline GraftedTree graft_from_json(const json& j, const std::string& path = "$") {
  detail::Reader r(j, path);
  GraftedTree t(model_from_json(r.at("base").value(), path + ".base"));
  if (r.has("grafts")) {
    const auto gs = r.at("grafts");
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const auto g = gs.at(i);
      GraftKey k{detail::read_direction(g.at("dir")), g.at("n").integer()};
      if (t.grafts.count(k)) g.fail("duplicate graft location");
      t.grafts[k] = detail::read_graft_node(g.at("tree"));
    }
  }
  try {
    t.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  return t;
}

inline json graft_to_json(const GraftedTree& t) {
  json gs = json::array();
  for (const auto& [k, node] : t.grafts)
    gs.push_back({{"dir", std::string(to_string(k.dir))}, {"n", k.n}, {"tree", detail::graft_node_json(node)}});
  return {{"base", descriptor(t.base)}, {"grafts", gs}};
}

namespace detail {

inline json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline json drift_json(const DriftValue& d) {
  switch (d.state) {
    case DriftValue::State::Finite: return d.value;
    case DriftValue::State::PlusInfinity: return "+inf";
    case DriftValue::State::MinusInfinity: return "-inf";
    case DriftValue::State::Undefined: return "undefined";
    case DriftValue::State::Inconclusive: return "inconclusive";
  }
  return nullptr;
}

inline json mean_json(const MeanVerdict& m) {
  json j{{"status", std::string(to_string(m.status))}, {"rule", m.rule}};
  j["horizon"] = m.horizon ? json(*m.horizon) : json(nullptr);
  j["partial_sum"] = m.partial_sum ? number_json(*m.partial_sum) : json(nullptr);
  j["value"] = m.value ? number_json(*m.value) : json(nullptr);
  return j;
}

inline json series_json(const std::optional<SeriesVerdict>& v) {
  if (!v) return nullptr;
  json j{{"status", std::string(to_string(v->status))},
         {"rule", v->rule},
         {"partial_sum", number_json(v->partial_sum)},
         {"horizon", v->horizon},
         {"last_decade_increase", number_json(v->last_decade_increase)},
         {"budget_hit", v->budget_hit}};
  if (v->term_exponents) j["term_exponents"] = *v->term_exponents;
  if (v->fitted_slope) j["fitted_slope"] = number_json(*v->fitted_slope);
  return j;
}

}  // namespace detail

inline json classification_json(const Classification& c) {
  json horizons = json::object();
  if (c.drift.theta_up.horizon) horizons["theta_up"] = *c.drift.theta_up.horizon;
  if (c.drift.theta_down.horizon) horizons["theta_down"] = *c.drift.theta_down.horizon;
  if (c.j_ud) horizons["series"] = c.j_ud->horizon;
  json adm = json::array();
  for (const auto& d : c.admissibility.directions)
    adm.push_back({{"dir", std::string(to_string(d.dir))}, {"status", std::string(to_string(d.status))}, {"rule", d.rule}});
  return {{"label", std::string(to_string(c.label))},
          {"regime", std::string(to_string(c.regime))},
          {"drift",
           {{"S", detail::drift_json(c.drift.drift_S)},
            {"M", detail::drift_json(c.drift.drift_M)},
            {"T", detail::drift_json(c.drift.drift_T)},
            {"theta_up", detail::mean_json(c.drift.theta_up)},
            {"theta_down", detail::mean_json(c.drift.theta_down)},
            {"exact_zero", c.drift.exact_zero}}},
          {"J_ud", detail::series_json(c.j_ud)},
          {"J_du", detail::series_json(c.j_du)},
          {"K_ud", detail::series_json(c.k_ud)},
          {"K_du", detail::series_json(c.k_du)},
          {"horizons", horizons},
          {"rules", c.rules},
          {"admissibility", adm},
          {"diagnostics", c.diagnostics},
          {"tie_tolerance", c.tie_tolerance}};
}

}  // namespace prw
