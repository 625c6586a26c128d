#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "prw/direction.hpp"

namespace prw {

enum class ModelKind {
  Constant,
  Harmonic,
  LogFamily,
  Boundary,
  BoundaryPerturbed,
  Lacunar,
  Tabulated,
  Composite
};

enum class Label { Recurrent, TransientUp, TransientDown, Inconclusive };

enum class AdmissibilityStatus { Admissible, NotAdmissible, Inconclusive };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Constant: return "Constant";
    case ModelKind::Harmonic: return "Harmonic";
    case ModelKind::LogFamily: return "LogFamily";
    case ModelKind::Boundary: return "Boundary";
    case ModelKind::BoundaryPerturbed: return "BoundaryPerturbed";
    case ModelKind::Lacunar: return "Lacunar";
    case ModelKind::Tabulated: return "Tabulated";
    case ModelKind::Composite: return "Composite";
  }
  return "?";
}

inline std::string_view to_string(Label l) {
  switch (l) {
    case Label::Recurrent: return "Recurrent";
    case Label::TransientUp: return "TransientUp";
    case Label::TransientDown: return "TransientDown";
    case Label::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline std::string_view to_string(AdmissibilityStatus s) {
  switch (s) {
    case AdmissibilityStatus::Admissible: return "Admissible";
    case AdmissibilityStatus::NotAdmissible: return "NotAdmissible";
    case AdmissibilityStatus::Inconclusive: return "Inconclusive";
  }
  return "?";
}

inline bool is_transient(Label l) { return l == Label::TransientUp || l == Label::TransientDown; }

struct AnalyticRule {
  AdmissibilityStatus status;
  std::string rule;
};

struct ClosedFormLabel {
  Label label;
  std::string rule;
  std::string note;
};

namespace detail {

// One parametric family of switch probabilities. Implementations are immutable.
class Family {
 public:
  virtual ~Family() = default;

  virtual ModelKind kind() const noexcept = 0;
  virtual std::string_view name() const noexcept = 0;
  virtual double alpha(Direction d, std::int64_t n) const = 0;
  virtual double alpha_inf(Direction) const { return 1.0; }
  virtual std::vector<double> params() const = 0;
  virtual nlohmann::json params_json() const = 0;

  virtual std::optional<std::vector<double>> exponents(Direction) const { return std::nullopt; }

  // First n from which alpha_at(d, x) is a smooth interpolant of alpha(d, n); 0 if none.
  virtual std::int64_t smooth_from(Direction) const { return 0; }
  virtual double alpha_at(Direction d, double x) const {
    return alpha(d, static_cast<std::int64_t>(x));
  }

  virtual std::optional<AnalyticRule> admissibility_rule(Direction) const { return std::nullopt; }
  virtual std::optional<double> limsup(Direction) const { return std::nullopt; }
  virtual std::optional<double> closed_form_mean(Direction) const { return std::nullopt; }
  virtual std::optional<ClosedFormLabel> closed_form_label() const { return std::nullopt; }

  // True when alpha_up(n) == alpha_down(n) for every n by construction.
  virtual bool mirror_symmetric() const { return false; }

  virtual std::optional<bool> alpha_square_summable(Direction d) const {
    if (exponents(d)) return true;
    return std::nullopt;
  }
};

}  // namespace detail
}  // namespace prw
