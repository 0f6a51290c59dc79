#pragma once

// Deterministic per-agent perturbation sequences f(k) and the admissibility
// test: S(k) = sum_{m<=k} (1 - delta)^(k-m) f(m) must vanish as k grows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "privcon/graph.hpp"

namespace privcon {

class PerturbationSignal {
 public:
  struct Zero {};
  /// f(k) = values[k] for k < values.size(), zero afterwards.
  struct FiniteSupport {
    std::vector<double> values;
  };
  /// f(k) = c * rho^k with |rho| < 1.
  struct Geometric {
    double c = 0.0;
    double rho = 0.0;
  };
  /// f(k) = c. Not admissible for c != 0; kept for negative tests.
  struct Constant {
    double c = 0.0;
  };
  using Kind = std::variant<Zero, FiniteSupport, Geometric, Constant>;

  PerturbationSignal() = default;

  static PerturbationSignal zero() { return PerturbationSignal(Zero{}); }
  static PerturbationSignal finite_support(std::vector<double> values) {
    return PerturbationSignal(FiniteSupport{std::move(values)});
  }
  static PerturbationSignal geometric(double c, double rho) {
    if (!(std::abs(rho) < 1.0)) throw PreconditionError("geometric perturbation needs |rho| < 1");
    return PerturbationSignal(Geometric{c, rho});
  }
  static PerturbationSignal constant(double c) { return PerturbationSignal(Constant{c}); }

  double at(std::size_t k) const {
    return std::visit(
        [k](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Zero>) {
            return 0.0;
          } else if constexpr (std::is_same_v<T, FiniteSupport>) {
            return k < s.values.size() ? s.values[k] : 0.0;
          } else if constexpr (std::is_same_v<T, Geometric>) {
            return s.c * std::pow(s.rho, static_cast<double>(k));
          } else {
            return s.c;
          }
        },
        kind_);
  }

  const Kind& kind() const { return kind_; }

  std::string name() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Zero>) return "zero";
          else if constexpr (std::is_same_v<T, FiniteSupport>) return "finite_support";
          else if constexpr (std::is_same_v<T, Geometric>) return "geometric";
          else return "constant";
        },
        kind_);
  }

 private:
  explicit PerturbationSignal(Kind k) : kind_(std::move(k)) {}

  Kind kind_{Zero{}};
};

struct Admissibility {
  bool admissible = false;
  double residual = 0.0;  // max |S(k)| over the tail window
};

/// Fraction of the horizon (its last part) on which |S(k)| must stay below tol.
inline constexpr double kAdmissibilityTailFraction = 0.1;

inline Admissibility check_admissibility(const PerturbationSignal& f, double delta, std::size_t horizon,
                                         double tol) {
  if (!(delta > 0.0 && delta < 2.0)) throw PreconditionError("check_admissibility: delta must lie in (0, 2)");
  if (horizon == 0) throw PreconditionError("check_admissibility: horizon must be positive");
  const auto tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(kAdmissibilityTailFraction * static_cast<double>(horizon))));
  const std::size_t first_checked = horizon - tail;
  double s = 0.0;
  double residual = 0.0;
  for (std::size_t k = 0; k < horizon; ++k) {
    s = (1.0 - delta) * s + f.at(k);
    if (k >= first_checked) residual = std::max(residual, std::abs(s));
  }
  return {residual <= tol, residual};
}

}  // namespace privcon
