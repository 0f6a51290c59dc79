#pragma once

// Optimal power dispatch demonstration: five generators with quadratic costs
// (p + alpha)^2 / (2 beta) meet a demand of 1500 MW. The averages of alpha and
// beta are computed by consensus; each generator then derives its own setpoint.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "privcon/graph.hpp"
#include "privcon/protocols.hpp"

namespace privcon::opd {

inline constexpr std::size_t kAgents = 5;
inline constexpr std::array<double, kAgents> kAlpha{188.3, 592.5, 2567.2, 1793.3, 2567.2};
inline constexpr std::array<double, kAgents> kBeta{7.17, 45.9, 208.2, 166.6, 208.2};
inline constexpr double kDemand = 1500.0;
inline constexpr Node kAdversary = 4;  // agent 5

inline Vector alpha() { return Eigen::Map<const Vector>(kAlpha.data(), kAgents); }
inline Vector beta() { return Eigen::Map<const Vector>(kBeta.data(), kAgents); }

/// Stand-in for the five-agent undirected demonstration topology, unit weights:
/// 1-2, 1-3, 2-3, 3-4, 3-5, 4-5 (1-based). Agent 5 hears 3 and 4. Agents 1, 2
/// and 3 each have a neighbor agent 5 cannot hear; every neighbor of agent 4 is
/// heard by agent 5.
inline WeightedDigraph preset_graph() {
  static const std::vector<Edge> pairs{{0, 1, 1.0}, {0, 2, 1.0}, {1, 2, 1.0},
                                       {2, 3, 1.0}, {2, 4, 1.0}, {3, 4, 1.0}};
  return WeightedDigraph::undirected(kAgents, pairs);
}

/// 0.45 * min{2, bound}: inside the admissible range of every engine.
inline double default_delta(const WeightedDigraph& g) { return 0.45 * stepsize_bound(g).alg2.hi; }

/// Horizon for which rho^K < 1e-8 (with the horizon_for safety factor) for the
/// slowest of the engines in `algorithms`.
inline std::size_t default_horizon(const WeightedDigraph& g, double delta,
                                   std::initializer_list<Algorithm> algorithms = {Algorithm::Alg1, Algorithm::Alg2,
                                                                                  Algorithm::Alg3}) {
  std::size_t k = 1;
  for (auto a : algorithms) k = std::max(k, horizon_for(iteration_radius(g, a, delta)));
  return k;
}

/// p_i = beta_i (P_D + n alpha_bar) / (n beta_bar) - alpha_i
inline Vector opd_dispatch(const Vector& alpha, const Vector& beta, double demand, double alpha_bar,
                           double beta_bar, std::size_t n) {
  if (!(beta_bar > 0.0)) throw PreconditionError("opd_dispatch: beta average must be positive");
  if (n == 0 || static_cast<std::size_t>(alpha.size()) != n || static_cast<std::size_t>(beta.size()) != n) {
    throw PreconditionError("opd_dispatch: size mismatch");
  }
  const double nn = static_cast<double>(n);
  const double lambda = (demand + nn * alpha_bar) / (nn * beta_bar);
  return (beta * lambda - alpha).eval();
}

}  // namespace privcon::opd
