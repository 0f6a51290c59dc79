#pragma once

// Run-level invariant checks shared by the harness and the verify command.

#include <cmath>
#include <string>
#include <vector>

#include "privcon/adversary.hpp"
#include "privcon/protocols.hpp"

namespace privcon {

inline constexpr double kConservationRelTol = 1e-9;

/// Magnitude used to turn absolute residuals of a trace into relative ones.
inline double trace_scale(const ExecutionTrace& t) {
  return std::max(1.0, static_cast<double>(t.agents()) * std::max(t.x.cwiseAbs().maxCoeff(), t.v.cwiseAbs().maxCoeff()));
}

/// Alg1: max_k |sum x(k) - sum x(0)|, relative to trace_scale.
inline double alg1_sum_drift(const ExecutionTrace& t) {
  const Vector sums = t.x.rowwise().sum();
  return (sums.array() - sums(0)).abs().maxCoeff() / trace_scale(t);
}

/// Alg2 family: max_k |sum v(k)|, relative to trace_scale.
inline double alg2_v_sum_drift(const ExecutionTrace& t) {
  return t.v.rowwise().sum().cwiseAbs().maxCoeff() / trace_scale(t);
}

/// M1: sum x(k) - sum r must equal sum_i phi^(k-1) nu_i(k-1) for k >= 1.
inline double m1_telescoping_residual(const ExecutionTrace& t) {
  if (t.spec.algorithm != Algorithm::M1) return 0.0;
  const double phi = t.spec.noise->phi;
  const double total = t.spec.reference.sum();
  double worst = std::abs(t.x.row(0).sum() - total);
  for (Eigen::Index k = 1; k < t.x.rows(); ++k) {
    const double expected = std::pow(phi, static_cast<double>(k - 1)) * t.noise_draws.row(k - 1).sum();
    worst = std::max(worst, std::abs(t.x.row(k).sum() - total - expected));
  }
  const double noise_scale = t.noise_draws.size() > 0 ? t.noise_draws.cwiseAbs().maxCoeff() : 0.0;
  return worst / std::max(trace_scale(t), static_cast<double>(t.agents()) * noise_scale);
}

/// Every recorded message equals the sender's state (plus masking noise for M1).
inline double transmission_mismatch(const ExecutionTrace& t) {
  double worst = 0.0;
  for (std::size_t c = 0; c < t.channels.size(); ++c) {
    const auto s = static_cast<Eigen::Index>(t.channels[c].sender);
    const auto col = static_cast<Eigen::Index>(c);
    Vector expected = t.x.col(s);
    if (t.spec.algorithm == Algorithm::M1) expected += t.w.col(s);
    worst = std::max(worst, (t.sent_x.col(col) - expected).cwiseAbs().maxCoeff());
    if (t.sent_v.size() > 0) worst = std::max(worst, (t.sent_v.col(col) - t.v.col(s)).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Adversary views must hold exactly the adversary's channels, with the sent values.
inline bool view_is_projection(const ExecutionTrace& t, Node adversary) {
  const auto view = extract_view(t, adversary);
  if (view.observed != t.graph.out_neighbors(adversary)) return false;
  for (std::size_t c = 0; c < view.observed.size(); ++c) {
    const auto idx = t.channel_index(adversary, view.observed[c]);
    if (!idx || view.received_x.col(static_cast<Eigen::Index>(c)) != t.sent_x.col(static_cast<Eigen::Index>(*idx)))
      return false;
  }
  return true;
}

/// Conservation, transmission and (optionally) convergence checks for one run.
inline std::vector<std::string> check_trace_invariants(const ExecutionTrace& t, std::optional<double> convergence_tol) {
  std::vector<std::string> violations;
  const auto name = to_string(t.spec.algorithm);
  switch (t.spec.algorithm) {
    case Algorithm::Alg1:
      if (alg1_sum_drift(t) > kConservationRelTol) violations.push_back(name + ": sum of x drifted");
      break;
    case Algorithm::Alg2:
    case Algorithm::Alg2Perturbed:
      if (alg2_v_sum_drift(t) > kConservationRelTol) violations.push_back(name + ": sum of v drifted from zero");
      break;
    case Algorithm::M1:
      if (m1_telescoping_residual(t) > kConservationRelTol) violations.push_back(name + ": noise sum does not telescope");
      break;
    case Algorithm::Alg3:
      break;
  }
  if (transmission_mismatch(t) != 0.0) violations.push_back(name + ": transmitted values differ from sender state");
  if (convergence_tol && !(t.consensus_error() < *convergence_tol)) {
    violations.push_back(name + ": consensus error " + std::to_string(t.consensus_error()) + " exceeds " +
                         std::to_string(*convergence_tol));
  }
  return violations;
}

}  // namespace privcon
