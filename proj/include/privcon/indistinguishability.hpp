#pragma once

// Constructive privacy certificate for Alg2: given a witness w that the target
// talks to but the adversary does not hear, shift w's initial state by -e and
// redistribute references over w and its in-neighbors. The adversary's view is
// unchanged while the target's reference moves by a_tw * e.
//
// Sign convention: e = execution 1 - execution 2.
//   r2(w) = r1(w) - d_out(w) e,  r2(i) = r1(i) + a_iw e for i in N_in(w),
//   x2(0)(w) = x1(0)(w) - e, everything else unchanged.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "privcon/adversary.hpp"
#include "privcon/graph.hpp"
#include "privcon/protocols.hpp"

namespace privcon {

/// Smallest out-neighbor of the target that is neither the adversary nor heard
/// by it. When the adversary does not hear the target itself and no such
/// out-neighbor exists, the target is its own witness.
inline std::optional<Node> try_find_witness(const WeightedDigraph& g, Node adversary, Node target) {
  for (Node j : g.out_neighbors(target))
    if (j != adversary && !g.has_edge(adversary, j)) return j;
  if (!g.has_edge(adversary, target)) return target;
  return std::nullopt;
}

inline Node find_witness(const WeightedDigraph& g, Node adversary, Node target) {
  if (adversary >= g.size() || target >= g.size() || adversary == target) {
    throw PreconditionError("find_witness: invalid adversary/target pair");
  }
  const auto w = try_find_witness(g, adversary, target);
  if (!w) {
    throw PreconditionError("find_witness: agent " + std::to_string(target + 1) +
                            " is fully surveilled by agent " + std::to_string(adversary + 1) + "; no witness exists");
  }
  return *w;
}

/// All admissible witnesses, ascending (the construction works for any of them).
inline std::vector<Node> all_witnesses(const WeightedDigraph& g, Node adversary, Node target) {
  std::vector<Node> out;
  for (Node j : g.out_neighbors(target))
    if (j != adversary && !g.has_edge(adversary, j)) out.push_back(j);
  if (!g.has_edge(adversary, target)) out.insert(std::lower_bound(out.begin(), out.end(), target), target);
  return out;
}

struct AlternativeExecution {
  Vector base_reference;
  Vector alt_reference;
  Vector alt_x0;
  Node witness = 0;
  Node target = 0;
  double e_x3_0 = 0.0;
  std::vector<Node> moved;  // agents whose reference changed, ascending

  /// Spec for the second execution, otherwise identical to `base`.
  ProtocolSpec spec_from(const ProtocolSpec& base) const {
    ProtocolSpec alt = base;
    alt.reference = alt_reference;
    alt.x0 = alt_x0;
    return alt;
  }
};

/// Builds the alternative for an explicit witness. Throws if the witness would
/// be visible to the adversary.
inline AlternativeExecution construct_alternative_with(const WeightedDigraph& g, Node adversary, Node target,
                                                       Node witness, double e_x3_0, const ProtocolSpec& base) {
  if (e_x3_0 == 0.0) throw PreconditionError("construct_alternative: e_x3_0 = 0 gives identical executions");
  if (base.algorithm != Algorithm::Alg2) throw PreconditionError("construct_alternative: base must be an alg2 spec");
  if (static_cast<std::size_t>(base.reference.size()) != g.size()) {
    throw PreconditionError("construct_alternative: reference size mismatch");
  }
  if (base.v0.size() != 0 && !base.v0.isZero(0.0)) {
    throw PreconditionError("construct_alternative: base must start from v0 = 0");
  }
  if (witness >= g.size() || witness == adversary || g.has_edge(adversary, witness)) {
    throw PreconditionError("construct_alternative: witness " + std::to_string(witness + 1) +
                            " is visible to the adversary");
  }
  AlternativeExecution alt;
  alt.base_reference = base.reference;
  alt.alt_reference = base.reference;
  alt.alt_x0 = base.x0.size() != 0 ? base.x0 : base.reference;
  alt.witness = witness;
  alt.target = target;
  alt.e_x3_0 = e_x3_0;
  const auto w = static_cast<Eigen::Index>(witness);
  alt.alt_reference(w) -= g.out_degree(witness) * e_x3_0;
  for (Node i : g.in_neighbors(witness)) alt.alt_reference(static_cast<Eigen::Index>(i)) += g.weight(i, witness) * e_x3_0;
  alt.alt_x0(w) -= e_x3_0;
  for (Node i = 0; i < g.size(); ++i)
    if (alt.alt_reference(static_cast<Eigen::Index>(i)) != alt.base_reference(static_cast<Eigen::Index>(i)))
      alt.moved.push_back(i);
  return alt;
}

inline AlternativeExecution construct_alternative(const WeightedDigraph& g, Node adversary, Node target,
                                                  double e_x3_0, const ProtocolSpec& base) {
  return construct_alternative_with(g, adversary, target, find_witness(g, adversary, target), e_x3_0, base);
}

/// Largest difference between what the adversary sees in two runs: received
/// messages plus its own states and reference.
inline double verify_indistinguishable(const ExecutionTrace& t1, const ExecutionTrace& t2, Node adversary) {
  if (!(t1.graph == t2.graph) || t1.steps() != t2.steps() || t1.spec.algorithm != t2.spec.algorithm) {
    throw PreconditionError("verify_indistinguishable: traces differ in graph, horizon or algorithm");
  }
  const auto a = extract_view(t1, adversary);
  const auto b = extract_view(t2, adversary);
  double dev = std::abs(a.own_reference - b.own_reference);
  dev = std::max(dev, (a.own_x - b.own_x).cwiseAbs().maxCoeff());
  dev = std::max(dev, (a.own_v - b.own_v).cwiseAbs().maxCoeff());
  if (a.received_x.size() > 0) dev = std::max(dev, (a.received_x - b.received_x).cwiseAbs().maxCoeff());
  if (a.received_v.size() > 0) dev = std::max(dev, (a.received_v - b.received_v).cwiseAbs().maxCoeff());
  return dev;
}

/// Per-step consistency of a pair with the error dynamics of the construction.
struct ErrorDynamicsReport {
  std::vector<std::string> violations;
  double max_residual = 0.0;  // worst normalized residual over all checks

  bool ok() const { return violations.empty(); }
};

inline ErrorDynamicsReport error_dynamics_check(const ExecutionTrace& t1, const ExecutionTrace& t2, Node witness,
                                                double rel_tol = 1e-9) {
  if (!(t1.graph == t2.graph) || t1.steps() != t2.steps()) {
    throw PreconditionError("error_dynamics_check: mismatched traces");
  }
  const auto& g = t1.graph;
  const Matrix ex = t1.x - t2.x;
  const Matrix ev = t1.v - t2.v;
  const auto w = static_cast<Eigen::Index>(witness);
  const double e0 = ex(0, w);
  const double scale = std::max(1.0, std::abs(e0));
  const double delta = t1.spec.delta;
  const auto in_w = g.in_neighbors(witness);

  ErrorDynamicsReport report;
  auto check = [&](double residual, const std::string& what, std::size_t k) {
    const double norm = std::abs(residual) / scale;
    report.max_residual = std::max(report.max_residual, norm);
    if (norm > rel_tol) report.violations.push_back(what + " at k=" + std::to_string(k));
  };

  for (std::size_t k = 0; k < t1.steps(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    for (Node i = 0; i < g.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      if (i != witness) check(ex(row, ii), "e_x of agent " + std::to_string(i + 1) + " nonzero", k);
      const bool in_neighbor = std::binary_search(in_w.begin(), in_w.end(), i);
      if (!in_neighbor && i != witness) check(ev(row, ii), "e_v of agent " + std::to_string(i + 1) + " nonzero", k);
      if (in_neighbor && k + 1 < t1.steps()) {
        const double expected = ev(row, ii) - delta * g.weight(i, witness) * ex(row, w);
        check(ev(row + 1, ii) - expected, "e_v recursion of agent " + std::to_string(i + 1), k + 1);
      }
    }
    double sum = ev(row, w);
    for (Node i : in_w) sum += ev(row, static_cast<Eigen::Index>(i));
    check(sum, "e_v sum over the witness neighborhood", k);
    check(ex(row, w) - std::pow(1.0 - delta, static_cast<double>(k)) * e0, "witness decay law", k);
  }
  return report;
}

struct IndistinguishabilityReport {
  Node adversary = 0;
  Node target = 0;
  Node witness = 0;
  double e_x3_0 = 0.0;
  double max_deviation = 0.0;
  Vector r_alt;
};

inline nlohmann::json to_json(const IndistinguishabilityReport& r) {
  return {{"adversary", r.adversary + 1}, {"target", r.target + 1},     {"witness", r.witness + 1},
          {"e_x3_0", r.e_x3_0},           {"max_deviation", r.max_deviation},
          {"r_alt", std::vector<double>(r.r_alt.data(), r.r_alt.data() + r.r_alt.size())}};
}

/// Runs base and alternative Alg2 executions and measures the view deviation.
struct CertifiedPair {
  AlternativeExecution alternative;
  ExecutionTrace base;
  ExecutionTrace alt;
  IndistinguishabilityReport report;
};

inline CertifiedPair certify_pair(const WeightedDigraph& g, Node adversary, Node target, Node witness, double e,
                                  const ProtocolSpec& base_spec) {
  auto alternative = construct_alternative_with(g, adversary, target, witness, e, base_spec);
  auto base = run_alg2(g, base_spec);
  auto alt = run_alg2(g, alternative.spec_from(base_spec));
  IndistinguishabilityReport report{adversary, target, witness, e, verify_indistinguishable(base, alt, adversary),
                                    alternative.alt_reference};
  return {std::move(alternative), std::move(base), std::move(alt), std::move(report)};
}

}  // namespace privcon
