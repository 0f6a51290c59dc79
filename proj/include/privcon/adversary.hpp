#pragma once

// The honest-but-curious agent: what it sees, when a target is private from
// it, and the two attacks it can mount when a target is fully surveilled.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "privcon/graph.hpp"
#include "privcon/protocols.hpp"

namespace privcon {

/// Everything the adversary knows: the topology, its own reference and states,
/// the zero v initialization, and the signals arriving on its own channels.
/// Nothing else from the trace is carried over.
struct AdversaryView {
  Node adversary = 0;
  WeightedDigraph graph;
  Algorithm algorithm = Algorithm::Alg2;
  double delta = 0.0;
  double own_reference = 0.0;
  Vector own_x;  // length K+1
  Vector own_v;
  Vector v0_known;
  std::vector<Node> observed;  // out-neighbors of the adversary, ascending
  Matrix received_x;           // (K+1) x observed.size()
  Matrix received_v;           // Alg3 only

  std::size_t steps() const { return static_cast<std::size_t>(own_x.size()); }

  bool sees(Node j) const {
    return j == adversary || std::binary_search(observed.begin(), observed.end(), j);
  }

  /// x_j(k) if the adversary has it (its own state or a received message).
  std::optional<double> signal(Node j, std::size_t k) const {
    const auto row = static_cast<Eigen::Index>(k);
    if (j == adversary) return own_x(row);
    const auto it = std::lower_bound(observed.begin(), observed.end(), j);
    if (it == observed.end() || *it != j) return std::nullopt;
    return received_x(row, static_cast<Eigen::Index>(it - observed.begin()));
  }
};

inline AdversaryView extract_view(const ExecutionTrace& trace, Node adversary) {
  if (adversary >= trace.agents()) throw PreconditionError("extract_view: adversary out of range");
  AdversaryView view;
  view.adversary = adversary;
  view.graph = trace.graph;
  view.algorithm = trace.spec.algorithm;
  view.delta = trace.spec.delta;
  const auto a = static_cast<Eigen::Index>(adversary);
  view.own_reference = trace.spec.reference(a);
  view.own_x = trace.x.col(a);
  view.own_v = trace.v.col(a);
  view.v0_known = Vector::Zero(static_cast<Eigen::Index>(trace.agents()));
  view.observed = trace.graph.out_neighbors(adversary);
  const auto rows = trace.sent_x.rows();
  const auto cols = static_cast<Eigen::Index>(view.observed.size());
  view.received_x = Matrix::Zero(rows, cols);
  if (trace.sent_v.size() > 0) view.received_v = Matrix::Zero(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const auto channel = trace.channel_index(adversary, view.observed[static_cast<std::size_t>(c)]);
    if (!channel) throw std::logic_error("extract_view: trace lacks a channel present in the graph");
    const auto idx = static_cast<Eigen::Index>(*channel);
    view.received_x.col(c) = trace.sent_x.col(idx);
    if (trace.sent_v.size() > 0) view.received_v.col(c) = trace.sent_v.col(idx);
  }
  return view;
}

/// Whether `adversary` hears `target` and every out-neighbor of `target`
/// (the adversary itself counts as heard).
inline bool fully_surveilled(const WeightedDigraph& g, Node adversary, Node target) {
  if (!g.has_edge(adversary, target)) return false;
  for (Node j : g.out_neighbors(target))
    if (j != adversary && !g.has_edge(adversary, j)) return false;
  return true;
}

/// True iff the target's reference is private from the adversary: the target
/// has an out-neighbor the adversary does not hear (and which is not the
/// adversary), or the adversary does not hear the target at all.
inline bool privacy_classifier(const WeightedDigraph& g, Node adversary, Node target) {
  if (adversary >= g.size() || target >= g.size()) throw PreconditionError("privacy_classifier: node out of range");
  if (adversary == target) throw PreconditionError("privacy_classifier: adversary and target coincide");
  if (!is_strongly_connected(g) || !is_weight_balanced(g)) {
    throw PreconditionError("privacy_classifier: graph must be strongly connected and weight-balanced");
  }
  return !fully_surveilled(g, adversary, target);
}

namespace detail {
inline void require_surveillance(const AdversaryView& view, Node target, const char* who) {
  if (target >= view.graph.size() || target == view.adversary) {
    throw PreconditionError(std::string(who) + ": invalid target");
  }
  if (!fully_surveilled(view.graph, view.adversary, target)) {
    throw PreconditionError(std::string(who) + ": target " + std::to_string(target + 1) +
                            " is not fully surveilled by agent " + std::to_string(view.adversary + 1));
  }
  if (view.steps() < 2) throw PreconditionError(std::string(who) + ": need at least two recorded steps");
}

/// sum_j a_tj (x_t(k) - x_j(k)) from the adversary's data.
inline double observed_disagreement(const AdversaryView& view, Node target, std::size_t k) {
  const double xt = *view.signal(target, k);
  double acc = 0.0;
  for (Node j : view.graph.out_neighbors(target)) acc += view.graph.weight(target, j) * (xt - *view.signal(j, k));
  return acc;
}
}  // namespace detail

/// Algebraic recovery of r_target from an Alg2 trace at step k >= 1:
/// rebuild v_target up to k-1 from v(0) = 0 and solve the x update for r.
inline double recover_reference(const AdversaryView& view, Node target, std::size_t k = 1) {
  detail::require_surveillance(view, target, "recover_reference");
  if (view.algorithm != Algorithm::Alg2) throw PreconditionError("recover_reference: trace must come from alg2");
  if (k < 1 || k >= view.steps()) throw PreconditionError("recover_reference: step outside [1, K]");
  const double d = view.delta;
  double v = view.v0_known(static_cast<Eigen::Index>(target));
  for (std::size_t m = 0; m + 1 < k; ++m) v += d * detail::observed_disagreement(view, target, m);
  const double x_prev = *view.signal(target, k - 1);
  const double x_now = *view.signal(target, k);
  return (x_now - x_prev) / d + x_prev + detail::observed_disagreement(view, target, k - 1) + v;
}

/// Asymptotic observer: z(k) -> r_target for Alg2 and for Alg2 with admissible
/// perturbations. v_hat replays the target's internal v from its observed
/// disagreement; x_hat filters the residual. Returns z(0..K).
inline std::vector<double> run_observer(const AdversaryView& view, Node target, std::size_t horizon) {
  detail::require_surveillance(view, target, "run_observer");
  if (view.algorithm != Algorithm::Alg2 && view.algorithm != Algorithm::Alg2Perturbed) {
    throw PreconditionError("run_observer: trace must come from alg2 or alg2_perturbed");
  }
  if (horizon >= view.steps()) throw PreconditionError("run_observer: horizon exceeds the trace");
  const double d = view.delta;
  double v_hat = 0.0;
  double x_hat = 0.0;
  std::vector<double> z;
  z.reserve(horizon + 1);
  for (std::size_t k = 0;; ++k) {
    z.push_back(x_hat + *view.signal(target, k));
    if (k == horizon) break;
    const double lx = detail::observed_disagreement(view, target, k);
    const double x_hat_next = x_hat + d * (lx + v_hat - x_hat);
    v_hat += d * lx;
    x_hat = x_hat_next;
  }
  return z;
}

struct AttackReport {
  Node target = 0;
  std::string method;
  double estimate = 0.0;
  std::optional<double> true_value;
  std::size_t steps_used = 0;

  std::optional<double> abs_error() const {
    if (!true_value) return std::nullopt;
    return std::abs(estimate - *true_value);
  }
};

inline nlohmann::json to_json(const AttackReport& r) {
  nlohmann::json j = {{"target", r.target + 1}, {"method", r.method}, {"estimate", r.estimate},
                      {"steps_used", r.steps_used}};
  j["true_value"] = r.true_value ? nlohmann::json(*r.true_value) : nlohmann::json(nullptr);
  const auto err = r.abs_error();
  j["abs_error"] = err ? nlohmann::json(*err) : nlohmann::json(nullptr);
  return j;
}

}  // namespace privcon
