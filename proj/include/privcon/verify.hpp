#pragma once

// Built-in invariant suite behind `privcon verify`.

#include <functional>
#include <string>
#include <vector>

#include "privcon/adversary.hpp"
#include "privcon/comparison.hpp"
#include "privcon/indistinguishability.hpp"
#include "privcon/invariants.hpp"
#include "privcon/opd.hpp"
#include "privcon/transforms.hpp"

namespace privcon {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {
inline WeightedDigraph unit_cycle3() {
  static const std::vector<Edge> e{{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}};
  return WeightedDigraph::from_edges(3, e);
}

inline CheckResult check(std::string name, const std::function<std::string()>& body) {
  try {
    auto failure = body();
    return {std::move(name), failure.empty(), failure.empty() ? "ok" : failure};
  } catch (const std::exception& err) {
    return {std::move(name), false, std::string("exception: ") + err.what()};
  }
}
}  // namespace detail

inline std::vector<CheckResult> run_invariant_suite() {
  std::vector<CheckResult> out;
  const auto g = opd::preset_graph();
  const double delta = opd::default_delta(g);
  const std::size_t horizon = opd::default_horizon(g, delta);
  const Vector alpha = opd::alpha();

  out.push_back(detail::check("preset graph is connected and balanced", [&]() -> std::string {
    if (!is_strongly_connected(g) || !is_weight_balanced(g)) return "preset graph failed structural checks";
    return {};
  }));

  out.push_back(detail::check("stepsize bound of unit 3-cycle equals 1", [&]() -> std::string {
    const double b = stepsize_bound(detail::unit_cycle3()).bound;
    return std::abs(b - 1.0) <= 1e-9 ? "" : "bound = " + format_number(b);
  }));

  for (auto a : {Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3}) {
    out.push_back(detail::check(to_string(a) + " conserves and converges on the preset", [&]() -> std::string {
      const auto t = run_protocol(g, ProtocolSpec{a, delta, horizon, alpha});
      const auto v = check_trace_invariants(t, 1e-6);
      return v.empty() ? "" : v.front();
    }));
  }

  out.push_back(detail::check("m1 noise telescopes and converges", [&]() -> std::string {
    ProtocolSpec s{Algorithm::M1, delta, std::max<std::size_t>(horizon, 500), alpha};
    s.noise = M1NoiseConfig{0.9, 100.0, 7};
    const auto v = check_trace_invariants(run_m1(g, s), 1e-3);
    return v.empty() ? "" : v.front();
  }));

  out.push_back(detail::check("transformed alg2 dynamics match the direct engine", [&]() -> std::string {
    const auto t = run_alg2(g, ProtocolSpec{Algorithm::Alg2, delta, 200, alpha});
    const auto split = orthonormal_complement(g.size());
    const Matrix lp = reduced_laplacian(laplacian(g), split);
    auto s = to_qp(t.v.row(0).transpose(), t.x.row(0).transpose(), alpha, split);
    double worst = 0.0;
    for (Eigen::Index k = 1; k < t.x.rows(); ++k) {
      s = qp_step_alg2(s, delta, lp);
      const auto [v, x] = from_qp(s, alpha, split);
      worst = std::max({worst, (x - t.x.row(k).transpose()).cwiseAbs().maxCoeff(),
                        (v - t.v.row(k).transpose()).cwiseAbs().maxCoeff()});
    }
    return worst < 1e-8 * std::max(1.0, alpha.cwiseAbs().maxCoeff()) ? "" : "deviation " + format_number(worst);
  }));

  const auto alg2 = run_alg2(g, ProtocolSpec{Algorithm::Alg2, delta, horizon, alpha});
  const auto view = extract_view(alg2, opd::kAdversary);
  for (Node target = 0; target < g.size(); ++target) {
    if (target == opd::kAdversary) continue;
    const std::string label = "agent " + std::to_string(target + 1);
    if (privacy_classifier(g, opd::kAdversary, target)) {
      out.push_back(detail::check(label + " has an indistinguishable alternative", [&]() -> std::string {
        const auto pair = certify_pair(g, opd::kAdversary, target, find_witness(g, opd::kAdversary, target), 1500.0,
                                       alg2.spec);
        if (pair.report.max_deviation > 1e-9 * 1500.0) return "deviation " + format_number(pair.report.max_deviation);
        const auto dyn = error_dynamics_check(pair.base, pair.alt, pair.alternative.witness);
        return dyn.ok() ? "" : dyn.violations.front();
      }));
    } else {
      out.push_back(detail::check(label + " reference is recovered by the adversary", [&]() -> std::string {
        const double truth = alpha(static_cast<Eigen::Index>(target));
        const double est = recover_reference(view, target, 1);
        const double z = run_observer(view, target, horizon).back();
        if (std::abs(est - truth) > 1e-9 * std::max(1.0, std::abs(truth))) return "recovery error";
        if (std::abs(z - truth) > 1e-6) return "observer error " + format_number(std::abs(z - truth));
        return {};
      }));
    }
  }

  out.push_back(detail::check("dispatch meets the demand", [&]() -> std::string {
    const auto d = run_dispatch(g);
    return d.demand_mismatch <= std::max(1e-6, d.mismatch_bound) ? "" : "mismatch " + format_number(d.demand_mismatch);
  }));
  return out;
}

}  // namespace privcon
