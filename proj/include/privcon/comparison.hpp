#pragma once

// Alg2 versus the noise-masking baseline (M1): transient noisiness, Monte-Carlo
// spread of the naive first-message estimate, and the Alg2 indistinguishability
// certificate. Also the figure data bundles and the end-to-end dispatch run.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "privcon/adversary.hpp"
#include "privcon/indistinguishability.hpp"
#include "privcon/opd.hpp"
#include "privcon/parallel.hpp"
#include "privcon/protocols.hpp"
#include "privcon/trace_io.hpp"

namespace privcon {

/// sum_k sum_i |x_i(k+1) - x_i(k)|
inline double total_variation(const ExecutionTrace& t) {
  if (t.x.rows() < 2) return 0.0;
  return (t.x.bottomRows(t.x.rows() - 1) - t.x.topRows(t.x.rows() - 1)).cwiseAbs().sum();
}

struct ComparisonConfig {
  WeightedDigraph graph;
  Vector reference;
  Node adversary = opd::kAdversary;
  std::size_t runs = 400;
  double sigma = 100.0;
  double phi = 0.9;
  std::uint64_t seed = 1;
  double delta = 0.0;        // 0: preset default
  std::size_t horizon = 0;   // 0: preset default
  std::vector<double> e_grid{-1500.0, -10.0, -1.0, 1.0, 10.0, 1500.0};
};

struct PrivacyCertificate {
  Node target = 0;
  Node witness = 0;
  double max_deviation = 0.0;
  double r_alt_min = 0.0;
  double r_alt_max = 0.0;
};

struct ComparisonReport {
  double delta = 0.0;
  std::size_t horizon = 0;
  double tv_alg2 = 0.0;
  std::vector<double> tv_m1;  // one per Monte-Carlo run
  double tv_m1_mean = 0.0;
  std::vector<Node> observed;
  std::vector<double> first_message_mean;
  std::vector<double> first_message_std;
  std::vector<PrivacyCertificate> certificates;

  double tv_ratio() const { return tv_alg2 > 0.0 ? tv_m1_mean / tv_alg2 : 0.0; }

  nlohmann::json to_json() const {
    nlohmann::json certs = nlohmann::json::array();
    for (const auto& c : certificates)
      certs.push_back({{"target", c.target + 1}, {"witness", c.witness + 1}, {"max_deviation", c.max_deviation},
                       {"r_alt_min", c.r_alt_min}, {"r_alt_max", c.r_alt_max}});
    nlohmann::json obs = nlohmann::json::array();
    for (std::size_t i = 0; i < observed.size(); ++i)
      obs.push_back({{"agent", observed[i] + 1}, {"mean", first_message_mean[i]}, {"std", first_message_std[i]}});
    return {{"delta", delta},
            {"horizon", horizon},
            {"total_variation", {{"alg2", tv_alg2}, {"m1_mean", tv_m1_mean}, {"ratio", tv_ratio()}, {"m1_runs", tv_m1}}},
            {"first_message_estimate", obs},
            {"alg2_certificates", certs},
            {"note",
             "M1 estimator spread is a Monte-Carlo study of the first transmitted message; analytical "
             "maximum-likelihood covariances for the original topology are not reproduced."}};
  }
};

inline ComparisonReport compare_privacy(const ComparisonConfig& cfg) {
  const auto& g = cfg.graph;
  if (cfg.runs < 2) throw PreconditionError("compare_privacy: need at least two Monte-Carlo runs");
  if (!g.is_undirected()) throw PreconditionError("compare_privacy: graph must be undirected");
  ComparisonReport report;
  report.delta = cfg.delta > 0.0 ? cfg.delta : opd::default_delta(g);
  report.horizon = cfg.horizon > 0 ? cfg.horizon : opd::default_horizon(g, report.delta);

  ProtocolSpec alg2{Algorithm::Alg2, report.delta, report.horizon, cfg.reference};
  report.tv_alg2 = total_variation(run_alg2(g, alg2));

  // One isolated stream per run: seed = base seed + run index.
  struct RunSummary {
    double tv = 0.0;
    Vector first;  // x(0) + w(0) as heard on the adversary's channels
  };
  report.observed = g.out_neighbors(cfg.adversary);
  const auto runs = parallel_map(cfg.runs, [&](std::size_t r) {
    ProtocolSpec m1{Algorithm::M1, report.delta, report.horizon, cfg.reference};
    m1.noise = M1NoiseConfig{cfg.phi, cfg.sigma, cfg.seed + r};
    const auto trace = run_m1(g, m1);
    const auto view = extract_view(trace, cfg.adversary);
    return RunSummary{total_variation(trace), view.received_x.row(0).transpose()};
  });
  for (const auto& r : runs) {
    report.tv_m1.push_back(r.tv);
    report.tv_m1_mean += r.tv / static_cast<double>(runs.size());
  }
  for (std::size_t c = 0; c < report.observed.size(); ++c) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r.first(static_cast<Eigen::Index>(c));
    mean /= static_cast<double>(runs.size());
    double var = 0.0;
    for (const auto& r : runs) var += std::pow(r.first(static_cast<Eigen::Index>(c)) - mean, 2);
    var /= static_cast<double>(runs.size() - 1);
    report.first_message_mean.push_back(mean);
    report.first_message_std.push_back(std::sqrt(var));
  }

  for (Node target = 0; target < g.size(); ++target) {
    if (target == cfg.adversary || !privacy_classifier(g, cfg.adversary, target)) continue;
    PrivacyCertificate cert{target, find_witness(g, cfg.adversary, target)};
    cert.r_alt_min = cert.r_alt_max = cfg.reference(static_cast<Eigen::Index>(target));
    for (double e : cfg.e_grid) {
      const auto pair = certify_pair(g, cfg.adversary, target, cert.witness, e, alg2);
      cert.max_deviation = std::max(cert.max_deviation, pair.report.max_deviation);
      const double r_alt = pair.alternative.alt_reference(static_cast<Eigen::Index>(target));
      cert.r_alt_min = std::min(cert.r_alt_min, r_alt);
      cert.r_alt_max = std::max(cert.r_alt_max, r_alt);
    }
    report.certificates.push_back(cert);
  }
  return report;
}

/// File name -> CSV contents.
using CsvBundle = std::map<std::string, std::string>;

struct FigureTraces {
  std::vector<ExecutionTrace> m1_runs;      // noisy baseline executions
  std::optional<ExecutionTrace> alg2_run;   // same reference, Alg2
  std::vector<ExecutionTrace> alg2_family;  // base execution first, then alternatives
  std::string label = "alpha";
};

namespace detail {
inline void csv_header_block(std::ostream& os, const std::string& prefix, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) os << ',' << prefix << "_x" << (i + 1);
}
inline void csv_row_block(std::ostream& os, const Matrix& m, Eigen::Index k) {
  for (Eigen::Index i = 0; i < m.cols(); ++i) os << ',' << format_number(m(k, i));
}
}  // namespace detail

/// Trajectory-comparison data (M1 runs vs Alg2) and the indistinguishable
/// family with pairwise x differences against the base execution.
inline CsvBundle emit_figures_data(const FigureTraces& traces) {
  CsvBundle bundle;
  if (traces.alg2_run || !traces.m1_runs.empty()) {
    std::vector<std::pair<std::string, const Matrix*>> series;
    for (std::size_t r = 0; r < traces.m1_runs.size(); ++r)
      series.emplace_back("m1_run" + std::to_string(r + 1), &traces.m1_runs[r].x);
    if (traces.alg2_run) series.emplace_back("alg2", &traces.alg2_run->x);
    std::ostringstream os;
    os << 'k';
    for (const auto& [name, m] : series) detail::csv_header_block(os, name, static_cast<std::size_t>(m->cols()));
    os << '\n';
    Eigen::Index rows = series.front().second->rows();
    for (const auto& s : series) rows = std::min(rows, s.second->rows());
    for (Eigen::Index k = 0; k < rows; ++k) {
      os << k;
      for (const auto& s : series) detail::csv_row_block(os, *s.second, k);
      os << '\n';
    }
    bundle["trajectories_" + traces.label + ".csv"] = os.str();
  }
  if (!traces.alg2_family.empty()) {
    const auto& base = traces.alg2_family.front();
    const auto n = static_cast<std::size_t>(base.x.cols());
    std::vector<Matrix> diffs;
    for (std::size_t e = 1; e < traces.alg2_family.size(); ++e) diffs.push_back(base.x - traces.alg2_family[e].x);
    std::ostringstream os;
    os << 'k';
    for (std::size_t e = 0; e < traces.alg2_family.size(); ++e) detail::csv_header_block(os, "exec" + std::to_string(e + 1), n);
    for (std::size_t e = 0; e < diffs.size(); ++e) {
      for (std::size_t i = 0; i < n; ++i) os << ",e1" << (e + 2) << "_x" << (i + 1);
    }
    os << '\n';
    for (Eigen::Index k = 0; k < base.x.rows(); ++k) {
      os << k;
      for (const auto& t : traces.alg2_family) detail::csv_row_block(os, t.x, k);
      for (const auto& d : diffs) detail::csv_row_block(os, d, k);
      os << '\n';
    }
    bundle["indistinguishable_" + traces.label + ".csv"] = os.str();
  }
  return bundle;
}

inline std::vector<std::string> write_bundle(const CsvBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& [name, content] : bundle) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    written.push_back(path.string());
  }
  return written;
}

/// End-to-end dispatch: Alg2 consensus on alpha and beta, then each agent
/// computes its own setpoint from its local estimates.
struct DispatchResult {
  double delta = 0.0;
  std::size_t horizon = 0;
  ExecutionTrace alpha_run;
  ExecutionTrace beta_run;
  Vector alpha_estimate;  // per-agent x_i(K)
  Vector beta_estimate;
  Vector setpoints;       // p_i from agent i's own estimates
  Vector exact_setpoints; // p_i from the exact averages
  double demand_mismatch = 0.0;  // |sum p - P_D|
  double mismatch_bound = 0.0;   // first-order bound from the consensus errors
  std::vector<AlternativeExecution> alpha_alternatives;
  std::vector<double> alternative_deviation;

  nlohmann::json to_json() const {
    nlohmann::json alts = nlohmann::json::array();
    for (std::size_t a = 0; a < alpha_alternatives.size(); ++a)
      alts.push_back({{"witness", alpha_alternatives[a].witness + 1},
                      {"e_x3_0", alpha_alternatives[a].e_x3_0},
                      {"alpha", vector_json(alpha_alternatives[a].alt_reference)},
                      {"max_deviation", alternative_deviation[a]}});
    return {{"delta", delta},
            {"horizon", horizon},
            {"alpha_bar", alpha_run.reference_average()},
            {"beta_bar", beta_run.reference_average()},
            {"alpha_estimate", vector_json(alpha_estimate)},
            {"beta_estimate", vector_json(beta_estimate)},
            {"setpoints", vector_json(setpoints)},
            {"exact_setpoints", vector_json(exact_setpoints)},
            {"total_dispatch", setpoints.sum()},
            {"demand", opd::kDemand},
            {"demand_mismatch", demand_mismatch},
            {"mismatch_bound", mismatch_bound},
            {"alpha_alternatives", alts}};
  }
};

inline DispatchResult run_dispatch(const WeightedDigraph& g, double delta = 0.0, std::size_t horizon = 0) {
  if (g.size() != opd::kAgents) throw PreconditionError("run_dispatch: preset has five agents");
  DispatchResult out;
  out.delta = delta > 0.0 ? delta : opd::default_delta(g);
  out.horizon = horizon > 0 ? horizon : opd::default_horizon(g, out.delta);
  const Vector alpha = opd::alpha();
  const Vector beta = opd::beta();
  const ProtocolSpec alpha_spec{Algorithm::Alg2, out.delta, out.horizon, alpha};
  out.alpha_run = run_alg2(g, alpha_spec);
  out.beta_run = run_alg2(g, ProtocolSpec{Algorithm::Alg2, out.delta, out.horizon, beta});
  out.alpha_estimate = out.alpha_run.x.row(out.alpha_run.x.rows() - 1).transpose();
  out.beta_estimate = out.beta_run.x.row(out.beta_run.x.rows() - 1).transpose();

  const auto n = g.size();
  const double nn = static_cast<double>(n);
  out.setpoints = Vector(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    // Each agent only uses its own pair of estimates.
    out.setpoints(i) = opd::opd_dispatch(alpha, beta, opd::kDemand, out.alpha_estimate(i), out.beta_estimate(i), n)(i);
  }
  out.exact_setpoints = opd::opd_dispatch(alpha, beta, opd::kDemand, alpha.mean(), beta.mean(), n);
  out.demand_mismatch = std::abs(out.setpoints.sum() - opd::kDemand);

  const double beta_bar = beta.mean();
  const double lambda = (opd::kDemand + nn * alpha.mean()) / (nn * beta_bar);
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    const double ea = std::abs(out.alpha_estimate(i) - alpha.mean());
    const double eb = std::abs(out.beta_estimate(i) - beta_bar);
    out.mismatch_bound += 2.0 * (beta(i) / beta_bar * ea + beta(i) * lambda / beta_bar * eb);
  }

  // Two alternative alpha vectors through witness agent 2, e = -1500 and +1500.
  const Node adversary = opd::kAdversary;
  const Node target = 0;
  for (double e : {-1500.0, 1500.0}) {
    const auto pair = certify_pair(g, adversary, target, find_witness(g, adversary, target), e, alpha_spec);
    out.alpha_alternatives.push_back(pair.alternative);
    out.alternative_deviation.push_back(pair.report.max_deviation);
  }
  return out;
}

}  // namespace privcon
