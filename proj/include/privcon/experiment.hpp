#pragma once

// Config-driven experiment runner.
//
// {
//   "graph": "graph.json" | {"n": .., "edges": [[from, to, w], ..]},
//   "runs": [{"name": "a", "algorithm": "alg2", "reference": [..],
//             "delta": 0.1, "horizon": 200, "x0": [..], "v0": [..],
//             "perturbation": [{"type": "geometric", "c": 5, "rho": 0.5}, ..],
//             "noise": {"phi": 0.9, "sigma": 100, "seed": 7}}],
//   "adversary": 5, "targets": [1, 2, 3, 4],
//   "attacks": ["recover", "observer", "indistinguishability"],
//   "indistinguishability": {"e_x3_0": [1, 10, 1500]},
//   "convergence_tolerance": 1e-6,
//   "output_dir": "out"
// }
// Node labels are 1-based; delta and horizon default to the preset rules.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "privcon/adversary.hpp"
#include "privcon/graph_io.hpp"
#include "privcon/indistinguishability.hpp"
#include "privcon/invariants.hpp"
#include "privcon/opd.hpp"
#include "privcon/protocols.hpp"
#include "privcon/trace_io.hpp"

namespace privcon {

inline constexpr const char* kOutputDirEnv = "PRIVCON_OUTPUT_DIR";

struct RunConfig {
  std::string name;
  ProtocolSpec spec;
};

struct ExperimentConfig {
  WeightedDigraph graph;
  std::vector<RunConfig> runs;
  std::optional<Node> adversary;
  std::vector<Node> targets;
  std::vector<std::string> attacks;
  std::vector<double> e_grid{1.0, 10.0, 1500.0};
  double convergence_tolerance = 1e-6;
  std::filesystem::path output_dir = "privcon_out";
};

namespace detail {

inline Vector json_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(where + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Node json_node(const Json& j, std::size_t n, const std::string& where) {
  if (!j.is_number_integer()) throw FormatError(where + ": node label must be an integer");
  const auto label = j.get<long long>();
  if (label < 1 || static_cast<std::size_t>(label) > n) {
    throw FormatError(where + ": node " + std::to_string(label) + " out of range [1.." + std::to_string(n) + "]");
  }
  return static_cast<Node>(label - 1);
}

/// Fills delta/horizon defaults for a run from the preset rules.
inline void apply_defaults(const WeightedDigraph& g, ProtocolSpec& spec, bool has_delta, bool has_horizon) {
  if (!has_delta) spec.delta = opd::default_delta(g);
  if (!has_horizon) {
    const auto base = spec.algorithm == Algorithm::M1 ? Algorithm::Alg1 : spec.algorithm;
    spec.horizon = opd::default_horizon(g, spec.delta, {base});
    if (spec.algorithm == Algorithm::M1) spec.horizon = std::max(spec.horizon, horizon_for(spec.noise->phi));
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw FormatError("config: document must be an object");
  ExperimentConfig cfg;
  if (!doc.contains("graph")) throw FormatError("config: missing field 'graph'");
  const auto& graph = doc.at("graph");
  if (graph.is_string()) {
    const auto path = base_dir / graph.get<std::string>();
    if (!std::filesystem::exists(path)) throw FormatError("config.graph: file not found: " + path.string());
    cfg.graph = load_graph(path.string());
  } else {
    cfg.graph = graph_from_json(graph);
  }
  const auto n = cfg.graph.size();

  if (!doc.contains("runs") || !doc.at("runs").is_array() || doc.at("runs").empty()) {
    throw FormatError("config: 'runs' must be a non-empty array");
  }
  const auto& runs = doc.at("runs");
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& item = runs[r];
    const std::string where = "config.runs[" + std::to_string(r) + "]";
    if (!item.is_object()) throw FormatError(where + ": expected an object");
    RunConfig run;
    run.name = item.value("name", "run" + std::to_string(r + 1));
    try {
      run.spec.algorithm = algorithm_from_string(item.value("algorithm", std::string("alg2")));
    } catch (const PreconditionError& err) {
      throw FormatError(where + ".algorithm: " + err.what());
    }
    if (!item.contains("reference")) throw FormatError(where + ": missing field 'reference'");
    run.spec.reference = detail::json_vector(item.at("reference"), where + ".reference");
    if (item.contains("x0")) run.spec.x0 = detail::json_vector(item.at("x0"), where + ".x0");
    if (item.contains("v0")) run.spec.v0 = detail::json_vector(item.at("v0"), where + ".v0");
    if (item.contains("perturbation")) {
      for (const auto& p : item.at("perturbation")) run.spec.perturbation.push_back(perturbation_from_json(p));
    } else if (run.spec.algorithm == Algorithm::Alg2Perturbed) {
      run.spec.perturbation.assign(n, PerturbationSignal::zero());
    }
    if (item.contains("noise")) {
      const auto& nz = item.at("noise");
      run.spec.noise = M1NoiseConfig{nz.value("phi", 0.9), nz.value("sigma", 100.0), nz.value("seed", std::uint64_t{0})};
    } else if (run.spec.algorithm == Algorithm::M1) {
      run.spec.noise = M1NoiseConfig{};
    }
    const bool has_delta = item.contains("delta");
    const bool has_horizon = item.contains("horizon");
    if (has_delta) run.spec.delta = item.at("delta").get<double>();
    if (has_horizon) run.spec.horizon = item.at("horizon").get<std::size_t>();
    detail::apply_defaults(cfg.graph, run.spec, has_delta, has_horizon);
    cfg.runs.push_back(std::move(run));
  }

  if (doc.contains("adversary")) cfg.adversary = detail::json_node(doc.at("adversary"), n, "config.adversary");
  if (doc.contains("targets")) {
    for (std::size_t t = 0; t < doc.at("targets").size(); ++t)
      cfg.targets.push_back(detail::json_node(doc.at("targets")[t], n, "config.targets[" + std::to_string(t) + "]"));
  } else if (cfg.adversary) {
    for (Node t = 0; t < n; ++t)
      if (t != *cfg.adversary) cfg.targets.push_back(t);
  }
  if (doc.contains("attacks")) cfg.attacks = doc.at("attacks").get<std::vector<std::string>>();
  for (const auto& a : cfg.attacks)
    if (a != "recover" && a != "observer" && a != "indistinguishability")
      throw FormatError("config.attacks: unknown attack '" + a + "'");
  if (doc.contains("indistinguishability")) {
    cfg.e_grid = doc.at("indistinguishability").at("e_x3_0").get<std::vector<double>>();
  }
  cfg.convergence_tolerance = doc.value("convergence_tolerance", cfg.convergence_tolerance);
  if (doc.contains("output_dir")) cfg.output_dir = base_dir / doc.at("output_dir").get<std::string>();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  const Json doc = parse_json_text(read_text_file(path.string()), path.string());
  try {
    return parse_config(doc, path.parent_path());
  } catch (const Json::exception& err) {
    throw FormatError(path.string() + ": " + err.what());
  } catch (const PreconditionError& err) {
    throw FormatError(path.string() + ": " + err.what());
  }
}

/// PRIVCON_OUTPUT_DIR, when set, replaces the configured output directory.
inline std::filesystem::path resolve_output_dir(const std::filesystem::path& configured) {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return configured;
}

struct ExperimentReport {
  std::vector<std::string> violations;
  std::vector<std::string> files;
  Json summary;

  bool ok() const { return violations.empty(); }
};

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  ExperimentReport report;
  fs::create_directories(cfg.output_dir);
  const auto& g = cfg.graph;
  Json attacks = Json::array();
  Json certificates = Json::array();
  Json runs = Json::array();

  auto fail = [&report](const std::string& run, const std::string& what) { report.violations.push_back(run + ": " + what); };

  for (const auto& run : cfg.runs) {
    ExecutionTrace trace;
    try {
      trace = run_protocol(g, run.spec);
    } catch (const std::exception& err) {
      fail(run.name, err.what());
      continue;
    }
    const auto csv = (cfg.output_dir / (run.name + ".csv")).string();
    const auto manifest = (cfg.output_dir / (run.name + ".manifest.json")).string();
    write_trace_files(trace, csv, manifest);
    report.files.push_back(csv);
    report.files.push_back(manifest);

    for (const auto& v : check_trace_invariants(trace, cfg.convergence_tolerance)) fail(run.name, v);
    Json admissibility = Json::array();
    if (run.spec.algorithm == Algorithm::Alg2Perturbed) {
      for (std::size_t i = 0; i < run.spec.perturbation.size(); ++i) {
        const auto cert = check_admissibility(run.spec.perturbation[i], trace.spec.delta, trace.spec.horizon, 1e-8);
        admissibility.push_back({{"agent", i + 1}, {"admissible", cert.admissible}, {"residual", cert.residual}});
      }
    }
    const Vector final_x = trace.x.row(trace.x.rows() - 1).transpose();
    runs.push_back({{"name", run.name},
                    {"algorithm", to_string(run.spec.algorithm)},
                    {"delta", trace.spec.delta},
                    {"horizon", trace.spec.horizon},
                    {"reference_average", trace.reference_average()},
                    {"consensus_value", final_x.mean()},
                    {"consensus_error", trace.consensus_error()},
                    {"perturbation_admissibility", admissibility}});

    if (!cfg.adversary) continue;
    const Node adv = *cfg.adversary;
    if (!view_is_projection(trace, adv)) fail(run.name, "adversary view is not a projection of the trace");
    const auto view = extract_view(trace, adv);
    const auto kind = run.spec.algorithm;
    for (Node target : cfg.targets) {
      if (target == adv) continue;
      const double truth = run.spec.reference(static_cast<Eigen::Index>(target));
      const bool is_private = privacy_classifier(g, adv, target);
      auto want = [&](const char* a) { return std::find(cfg.attacks.begin(), cfg.attacks.end(), a) != cfg.attacks.end(); };
      if (!is_private && want("recover") && kind == Algorithm::Alg2) {
        AttackReport r{target, "recover_reference", recover_reference(view, target, 1), truth, 2};
        if (*r.abs_error() > 1e-9 * std::max(1.0, std::abs(truth))) fail(run.name, "reference recovery is inexact");
        attacks.push_back(to_json(r));
      }
      if (!is_private && want("observer") && (kind == Algorithm::Alg2 || kind == Algorithm::Alg2Perturbed)) {
        const auto z = run_observer(view, target, trace.spec.horizon);
        attacks.push_back(to_json(AttackReport{target, "observer", z.back(), truth, z.size()}));
      }
      if (is_private && want("indistinguishability") && kind == Algorithm::Alg2 && trace.spec.v0.isZero(0.0)) {
        const Node witness = find_witness(g, adv, target);
        for (double e : cfg.e_grid) {
          const auto pair = certify_pair(g, adv, target, witness, e, trace.spec);
          if (pair.report.max_deviation > 1e-9 * std::max(1.0, std::abs(e)))
            fail(run.name, "indistinguishability deviation above tolerance for target " + std::to_string(target + 1));
          Json j = to_json(pair.report);
          j["run"] = run.name;
          certificates.push_back(std::move(j));
        }
      }
    }
  }

  auto write_json = [&](const std::string& name, const Json& j) {
    const auto path = (cfg.output_dir / name).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    report.files.push_back(path);
  };
  if (!attacks.empty()) write_json("attacks.json", attacks);
  if (!certificates.empty()) write_json("indistinguishability.json", certificates);
  report.summary = {{"runs", runs}, {"violations", report.violations}, {"ok", report.ok()}};
  write_json("summary.json", report.summary);
  return report;
}

}  // namespace privcon
