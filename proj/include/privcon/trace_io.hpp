#pragma once

// Trace export. CSV columns: k, agent, x, v, f, w (agent is 1-based; fields an
// engine does not have are left empty). Numbers use the shortest round-trip
// representation, so identical traces give identical bytes.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "privcon/graph.hpp"
#include "privcon/graph_io.hpp"
#include "privcon/protocols.hpp"

namespace privcon {

inline std::string format_number(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

inline bool has_v_column(Algorithm a) {
  return a == Algorithm::Alg2 || a == Algorithm::Alg2Perturbed || a == Algorithm::Alg3;
}

inline void write_trace_csv(const ExecutionTrace& t, std::ostream& out) {
  const auto a = t.spec.algorithm;
  const bool v = has_v_column(a);
  const bool f = a == Algorithm::Alg2Perturbed;
  const bool w = a == Algorithm::M1;
  out << "k,agent,x,v,f,w\n";
  for (Eigen::Index k = 0; k < t.x.rows(); ++k) {
    for (Eigen::Index i = 0; i < t.x.cols(); ++i) {
      out << k << ',' << (i + 1) << ',' << format_number(t.x(k, i)) << ',';
      if (v) out << format_number(t.v(k, i));
      out << ',';
      if (f) out << format_number(t.f(k, i));
      out << ',';
      if (w) out << format_number(t.w(k, i));
      out << '\n';
    }
  }
}

inline nlohmann::json vector_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline nlohmann::json perturbation_json(const PerturbationSignal& s) {
  return std::visit(
      [](const auto& k) -> nlohmann::json {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, PerturbationSignal::Zero>) return {{"type", "zero"}};
        else if constexpr (std::is_same_v<T, PerturbationSignal::FiniteSupport>)
          return {{"type", "finite_support"}, {"values", k.values}};
        else if constexpr (std::is_same_v<T, PerturbationSignal::Geometric>)
          return {{"type", "geometric"}, {"c", k.c}, {"rho", k.rho}};
        else return {{"type", "constant"}, {"c", k.c}};
      },
      s.kind());
}

inline PerturbationSignal perturbation_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "zero") return PerturbationSignal::zero();
  if (type == "finite_support") return PerturbationSignal::finite_support(j.at("values").get<std::vector<double>>());
  if (type == "geometric") return PerturbationSignal::geometric(j.at("c").get<double>(), j.at("rho").get<double>());
  if (type == "constant") return PerturbationSignal::constant(j.at("c").get<double>());
  throw FormatError("unknown perturbation type '" + type + "'");
}

inline nlohmann::json spec_json(const ProtocolSpec& s) {
  nlohmann::json j = {{"algorithm", to_string(s.algorithm)}, {"delta", s.delta}, {"horizon", s.horizon},
                      {"reference", vector_json(s.reference)}, {"x0", vector_json(s.x0)},
                      {"v0", vector_json(s.v0)}};
  if (!s.perturbation.empty()) {
    nlohmann::json p = nlohmann::json::array();
    for (const auto& f : s.perturbation) p.push_back(perturbation_json(f));
    j["perturbation"] = std::move(p);
  }
  if (s.noise) j["noise"] = {{"phi", s.noise->phi}, {"sigma", s.noise->sigma}, {"seed", s.noise->seed}};
  return j;
}

/// Manifest echoing the executed spec and identifying the graph.
inline nlohmann::json run_manifest(const ExecutionTrace& t) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(graph_hash(t.graph)));
  return {{"spec", spec_json(t.spec)}, {"graph", graph_to_json(t.graph)}, {"graph_hash", hash},
          {"steps", t.steps()}, {"consensus_error", t.consensus_error()}};
}

inline void write_trace_files(const ExecutionTrace& t, const std::string& csv_path, const std::string& manifest_path) {
  for (const auto& p : {csv_path, manifest_path}) {
    const auto parent = std::filesystem::path(p).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
  }
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  write_trace_csv(t, csv);
  std::ofstream manifest(manifest_path);
  if (!manifest) throw std::runtime_error("cannot write " + manifest_path);
  manifest << run_manifest(t).dump(2) << '\n';
}

}  // namespace privcon
