// privcon: command-line front end for the consensus privacy simulator.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "privcon/privcon.hpp"

namespace {

namespace fs = std::filesystem;
using privcon::Json;

void write_json_file(const fs::path& path, const Json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_run(const std::string& config_path) {
  auto cfg = privcon::load_config(config_path);
  cfg.output_dir = privcon::resolve_output_dir(cfg.output_dir);
  const auto report = privcon::run_experiment(cfg);
  for (const auto& run : report.summary.at("runs")) {
    std::cout << run.at("name").get<std::string>() << ": " << run.at("algorithm").get<std::string>()
              << " consensus " << privcon::format_number(run.at("consensus_value").get<double>()) << " (error "
              << privcon::format_number(run.at("consensus_error").get<double>()) << ")\n";
  }
  for (const auto& v : report.violations) std::cerr << "violation: " << v << '\n';
  std::cout << "wrote " << report.files.size() << " files to " << cfg.output_dir.string() << '\n';
  return report.ok() ? 0 : 1;
}

int cmd_opd(double delta, std::size_t steps, const std::string& graph_path, const fs::path& out_dir) {
  const auto g = graph_path.empty() ? privcon::opd::preset_graph() : privcon::load_graph(graph_path);
  const auto d = privcon::run_dispatch(g, delta, steps);
  std::cout << "delta " << privcon::format_number(d.delta) << ", steps " << d.horizon << '\n';
  std::cout << "alpha_bar " << privcon::format_number(d.alpha_run.reference_average()) << ", beta_bar "
            << privcon::format_number(d.beta_run.reference_average()) << '\n';
  for (Eigen::Index i = 0; i < d.setpoints.size(); ++i)
    std::cout << "p" << (i + 1) << " = " << privcon::format_number(d.setpoints(i)) << " MW\n";
  std::cout << "total " << privcon::format_number(d.setpoints.sum()) << " MW (demand "
            << privcon::format_number(privcon::opd::kDemand) << ")\n";
  for (std::size_t a = 0; a < d.alpha_alternatives.size(); ++a) {
    std::cout << "indistinguishable alpha #" << (a + 2) << ":";
    for (Eigen::Index i = 0; i < d.alpha_alternatives[a].alt_reference.size(); ++i)
      std::cout << ' ' << privcon::format_number(d.alpha_alternatives[a].alt_reference(i));
    std::cout << "  (view deviation " << privcon::format_number(d.alternative_deviation[a]) << ")\n";
  }

  privcon::write_trace_files(d.alpha_run, (out_dir / "opd_alpha.csv").string(),
                             (out_dir / "opd_alpha.manifest.json").string());
  privcon::write_trace_files(d.beta_run, (out_dir / "opd_beta.csv").string(),
                             (out_dir / "opd_beta.manifest.json").string());
  privcon::FigureTraces family;
  family.alg2_family.push_back(d.alpha_run);
  for (const auto& alt : d.alpha_alternatives)
    family.alg2_family.push_back(privcon::run_alg2(g, alt.spec_from(d.alpha_run.spec)));
  privcon::write_bundle(privcon::emit_figures_data(family), out_dir);
  write_json_file(out_dir / "opd_summary.json", d.to_json());
  const bool ok = d.demand_mismatch <= std::max(1e-6, d.mismatch_bound);
  if (!ok) std::cerr << "violation: dispatch misses the demand by " << d.demand_mismatch << '\n';
  return ok ? 0 : 1;
}

int cmd_compare(std::size_t runs, double sigma, double phi, std::uint64_t seed, const fs::path& out_dir) {
  const auto g = privcon::opd::preset_graph();
  Json all;
  for (const auto& [label, reference] : {std::pair{"alpha", privcon::opd::alpha()}, std::pair{"beta", privcon::opd::beta()}}) {
    privcon::ComparisonConfig cfg;
    cfg.graph = g;
    cfg.reference = reference;
    cfg.runs = runs;
    cfg.sigma = sigma;
    cfg.phi = phi;
    cfg.seed = seed;
    const auto report = privcon::compare_privacy(cfg);
    all[label] = report.to_json();
    std::cout << label << ": total variation alg2 " << privcon::format_number(report.tv_alg2) << ", m1 mean "
              << privcon::format_number(report.tv_m1_mean) << " (ratio " << privcon::format_number(report.tv_ratio())
              << ")\n";
    for (std::size_t i = 0; i < report.observed.size(); ++i)
      std::cout << "  first-message estimate of agent " << (report.observed[i] + 1) << ": mean "
                << privcon::format_number(report.first_message_mean[i]) << ", std "
                << privcon::format_number(report.first_message_std[i]) << '\n';
    for (const auto& c : report.certificates)
      std::cout << "  alg2 agent " << (c.target + 1) << " (witness " << (c.witness + 1) << "): reference range ["
                << privcon::format_number(c.r_alt_min) << ", " << privcon::format_number(c.r_alt_max)
                << "], view deviation " << privcon::format_number(c.max_deviation) << '\n';

    privcon::FigureTraces fig;
    fig.label = label;
    for (std::uint64_t s = 0; s < 2; ++s) {
      privcon::ProtocolSpec m1{privcon::Algorithm::M1, report.delta, report.horizon, reference};
      m1.noise = privcon::M1NoiseConfig{phi, sigma, seed + s};
      fig.m1_runs.push_back(privcon::run_m1(g, m1));
    }
    fig.alg2_run = privcon::run_alg2(g, {privcon::Algorithm::Alg2, report.delta, report.horizon, reference});
    privcon::write_bundle(privcon::emit_figures_data(fig), out_dir);
  }
  write_json_file(out_dir / "comparison.json", all);
  return 0;
}

int cmd_verify() {
  bool ok = true;
  for (const auto& r : privcon::run_invariant_suite()) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.passed) std::cout << " -- " << r.detail;
    std::cout << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

int cmd_spectrum(const std::string& graph_path) {
  const auto g = privcon::load_graph(graph_path);
  const auto spec = privcon::spectrum(privcon::laplacian(g));
  std::cout << "agents " << g.size() << ", strongly connected " << (privcon::is_strongly_connected(g) ? "yes" : "no")
            << ", weight-balanced " << (privcon::is_weight_balanced(g) ? "yes" : "no") << '\n';
  for (const auto& ev : spec.eigenvalues) {
    std::cout << "  " << privcon::format_number(ev.real());
    if (ev.imag() != 0.0) std::cout << (ev.imag() < 0 ? " - " : " + ") << privcon::format_number(std::abs(ev.imag())) << "i";
    std::cout << '\n';
  }
  if (privcon::is_strongly_connected(g) && privcon::is_weight_balanced(g)) {
    const auto b = privcon::stepsize_bound(g);
    std::cout << "stepsize bound " << privcon::format_number(b.bound) << "; alg1 range (0, "
              << privcon::format_number(b.alg1.hi) << "), alg2 range (0, " << privcon::format_number(b.alg2.hi) << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-preserving average consensus simulator"};
  app.require_subcommand(1);
  const fs::path default_out = privcon::resolve_output_dir("privcon_out");

  std::string config;
  auto* run = app.add_subcommand("run", "Execute an experiment config");
  run->add_option("config", config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  double delta = 0.0;
  std::size_t steps = 0;
  std::string graph;
  auto* opd = app.add_subcommand("opd", "Optimal power dispatch demonstration");
  opd->add_option("--delta", delta, "Stepsize (default 0.45*min{2, bound})");
  opd->add_option("--steps", steps, "Horizon (default from the iteration spectral radius)");
  opd->add_option("--graph", graph, "Graph file replacing the preset topology")->check(CLI::ExistingFile);

  std::size_t runs = 400;
  double sigma = 100.0, phi = 0.9;
  std::uint64_t seed = 1;
  auto* compare = app.add_subcommand("compare", "Alg2 versus additive-noise masking (M1)");
  compare->add_option("--runs", runs, "Monte-Carlo runs")->check(CLI::PositiveNumber);
  compare->add_option("--sigma", sigma, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  compare->add_option("--phi", phi, "Noise decay factor in (0, 1)");
  compare->add_option("--seed", seed, "Base seed (run r uses seed + r)");

  auto* verify = app.add_subcommand("verify", "Run the built-in invariant suite");

  std::string spectrum_graph;
  auto* spectrum = app.add_subcommand("spectrum", "Laplacian spectrum and stepsize ranges of a graph");
  spectrum->add_option("graph", spectrum_graph, "Graph file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config);
    if (*opd) return cmd_opd(delta, steps, graph, default_out);
    if (*compare) return cmd_compare(runs, sigma, phi, seed, default_out);
    if (*verify) return cmd_verify();
    if (*spectrum) return cmd_spectrum(spectrum_graph);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
