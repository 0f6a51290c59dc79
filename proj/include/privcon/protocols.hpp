#pragma once

// Discrete-time consensus engines. Every run validates its preconditions,
// iterates for `horizon` steps and records the full trace, including the value
// carried by every communication channel at every step.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "privcon/graph.hpp"
#include "privcon/perturbation.hpp"
#include "privcon/random.hpp"

namespace privcon {

enum class Algorithm {
  Alg1,           // Laplacian consensus, x(0) = r
  Alg2,           // dynamic-consensus iteration with internal state v, v(0) summing to 0
  Alg3,           // initialization-free variant for undirected graphs, exchanges x and v
  Alg2Perturbed,  // Alg2 with an additive per-agent perturbation in the x update
  M1,             // Alg1 on transmissions masked by telescoping decaying Gaussian noise
};

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Alg1: return "alg1";
    case Algorithm::Alg2: return "alg2";
    case Algorithm::Alg3: return "alg3";
    case Algorithm::Alg2Perturbed: return "alg2_perturbed";
    case Algorithm::M1: return "m1";
  }
  return "unknown";
}

inline Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::Alg1, Algorithm::Alg2, Algorithm::Alg3, Algorithm::Alg2Perturbed, Algorithm::M1})
    if (to_string(a) == s) return a;
  throw PreconditionError("unknown algorithm '" + s + "'");
}

struct M1NoiseConfig {
  double phi = 0.9;
  double sigma = 100.0;
  std::uint64_t seed = 0;
};

struct ProtocolSpec {
  Algorithm algorithm = Algorithm::Alg2;
  double delta = 0.0;
  std::size_t horizon = 0;
  Vector reference{};
  Vector x0{};  // empty: defaults to `reference`
  Vector v0{};  // empty: zero vector
  std::vector<PerturbationSignal> perturbation{};  // one per agent, Alg2Perturbed only
  std::optional<M1NoiseConfig> noise{};             // M1 only
};

/// The edge (receiver, sender): `receiver` gets `sender`'s message each step.
struct Channel {
  Node receiver = 0;
  Node sender = 0;
};

struct ExecutionTrace {
  WeightedDigraph graph;
  ProtocolSpec spec;  // as executed, with x0 and v0 filled in
  Matrix x;           // (K+1) x n
  Matrix v;           // (K+1) x n, zero for engines without v
  Matrix f;           // perturbation applied at step k, zero when absent
  Matrix w;           // M1 masking noise, zero otherwise
  Matrix noise_draws; // M1 raw draws nu(k); empty otherwise
  std::vector<Channel> channels;
  Matrix sent_x;      // (K+1) x channels.size()
  Matrix sent_v;      // Alg3 only; empty otherwise

  std::size_t agents() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t steps() const { return static_cast<std::size_t>(x.rows()); }
  double reference_average() const { return spec.reference.mean(); }

  std::optional<std::size_t> channel_index(Node receiver, Node sender) const {
    for (std::size_t c = 0; c < channels.size(); ++c)
      if (channels[c].receiver == receiver && channels[c].sender == sender) return c;
    return std::nullopt;
  }

  /// max_i |x_i(K) - r_avg|
  double consensus_error() const {
    return (x.row(x.rows() - 1).transpose().array() - reference_average()).abs().maxCoeff();
  }
};

namespace detail {

using Neighborhood = std::vector<std::vector<std::pair<Node, double>>>;

inline Neighborhood neighborhoods(const WeightedDigraph& g) {
  Neighborhood out(g.size());
  for (Node i = 0; i < g.size(); ++i)
    for (Node j : g.out_neighbors(i)) out[i].emplace_back(j, g.weight(i, j));
  return out;
}

/// sum_j a_ij (s_i - s_j)
inline double disagreement(const Neighborhood& nb, const Vector& s, Node i) {
  double acc = 0.0;
  for (const auto& [j, a] : nb[i]) acc += a * (s(static_cast<Eigen::Index>(i)) - s(static_cast<Eigen::Index>(j)));
  return acc;
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

inline void require_size(const Vector& v, std::size_t n, const std::string& name) {
  require(static_cast<std::size_t>(v.size()) == n,
          name + " has " + std::to_string(v.size()) + " entries, expected " + std::to_string(n));
}

inline ExecutionTrace start_trace(const WeightedDigraph& g, const ProtocolSpec& spec) {
  ExecutionTrace t;
  t.graph = g;
  t.spec = spec;
  const auto rows = static_cast<Eigen::Index>(spec.horizon + 1);
  const auto n = static_cast<Eigen::Index>(g.size());
  t.x = Matrix::Zero(rows, n);
  t.v = Matrix::Zero(rows, n);
  t.f = Matrix::Zero(rows, n);
  t.w = Matrix::Zero(rows, n);
  for (const auto& e : g.edges()) t.channels.push_back({e.from, e.to});
  t.sent_x = Matrix::Zero(rows, static_cast<Eigen::Index>(t.channels.size()));
  return t;
}

inline void record_sent(ExecutionTrace& t, std::size_t k, const Vector& sent, Matrix& into) {
  for (std::size_t c = 0; c < t.channels.size(); ++c)
    into(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
        sent(static_cast<Eigen::Index>(t.channels[c].sender));
}

}  // namespace detail

/// Iteration matrix of the Alg3 update on the stacked state (v, x).
inline Matrix alg3_iteration_matrix(const WeightedDigraph& g, double delta) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const Matrix l = laplacian(g).matrix;
  const Matrix eye = Matrix::Identity(n, n);
  Matrix m(2 * n, 2 * n);
  m << eye, -delta * l, delta * l, (1.0 - delta) * eye - delta * l;
  return m;
}

/// Spectral radius of the Alg3 iteration with the conserved mean-of-v mode removed.
inline double alg3_disagreement_radius(const WeightedDigraph& g, double delta) {
  auto ev = spectrum(alg3_iteration_matrix(g, delta)).eigenvalues;
  std::size_t unit = 0;
  for (std::size_t i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i] - 1.0) < std::abs(ev[unit] - 1.0)) unit = i;
  double rho = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i)
    if (i != unit) rho = std::max(rho, std::abs(ev[i]));
  return rho;
}

/// Subdominant spectral radius of the linearized iteration of `a` on `g`.
inline double iteration_radius(const WeightedDigraph& g, Algorithm a, double delta) {
  if (a == Algorithm::Alg3) return alg3_disagreement_radius(g, delta);
  const double zero_tol = zero_eigenvalue_tolerance(g);
  double rho = 0.0;
  for (const auto& ev : spectrum(laplacian(g)).eigenvalues)
    if (std::abs(ev) >= zero_tol) rho = std::max(rho, std::abs(1.0 - delta * ev));
  if (a == Algorithm::Alg2 || a == Algorithm::Alg2Perturbed) rho = std::max(rho, std::abs(1.0 - delta));
  return rho;
}

/// Smallest K with rho^K < target, multiplied by `safety` for polynomial
/// transients from repeated eigenvalues, and capped at `cap`.
inline std::size_t horizon_for(double rho, double target = 1e-8, double safety = 2.0, std::size_t cap = 5000) {
  if (!(rho < 1.0)) throw PreconditionError("horizon_for: iteration is not contracting");
  if (rho <= 0.0) return 1;
  const double k = std::ceil(std::log(target) / std::log(rho));
  return std::min<std::size_t>(cap, static_cast<std::size_t>(std::max(1.0, safety * k)));
}

/// Checks the spec against the graph and returns it with x0/v0 filled in.
inline ProtocolSpec validated(const WeightedDigraph& g, ProtocolSpec spec) {
  using detail::require;
  const std::size_t n = g.size();
  require(n >= 2, "protocol needs at least two agents");
  require(spec.horizon >= 1, "horizon must be at least 1");
  require(spec.delta > 0.0 && std::isfinite(spec.delta), "stepsize must be positive");
  detail::require_size(spec.reference, n, "reference");
  if (spec.x0.size() == 0) spec.x0 = spec.reference;
  if (spec.v0.size() == 0) spec.v0 = Vector::Zero(static_cast<Eigen::Index>(n));
  detail::require_size(spec.x0, n, "x0");
  detail::require_size(spec.v0, n, "v0");

  const auto name = to_string(spec.algorithm);
  switch (spec.algorithm) {
    case Algorithm::Alg1:
    case Algorithm::M1: {
      require(spec.x0 == spec.reference, name + ": x0 must equal the reference vector");
      require(spec.v0.isZero(0.0), name + ": engine has no v state");
      if (spec.algorithm == Algorithm::M1) {
        require(g.is_undirected(), "m1: graph must be undirected");
        require(spec.noise.has_value(), "m1: noise configuration missing");
        require(spec.noise->phi > 0.0 && spec.noise->phi < 1.0, "m1: phi must lie in (0, 1)");
        require(spec.noise->sigma >= 0.0, "m1: sigma must be non-negative");
      }
      const auto bound = stepsize_bound(g);
      require(bound.alg1.contains(spec.delta), name + ": stepsize " + std::to_string(spec.delta) +
                                                   " outside (0, " + std::to_string(bound.alg1.hi) + ")");
      break;
    }
    case Algorithm::Alg2:
    case Algorithm::Alg2Perturbed: {
      const auto bound = stepsize_bound(g);
      require(bound.alg2.contains(spec.delta), name + ": stepsize " + std::to_string(spec.delta) +
                                                   " outside (0, " + std::to_string(bound.alg2.hi) + ")");
      require(std::abs(spec.v0.sum()) <= 1e-12 * std::max(1.0, spec.v0.cwiseAbs().sum()),
              name + ": initial v must sum to zero");
      if (spec.algorithm == Algorithm::Alg2Perturbed) {
        require(spec.perturbation.size() == n, "alg2_perturbed: need one perturbation signal per agent");
      }
      break;
    }
    case Algorithm::Alg3: {
      require(g.is_undirected(), "alg3: graph must be undirected (symmetric weights)");
      require(is_strongly_connected(g), "alg3: graph must be connected");
      const double rho = alg3_disagreement_radius(g, spec.delta);
      require(rho < 1.0, "alg3: stepsize " + std::to_string(spec.delta) +
                             " is unstable (disagreement spectral radius " + std::to_string(rho) + ")");
      break;
    }
  }
  return spec;
}

inline ExecutionTrace run_alg1(const WeightedDigraph& g, ProtocolSpec spec) {
  detail::require(spec.algorithm == Algorithm::Alg1, "run_alg1: spec is for " + to_string(spec.algorithm));
  spec = validated(g, std::move(spec));
  const auto nb = detail::neighborhoods(g);
  auto t = detail::start_trace(g, spec);
  Vector x = spec.x0;
  Vector next(x.size());
  for (std::size_t k = 0;; ++k) {
    t.x.row(static_cast<Eigen::Index>(k)) = x.transpose();
    detail::record_sent(t, k, x, t.sent_x);
    if (k == spec.horizon) break;
    for (Node i = 0; i < g.size(); ++i)
      next(static_cast<Eigen::Index>(i)) = x(static_cast<Eigen::Index>(i)) - spec.delta * detail::disagreement(nb, x, i);
    x.swap(next);
  }
  return t;
}

namespace detail {
inline ExecutionTrace run_alg2_family(const WeightedDigraph& g, ProtocolSpec spec, bool perturbed) {
  spec = validated(g, std::move(spec));
  const auto nb = neighborhoods(g);
  auto t = start_trace(g, spec);
  const Vector& r = spec.reference;
  Vector x = spec.x0;
  Vector v = spec.v0;
  Vector x_next(x.size()), v_next(v.size());
  for (std::size_t k = 0;; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    t.x.row(row) = x.transpose();
    t.v.row(row) = v.transpose();
    record_sent(t, k, x, t.sent_x);
    if (perturbed)
      for (Node i = 0; i < g.size(); ++i) t.f(row, static_cast<Eigen::Index>(i)) = spec.perturbation[i].at(k);
    if (k == spec.horizon) break;
    for (Node i = 0; i < g.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double lx = disagreement(nb, x, i);
      v_next(ii) = v(ii) + spec.delta * lx;
      double drift = -(x(ii) - r(ii)) - lx - v(ii);
      if (perturbed) drift += t.f(row, ii);
      x_next(ii) = x(ii) + spec.delta * drift;
    }
    x.swap(x_next);
    v.swap(v_next);
  }
  return t;
}
}  // namespace detail

inline ExecutionTrace run_alg2(const WeightedDigraph& g, ProtocolSpec spec) {
  detail::require(spec.algorithm == Algorithm::Alg2, "run_alg2: spec is for " + to_string(spec.algorithm));
  return detail::run_alg2_family(g, std::move(spec), false);
}

inline ExecutionTrace run_alg2_perturbed(const WeightedDigraph& g, ProtocolSpec spec) {
  detail::require(spec.algorithm == Algorithm::Alg2Perturbed,
                  "run_alg2_perturbed: spec is for " + to_string(spec.algorithm));
  return detail::run_alg2_family(g, std::move(spec), true);
}

inline ExecutionTrace run_alg3(const WeightedDigraph& g, ProtocolSpec spec) {
  detail::require(spec.algorithm == Algorithm::Alg3, "run_alg3: spec is for " + to_string(spec.algorithm));
  spec = validated(g, std::move(spec));
  const auto nb = detail::neighborhoods(g);
  auto t = detail::start_trace(g, spec);
  t.sent_v = Matrix::Zero(t.sent_x.rows(), t.sent_x.cols());
  const Vector& r = spec.reference;
  Vector x = spec.x0;
  Vector v = spec.v0;
  Vector x_next(x.size()), v_next(v.size());
  for (std::size_t k = 0;; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    t.x.row(row) = x.transpose();
    t.v.row(row) = v.transpose();
    detail::record_sent(t, k, x, t.sent_x);
    detail::record_sent(t, k, v, t.sent_v);
    if (k == spec.horizon) break;
    for (Node i = 0; i < g.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double lx = detail::disagreement(nb, x, i);
      const double lv = detail::disagreement(nb, v, i);
      v_next(ii) = v(ii) - spec.delta * lx;
      x_next(ii) = x(ii) + spec.delta * (-(x(ii) - r(ii)) - lx + lv);
    }
    x.swap(x_next);
    v.swap(v_next);
  }
  return t;
}

/// Masking noise w(0) = nu(0), w(k) = phi^k nu(k) - phi^(k-1) nu(k-1), so the
/// injected noise telescopes: sum_{m<k} w(m) = phi^(k-1) nu(k-1).
/// Draw order: step-major, agent-minor, from one GaussianStream(seed).
inline ExecutionTrace run_m1(const WeightedDigraph& g, ProtocolSpec spec) {
  detail::require(spec.algorithm == Algorithm::M1, "run_m1: spec is for " + to_string(spec.algorithm));
  spec = validated(g, std::move(spec));
  const auto nb = detail::neighborhoods(g);
  auto t = detail::start_trace(g, spec);
  const auto& noise = *spec.noise;
  const auto n = static_cast<Eigen::Index>(g.size());
  t.noise_draws = Matrix::Zero(t.x.rows(), n);
  GaussianStream gauss(noise.seed);

  Vector x = spec.x0;
  Vector masked(n), next(n);
  for (std::size_t k = 0;; ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < n; ++i) t.noise_draws(row, i) = gauss.next(noise.sigma);
    if (k == 0) {
      t.w.row(0) = t.noise_draws.row(0);
    } else {
      const double now = std::pow(noise.phi, static_cast<double>(k));
      const double before = std::pow(noise.phi, static_cast<double>(k - 1));
      t.w.row(row) = now * t.noise_draws.row(row) - before * t.noise_draws.row(row - 1);
    }
    t.x.row(row) = x.transpose();
    masked = x + t.w.row(row).transpose();
    detail::record_sent(t, k, masked, t.sent_x);
    if (k == spec.horizon) break;
    for (Node i = 0; i < g.size(); ++i)
      next(static_cast<Eigen::Index>(i)) =
          masked(static_cast<Eigen::Index>(i)) - spec.delta * detail::disagreement(nb, masked, i);
    x.swap(next);
  }
  return t;
}

/// Dispatches on spec.algorithm.
inline ExecutionTrace run_protocol(const WeightedDigraph& g, ProtocolSpec spec) {
  switch (spec.algorithm) {
    case Algorithm::Alg1: return run_alg1(g, std::move(spec));
    case Algorithm::Alg2: return run_alg2(g, std::move(spec));
    case Algorithm::Alg3: return run_alg3(g, std::move(spec));
    case Algorithm::Alg2Perturbed: return run_alg2_perturbed(g, std::move(spec));
    case Algorithm::M1: return run_m1(g, std::move(spec));
  }
  throw PreconditionError("unknown algorithm");
}

}  // namespace privcon
