#pragma once

// Test-only oracles. Nothing here calls into the engines it is used to check
// unless stated; each routine recomputes its quantity by an independent route.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "privcon/graph.hpp"

namespace oracle {

using privcon::Edge;
using privcon::Matrix;
using privcon::Node;
using privcon::Vector;
using privcon::WeightedDigraph;
using cplx = std::complex<long double>;

/// Characteristic polynomial det(lambda I - M) by Faddeev-LeVerrier.
/// Returns coefficients c[0..n] with c[n] = 1 (c[k] multiplies lambda^k).
inline std::vector<long double> characteristic_polynomial(const Matrix& m) {
  const auto n = static_cast<std::size_t>(m.rows());
  using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatL a = m.cast<long double>();
  std::vector<long double> c(n + 1, 0.0L);
  c[n] = 1.0L;
  MatL mk = MatL::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k <= n; ++k) {
    mk = a * mk + c[n - k + 1] * MatL::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    c[n - k] = -(a * mk).trace() / static_cast<long double>(k);
  }
  return c;
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
inline std::vector<std::complex<double>> polynomial_roots(const std::vector<long double>& c) {
  const std::size_t n = c.size() - 1;
  auto eval = [&](cplx z) {
    cplx acc = 0.0L;
    for (std::size_t k = n + 1; k-- > 0;) acc = acc * z + c[k];
    return acc;
  };
  long double radius = 1.0L;
  for (std::size_t k = 0; k < n; ++k) radius = std::max(radius, 1.0L + std::abs(c[k]));
  std::vector<cplx> z(n);
  const cplx seed(0.4L, 0.9L);
  for (std::size_t k = 0; k < n; ++k) z[k] = std::pow(seed, static_cast<long double>(k)) * (radius / 2);
  for (int it = 0; it < 5000; ++it) {
    long double change = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      cplx denom = 1.0L;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) denom *= (z[i] - z[j]);
      const cplx step = eval(z[i]) / denom;
      z[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-18L) break;
  }
  std::vector<std::complex<double>> out;
  for (const auto& r : z) out.emplace_back(static_cast<double>(r.real()), static_cast<double>(r.imag()));
  return out;
}

/// Greedy matching distance between two multisets of complex numbers.
/// Monic coefficients (ascending) of prod (z - root).
inline std::vector<std::complex<long double>> polynomial_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<long double>> c{1.0L};
  for (const auto& r : roots) {
    std::vector<std::complex<long double>> next(c.size() + 1, 0.0L);
    for (std::size_t k = 0; k < c.size(); ++k) {
      next[k + 1] += c[k];
      next[k] -= c[k] * std::complex<long double>(r);
    }
    c = std::move(next);
  }
  return c;
}

inline double multiset_distance(std::vector<std::complex<double>> a, std::vector<std::complex<double>> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (const auto& x : a) {
    auto it = std::min_element(b.begin(), b.end(), [&](const auto& p, const auto& q) { return std::abs(p - x) < std::abs(q - x); });
    worst = std::max(worst, std::abs(*it - x));
    b.erase(it);
  }
  return worst;
}

/// Strong connectivity by transitive closure (Warshall).
inline bool strongly_connected_closure(const WeightedDigraph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (Node i = 0; i < n; ++i) {
    reach[i][i] = true;
    for (Node j = 0; j < n; ++j)
      if (g.weight(i, j) > 0) reach[i][j] = true;
  }
  for (Node k = 0; k < n; ++k)
    for (Node i = 0; i < n; ++i)
      for (Node j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  for (Node i = 0; i < n; ++i)
    for (Node j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

/// Strongly connected, weight-balanced digraph: a Hamiltonian cycle plus
/// `extra` random cycles, each with one weight (unit, or uniform in [0.5, 2]).
/// With unit weights, cycles reusing an existing edge are skipped.
inline WeightedDigraph random_balanced_digraph(std::mt19937_64& rng, std::size_t n, std::size_t extra, bool unit) {
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::uniform_real_distribution<double> wdist(0.5, 2.0);
  auto add_cycle = [&](const std::vector<Node>& cyc, double w) {
    if (unit) {
      for (std::size_t k = 0; k < cyc.size(); ++k)
        if (a(static_cast<Eigen::Index>(cyc[k]), static_cast<Eigen::Index>(cyc[(k + 1) % cyc.size()])) != 0.0) return;
    }
    for (std::size_t k = 0; k < cyc.size(); ++k)
      a(static_cast<Eigen::Index>(cyc[k]), static_cast<Eigen::Index>(cyc[(k + 1) % cyc.size()])) += w;
  };
  std::vector<Node> perm(n);
  for (Node i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  add_cycle(perm, unit ? 1.0 : wdist(rng));
  std::uniform_int_distribution<std::size_t> len(2, n);
  for (std::size_t c = 0; c < extra; ++c) {
    std::shuffle(perm.begin(), perm.end(), rng);
    add_cycle(std::vector<Node>(perm.begin(), perm.begin() + static_cast<long>(len(rng))), unit ? 1.0 : wdist(rng));
  }
  std::vector<Edge> edges;
  for (Node i = 0; i < n; ++i)
    for (Node j = 0; j < n; ++j)
      if (a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0)
        edges.push_back({i, j, a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  return WeightedDigraph::from_edges(n, edges);
}

/// Connected undirected graph: random spanning tree plus extra edges.
inline WeightedDigraph random_undirected(std::mt19937_64& rng, std::size_t n, std::size_t extra, bool unit) {
  std::uniform_real_distribution<double> wdist(0.5, 2.0);
  Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Node i = 1; i < n; ++i) {
    std::uniform_int_distribution<Node> parent(0, i - 1);
    const Node p = parent(rng);
    const double w = unit ? 1.0 : wdist(rng);
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = w;
    a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(i)) = w;
  }
  std::uniform_int_distribution<Node> pick(0, n - 1);
  for (std::size_t e = 0; e < extra; ++e) {
    const Node i = pick(rng), j = pick(rng);
    if (i == j || a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) continue;
    const double w = unit ? 1.0 : wdist(rng);
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w;
    a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = w;
  }
  std::vector<Edge> edges;
  for (Node i = 0; i < n; ++i)
    for (Node j = 0; j < n; ++j)
      if (a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0)
        edges.push_back({i, j, a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  return WeightedDigraph::from_edges(n, edges);
}

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = d(rng);
  return v;
}

/// Alg2 by whole-matrix iteration (independent of the per-agent engine loop):
/// v+ = v + d L x, x+ = x + d(-(x - r) - L x - v). Returns x(0..K) as rows.
struct MatrixRun {
  Matrix x;
  Matrix v;
};
inline MatrixRun alg2_matrix_iteration(const WeightedDigraph& g, const Vector& r, const Vector& x0, double d,
                                       std::size_t horizon) {
  const Matrix l = Matrix(g.adjacency().rowwise().sum().asDiagonal()) - g.adjacency();
  MatrixRun out{Matrix(horizon + 1, x0.size()), Matrix(horizon + 1, x0.size())};
  Vector x = x0, v = Vector::Zero(x0.size());
  for (std::size_t k = 0; k <= horizon; ++k) {
    out.x.row(static_cast<Eigen::Index>(k)) = x.transpose();
    out.v.row(static_cast<Eigen::Index>(k)) = v.transpose();
    const Vector lx = l * x;
    const Vector xn = x + d * (-(x - r) - lx - v);
    v = v + d * lx;
    x = xn;
  }
  return out;
}

/// Adversary observation vector of an Alg2 matrix run: own x, own v, and x of
/// every node it hears, stacked over all steps.
inline Vector observation(const WeightedDigraph& g, Node adversary, const MatrixRun& run) {
  std::vector<double> obs;
  for (Eigen::Index k = 0; k < run.x.rows(); ++k) {
    obs.push_back(run.x(k, static_cast<Eigen::Index>(adversary)));
    obs.push_back(run.v(k, static_cast<Eigen::Index>(adversary)));
    for (Node j = 0; j < g.size(); ++j)
      if (g.weight(adversary, j) > 0) obs.push_back(run.x(k, static_cast<Eigen::Index>(j)));
  }
  return Eigen::Map<Vector>(obs.data(), static_cast<Eigen::Index>(obs.size()));
}

/// Observability arbiter: the adversary's data is linear in the unknowns
/// (r_j, x0_j for j != adversary). The target's reference is determined by the
/// data iff its unit functional lies in the row space of that linear map.
inline bool reference_is_determined(const WeightedDigraph& g, Node adversary, Node target, double d) {
  const std::size_t n = g.size();
  const std::size_t horizon = 4 * n;
  const Vector zero = Vector::Zero(static_cast<Eigen::Index>(n));
  const Vector base = observation(g, adversary, alg2_matrix_iteration(g, zero, zero, d, horizon));
  std::vector<Vector> cols;
  std::vector<bool> is_target;
  for (Node j = 0; j < n; ++j) {
    if (j == adversary) continue;
    for (int kind = 0; kind < 2; ++kind) {
      Vector r = zero, x0 = zero;
      (kind == 0 ? r : x0)(static_cast<Eigen::Index>(j)) = 1.0;
      cols.push_back(observation(g, adversary, alg2_matrix_iteration(g, r, x0, d, horizon)) - base);
      is_target.push_back(kind == 0 && j == target);
    }
  }
  Matrix o(base.size(), static_cast<Eigen::Index>(cols.size()));
  Vector e = Vector::Zero(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    o.col(static_cast<Eigen::Index>(c)) = cols[c];
    if (is_target[c]) e(static_cast<Eigen::Index>(c)) = 1.0;
  }
  // Solve o^T y = e in the least-squares sense; zero residual <=> e in row space.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(o.transpose());
  const Vector y = cod.solve(e);
  return (o.transpose() * y - e).norm() < 1e-6;
}

/// Brute-force witness search: tries the alternative-execution construction
/// with every node other than the adversary as witness (no visibility filter)
/// and reports whether one leaves the adversary's data unchanged while moving
/// the target's reference.
inline bool construction_succeeds(const WeightedDigraph& g, Node adversary, Node target, double d, double e,
                                  const Vector& r, std::size_t horizon) {
  const auto run1 = alg2_matrix_iteration(g, r, r, d, horizon);
  const Vector obs1 = observation(g, adversary, run1);
  for (Node w = 0; w < g.size(); ++w) {
    if (w == adversary) continue;
    Vector r2 = r, x2 = r;
    double dout = 0.0;
    for (Node j = 0; j < g.size(); ++j) dout += g.weight(w, j);
    r2(static_cast<Eigen::Index>(w)) -= dout * e;
    for (Node i = 0; i < g.size(); ++i) r2(static_cast<Eigen::Index>(i)) += g.weight(i, w) * e;
    x2(static_cast<Eigen::Index>(w)) -= e;
    const Vector obs2 = observation(g, adversary, alg2_matrix_iteration(g, r2, x2, d, horizon));
    const double dev = (obs1 - obs2).cwiseAbs().maxCoeff();
    const double moved = std::abs(r2(static_cast<Eigen::Index>(target)) - r(static_cast<Eigen::Index>(target)));
    if (dev <= 1e-9 * std::max(1.0, std::abs(e)) && moved > 1e-6 * std::abs(e)) return true;
  }
  return false;
}

/// Raw one-step recovery from whatever the adversary holds; nullopt when a
/// needed signal (target or one of its out-neighbors) is not available.
inline std::optional<double> raw_recovery(const WeightedDigraph& g, Node adversary, Node target, const MatrixRun& run,
                                          double d) {
  auto heard = [&](Node j) { return j == adversary || g.weight(adversary, j) > 0; };
  if (!heard(target)) return std::nullopt;
  for (Node j = 0; j < g.size(); ++j)
    if (g.weight(target, j) > 0 && !heard(j)) return std::nullopt;
  const auto t = static_cast<Eigen::Index>(target);
  double lx = 0.0;
  for (Node j = 0; j < g.size(); ++j) lx += g.weight(target, j) * (run.x(0, t) - run.x(0, static_cast<Eigen::Index>(j)));
  return (run.x(1, t) - run.x(0, t)) / d + run.x(0, t) + lx;
}

}  // namespace oracle
