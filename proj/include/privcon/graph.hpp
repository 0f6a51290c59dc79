#pragma once

// Weighted digraphs, Laplacians, spectra and admissible stepsizes.
//
// Convention: an edge i -> j with weight a_ij > 0 means agent i receives
// information from agent j. j is then an out-neighbor of i and i is an
// in-neighbor of j. All indices in this API are 0-based; the file formats and
// the CLI use 1-based node labels.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace privcon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Node = std::size_t;

/// Raised when an input violates a documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for malformed graph descriptions (build_digraph / graph files).
class GraphError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// Raised when an iterative numerical routine does not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  Node from = 0;
  Node to = 0;
  double weight = 0.0;
};

inline constexpr double kDefaultBalanceTolerance = 1e-9;
inline constexpr std::size_t kMaxDenseSpectrumSize = 128;

class WeightedDigraph {
 public:
  WeightedDigraph() = default;

  /// Validated construction from an edge list (0-based indices).
  static WeightedDigraph from_edges(std::size_t n, std::span<const Edge> edges) {
    if (n == 0) throw GraphError("graph must have at least one node");
    Matrix adj = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Edge& edge = edges[e];
      std::ostringstream where;
      where << "edge #" << (e + 1) << " (" << (edge.from + 1) << " -> " << (edge.to + 1) << ")";
      if (edge.from >= n || edge.to >= n) {
        throw GraphError(where.str() + ": node index out of range [1.." + std::to_string(n) + "]");
      }
      if (edge.from == edge.to) throw GraphError(where.str() + ": self-loop");
      if (!(edge.weight > 0.0) || !std::isfinite(edge.weight)) {
        throw GraphError(where.str() + ": weight must be positive and finite");
      }
      auto& slot = adj(static_cast<Eigen::Index>(edge.from), static_cast<Eigen::Index>(edge.to));
      if (slot != 0.0) throw GraphError(where.str() + ": duplicate edge");
      slot = edge.weight;
    }
    WeightedDigraph g;
    g.adj_ = std::move(adj);
    return g;
  }

  /// Convenience: every pair {i, j} becomes the two edges i -> j and j -> i.
  static WeightedDigraph undirected(std::size_t n, std::span<const Edge> pairs) {
    std::vector<Edge> edges;
    edges.reserve(2 * pairs.size());
    for (const auto& p : pairs) {
      edges.push_back(p);
      edges.push_back({p.to, p.from, p.weight});
    }
    return from_edges(n, edges);
  }

  std::size_t size() const { return static_cast<std::size_t>(adj_.rows()); }
  const Matrix& adjacency() const { return adj_; }
  double weight(Node i, Node j) const { return adj_(idx(i), idx(j)); }
  bool has_edge(Node i, Node j) const { return weight(i, j) > 0.0; }

  double out_degree(Node i) const {
    double s = 0.0;
    for (Node j = 0; j < size(); ++j) s += weight(i, j);
    return s;
  }
  double in_degree(Node i) const {
    double s = 0.0;
    for (Node j = 0; j < size(); ++j) s += weight(j, i);
    return s;
  }

  /// Nodes j with a_ij > 0, ascending.
  std::vector<Node> out_neighbors(Node i) const {
    std::vector<Node> out;
    for (Node j = 0; j < size(); ++j)
      if (has_edge(i, j)) out.push_back(j);
    return out;
  }
  /// Nodes j with a_ji > 0, ascending.
  std::vector<Node> in_neighbors(Node i) const {
    std::vector<Node> in;
    for (Node j = 0; j < size(); ++j)
      if (has_edge(j, i)) in.push_back(j);
    return in;
  }

  /// Row-major edge list, i.e. sorted by (from, to).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (Node i = 0; i < size(); ++i)
      for (Node j = 0; j < size(); ++j)
        if (has_edge(i, j)) out.push_back({i, j, weight(i, j)});
    return out;
  }

  bool is_undirected() const { return adj_ == adj_.transpose(); }

  WeightedDigraph scaled(double c) const {
    if (!(c > 0.0)) throw GraphError("scale factor must be positive");
    WeightedDigraph g;
    g.adj_ = adj_ * c;
    return g;
  }

  /// Subgraph induced by `keep` (relabelled 0..keep.size()-1 in the given order).
  WeightedDigraph induced(std::span<const Node> keep) const {
    const auto m = static_cast<Eigen::Index>(keep.size());
    if (m == 0) throw GraphError("induced subgraph must keep at least one node");
    WeightedDigraph g;
    g.adj_ = Matrix::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) g.adj_(a, b) = weight(keep[a], keep[b]);
    return g;
  }

  bool operator==(const WeightedDigraph& other) const {
    return adj_.rows() == other.adj_.rows() && adj_ == other.adj_;
  }

 private:
  Eigen::Index idx(Node i) const {
    if (i >= size()) throw std::out_of_range("node index out of range");
    return static_cast<Eigen::Index>(i);
  }

  Matrix adj_;
};

/// build_digraph with 0-based edge endpoints.
inline WeightedDigraph build_digraph(std::size_t n, std::span<const Edge> edges) {
  return WeightedDigraph::from_edges(n, edges);
}

inline bool is_weight_balanced(const WeightedDigraph& g, double tol = kDefaultBalanceTolerance) {
  for (Node i = 0; i < g.size(); ++i)
    if (std::abs(g.out_degree(i) - g.in_degree(i)) > tol) return false;
  return true;
}

namespace detail {
inline std::vector<bool> reachable(const WeightedDigraph& g, Node start, bool reverse) {
  std::vector<bool> seen(g.size(), false);
  std::queue<Node> frontier;
  seen[start] = true;
  frontier.push(start);
  while (!frontier.empty()) {
    const Node u = frontier.front();
    frontier.pop();
    for (Node w = 0; w < g.size(); ++w) {
      const bool edge = reverse ? g.has_edge(w, u) : g.has_edge(u, w);
      if (edge && !seen[w]) {
        seen[w] = true;
        frontier.push(w);
      }
    }
  }
  return seen;
}
}  // namespace detail

/// Forward and backward search from node 0 must both reach every node.
inline bool is_strongly_connected(const WeightedDigraph& g) {
  if (g.size() == 0) return false;
  const auto fwd = detail::reachable(g, 0, false);
  const auto bwd = detail::reachable(g, 0, true);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

/// L = Diag(d_out) - A.
struct Laplacian {
  Matrix matrix;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
};

inline Laplacian laplacian(const WeightedDigraph& g) {
  Laplacian l{-g.adjacency()};
  for (Eigen::Index i = 0; i < l.matrix.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < l.matrix.cols(); ++j)
      if (j != i) row += l.matrix(i, j);
    l.matrix(i, i) = -row;
  }
  return l;
}

struct Spectrum {
  /// Sorted by real part, then imaginary part.
  std::vector<std::complex<double>> eigenvalues;
};

/// Dense nonsymmetric eigenvalues (Hessenberg reduction + shifted QR via Eigen).
inline Spectrum spectrum(const Matrix& m) {
  if (m.rows() != m.cols()) throw PreconditionError("spectrum: matrix must be square");
  if (static_cast<std::size_t>(m.rows()) > kMaxDenseSpectrumSize) {
    throw PreconditionError("spectrum: dense eigen-solver limited to n <= " +
                            std::to_string(kMaxDenseSpectrumSize));
  }
  Eigen::EigenSolver<Matrix> solver;
  solver.setMaxIterations(60 * std::max<Eigen::Index>(1, m.rows()));
  solver.compute(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectrum: QR iteration failed to converge");
  }
  Spectrum s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) s.eigenvalues.push_back(solver.eigenvalues()(i));
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return s;
}

inline Spectrum spectrum(const Laplacian& l) { return spectrum(l.matrix); }

inline double spectral_radius(const Matrix& m) {
  double rho = 0.0;
  for (const auto& ev : spectrum(m).eigenvalues) rho = std::max(rho, std::abs(ev));
  return rho;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  /// Open interval membership.
  bool contains(double x) const { return x > lo && x < hi; }
};

struct StepsizeBound {
  double bound = 0.0;  // min over nonzero eigenvalues of 2 Re(l) / |l|^2
  Interval alg1;       // (0, bound)
  Interval alg2;       // (0, min{2, bound})
};

/// Eigenvalues with modulus below this (scaled by the largest degree) count as zero.
inline double zero_eigenvalue_tolerance(const WeightedDigraph& g) {
  double scale = 1.0;
  for (Node i = 0; i < g.size(); ++i) scale = std::max(scale, g.out_degree(i));
  return 1e-8 * scale;
}

inline StepsizeBound stepsize_bound(const WeightedDigraph& g,
                                    double balance_tol = kDefaultBalanceTolerance) {
  if (g.size() < 2) throw PreconditionError("stepsize_bound: need at least two agents");
  if (!is_strongly_connected(g)) throw PreconditionError("stepsize_bound: graph is not strongly connected");
  if (!is_weight_balanced(g, balance_tol)) throw PreconditionError("stepsize_bound: graph is not weight-balanced");

  const auto spec = spectrum(laplacian(g));
  const double zero_tol = zero_eigenvalue_tolerance(g);
  std::size_t zeros = 0;
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& ev : spec.eigenvalues) {
    if (std::abs(ev) < zero_tol) {
      ++zeros;
      continue;
    }
    bound = std::min(bound, 2.0 * ev.real() / std::norm(ev));
  }
  if (zeros != 1) {
    throw PreconditionError("stepsize_bound: zero eigenvalue has multiplicity " + std::to_string(zeros));
  }
  return {bound, {0.0, bound}, {0.0, std::min(2.0, bound)}};
}

/// FNV-1a over the canonical (1-based) edge text; used to tag run manifests.
inline std::uint64_t graph_hash(const WeightedDigraph& g) {
  std::ostringstream os;
  os.precision(17);
  os << g.size();
  for (const auto& e : g.edges()) os << ';' << (e.from + 1) << ',' << (e.to + 1) << ',' << e.weight;
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace privcon
