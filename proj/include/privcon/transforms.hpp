#pragma once

// Change of variables that splits consensus dynamics into the agreement
// direction 1/sqrt(n) and its orthogonal complement. Used as an independent
// oracle for the direct engines.

#include <cmath>
#include <utility>

#include "privcon/graph.hpp"

namespace privcon {

struct OrthonormalSplit {
  Vector r_vec;  // (1/sqrt n) 1
  Matrix R_mat;  // n x (n-1), orthonormal columns orthogonal to r_vec

  std::size_t size() const { return static_cast<std::size_t>(r_vec.size()); }
};

/// Householder reflector H with H e1 = r_vec; its remaining columns form R_mat.
inline OrthonormalSplit orthonormal_complement(std::size_t n) {
  if (n < 2) throw PreconditionError("orthonormal_complement: n must be at least 2");
  const auto m = static_cast<Eigen::Index>(n);
  const Vector r = Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector u = -r;
  u(0) += 1.0;  // u = e1 - r
  const Matrix h = Matrix::Identity(m, m) - 2.0 * u * u.transpose() / u.squaredNorm();
  return {r, h.rightCols(m - 1)};
}

/// L+ = R^T L R; its eigenvalues are the nonzero Laplacian eigenvalues.
inline Matrix reduced_laplacian(const Laplacian& l, const OrthonormalSplit& split) {
  return split.R_mat.transpose() * l.matrix * split.R_mat;
}

struct QPState {
  double q1 = 0.0;
  Vector q2n;
  double p1 = 0.0;
  Vector p2n;
};

inline QPState to_qp(const Vector& v, const Vector& x, const Vector& r, const OrthonormalSplit& split) {
  const double avg = r.mean();
  const Vector v_dev = v - (r.array() - avg).matrix();  // v - Pi r
  const Vector x_dev = (x.array() - avg).matrix();      // x - r_avg 1
  const Vector rt_x = split.R_mat.transpose() * x_dev;
  return {split.r_vec.dot(v_dev), split.R_mat.transpose() * v_dev + rt_x, split.r_vec.dot(x_dev), rt_x};
}

/// Inverse of to_qp: returns (v, x).
inline std::pair<Vector, Vector> from_qp(const QPState& s, const Vector& r, const OrthonormalSplit& split) {
  const double avg = r.mean();
  const Vector x = (split.r_vec * s.p1 + split.R_mat * s.p2n).array() + avg;
  const Vector v = split.r_vec * s.q1 + split.R_mat * (s.q2n - s.p2n) + (r.array() - avg).matrix();
  return {v, x};
}

inline QPState qp_step_alg1(const QPState& s, double delta, const Matrix& l_plus) {
  QPState out = s;
  out.p2n = s.p2n - delta * (l_plus * s.p2n);
  return out;
}

inline QPState qp_step_alg2(const QPState& s, double delta, const Matrix& l_plus) {
  return {s.q1, (1.0 - delta) * s.q2n, -delta * s.q1 + (1.0 - delta) * s.p1,
          -delta * s.q2n + s.p2n - delta * (l_plus * s.p2n)};
}

/// Alg2 with perturbation vector f(k) entering the x update.
inline QPState qp_step_alg2_perturbed(const QPState& s, double delta, const Matrix& l_plus, const Vector& f,
                                      const OrthonormalSplit& split) {
  const Vector rt_f = split.R_mat.transpose() * f;
  return {s.q1, (1.0 - delta) * s.q2n + delta * rt_f,
          -delta * s.q1 + (1.0 - delta) * s.p1 + delta * split.r_vec.dot(f),
          -delta * s.q2n + s.p2n - delta * (l_plus * s.p2n) + delta * rt_f};
}

/// Closed form for the agreement error under perturbation (with q1 = 0):
/// p1(k) = (1-delta)^k p1(0) + delta * sum_{m<k} (1-delta)^(k-1-m) r_vec^T f(m).
/// `f` holds f(m) in row m.
inline double p1_closed_form(double p1_0, double delta, const Matrix& f, std::size_t k,
                             const OrthonormalSplit& split) {
  double acc = std::pow(1.0 - delta, static_cast<double>(k)) * p1_0;
  for (std::size_t m = 0; m < k; ++m)
    acc += delta * std::pow(1.0 - delta, static_cast<double>(k - 1 - m)) *
           split.r_vec.dot(f.row(static_cast<Eigen::Index>(m)).transpose());
  return acc;
}

}  // namespace privcon
