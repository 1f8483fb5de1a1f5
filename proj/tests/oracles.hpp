// Test-only oracles, independent of the library's implementation paths.
#pragma once

#include "hcast/types.hpp"

#include <Eigen/SVD>

#include <random>
#include <vector>

namespace oracles {

using hcast::Index;
using hcast::Matrix;
using hcast::Scalar;
using hcast::Vector;

// Least squares through the SVD pseudo-inverse (the library solves via QR).
inline Vector pinv_solve(const Matrix& X, const Vector& y, Scalar rcond = 1e-12) {
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Scalar cutoff = rcond * s.maxCoeff();
  Vector sinv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) sinv[i] = 1.0 / s[i];
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose() * y;
}

// Direct scalar low-pass recursion with first-finite-value initialization.
inline std::vector<Scalar> lp_recursion(const std::vector<Scalar>& u, Scalar a1) {
  std::vector<Scalar> out(u.size(), hcast::kMissing);
  Scalar mem = hcast::kMissing;
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (hcast::is_missing(u[t])) continue;
    mem = hcast::is_missing(mem) ? u[t] : a1 * mem + (1.0 - a1) * u[t];
    out[t] = mem;
  }
  return out;
}

// Scalar RLS (p = 1) in the Kalman-gain form, stepped directly.
struct ScalarRls {
  Scalar P = 1e4;
  Scalar beta = 0.0;
  void step(Scalar x, Scalar y, Scalar lambda) {
    const Scalar K = P * x / (lambda + x * P * x);
    beta += K * (y - x * beta);
    P = (P - K * x * P) / lambda;
  }
};

// Naive recursive Cox-de Boor definition, one basis function at a time.
inline Scalar cox_de_boor(const Vector& T, Index i, int degree, Scalar x) {
  if (degree == 0) return (x >= T[i] && x < T[i + 1]) ? 1.0 : 0.0;
  Scalar left = 0.0, right = 0.0;
  const Scalar dl = T[i + degree] - T[i];
  if (dl > 0) left = (x - T[i]) / dl * cox_de_boor(T, i, degree - 1, x);
  const Scalar dr = T[i + degree + 1] - T[i + 1];
  if (dr > 0) right = (T[i + degree + 1] - x) / dr * cox_de_boor(T, i + 1, degree - 1, x);
  return left + right;
}

// All basis values at x with the half-open fix at the right boundary.
inline Vector cox_de_boor_all(const Vector& T, int degree, Scalar x) {
  const Index nb = T.size() - degree - 1;
  const Scalar hi = T[T.size() - 1];
  Vector out(nb);
  if (x >= hi) {
    out.setZero();
    // at the right boundary the last basis function carries the unit
    out[nb - 1] = 1.0;
    return out;
  }
  for (Index i = 0; i < nb; ++i) out[i] = cox_de_boor(T, i, degree, x);
  return out;
}

// Lag-1 Yule-Walker estimate of an AR(1) coefficient.
inline Scalar yule_walker_phi(const std::vector<Scalar>& x) {
  Scalar num = 0, den = 0;
  for (std::size_t t = 0; t + 1 < x.size(); ++t) {
    num += x[t] * x[t + 1];
    den += x[t] * x[t];
  }
  return num / den;
}

inline std::mt19937 rng(unsigned seed) { return std::mt19937(seed); }

}  // namespace oracles
