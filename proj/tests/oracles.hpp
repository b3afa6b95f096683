// Test-only reference implementations, kept independent of the library's
// solver paths: brute-force enumeration, explicit-feature solvers, a
// null-space QP method and finite differences.
#ifndef KCODE_TESTS_ORACLES_HPP
#define KCODE_TESTS_ORACLES_HPP

#include "kcode/common.hpp"

#include <cmath>
#include <functional>
#include <limits>

namespace oracles {

using kcode::Index;
using kcode::Matrix;
using kcode::Rng;
using kcode::Vector;

inline Matrix random_matrix(Rng& rng, Index rows, Index cols,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * rng.gaussian();
  return m;
}

inline Vector random_vector(Rng& rng, Index n, double scale = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = scale * rng.gaussian();
  return v;
}

// A'A + ridge I, exactly symmetric.
inline Matrix random_psd(Rng& rng, Index n, double ridge = 0.0) {
  const Matrix a = random_matrix(rng, n + 2, n);
  Matrix q(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = a.col(i).dot(a.col(j));
      q(i, j) = v;
      q(j, i) = v;
    }
  q.diagonal().array() += ridge;
  return q;
}

// Exhaustive sign-pattern minimizer of y'Qy - 2 b'y + gamma |y|_1.
// Each of the 3^n patterns fixes zero coordinates and the signs of the
// rest; sign-consistent stationary points are compared by objective.
inline Vector lasso_enumerate(const Matrix& q, const Vector& b,
                              double gamma) {
  const Index n = b.size();
  const auto objective = [&](const Vector& y) {
    return y.dot(q * y) - 2.0 * b.dot(y) + gamma * y.lpNorm<1>();
  };
  Vector best = Vector::Zero(n);
  double bestObj = objective(best);
  std::vector<int> pattern(static_cast<size_t>(n), 0);
  long total = 1;
  for (Index i = 0; i < n; ++i) total *= 3;
  // Digit 0 maps to sign -1, so the all-negative pattern is code 0; the
  // all-zero pattern (all digits 1) is covered by the y = 0 candidate.
  for (long code = 0; code < total; ++code) {
    long c = code;
    Index active = 0;
    for (Index i = 0; i < n; ++i) {
      pattern[static_cast<size_t>(i)] = static_cast<int>(c % 3) - 1;
      if (pattern[static_cast<size_t>(i)] != 0) ++active;
      c /= 3;
    }
    if (active == 0) continue;
    Matrix qf(active, active);
    Vector rf(active);
    std::vector<Index> map;
    for (Index i = 0; i < n; ++i)
      if (pattern[static_cast<size_t>(i)] != 0) map.push_back(i);
    for (Index r = 0; r < active; ++r) {
      rf[r] = b[map[static_cast<size_t>(r)]] -
              0.5 * gamma *
                  static_cast<double>(
                      pattern[static_cast<size_t>(map[static_cast<size_t>(r)])]);
      for (Index cIdx = 0; cIdx < active; ++cIdx)
        qf(r, cIdx) = q(map[static_cast<size_t>(r)],
                        map[static_cast<size_t>(cIdx)]);
    }
    Eigen::FullPivLU<Matrix> lu(qf);
    if (!lu.isInvertible()) continue;
    const Vector yf = lu.solve(rf);
    bool consistent = true;
    for (Index r = 0; r < active; ++r) {
      const int s =
          pattern[static_cast<size_t>(map[static_cast<size_t>(r)])];
      if (yf[r] * static_cast<double>(s) < 0.0) {
        consistent = false;
        break;
      }
    }
    if (!consistent) continue;
    Vector y = Vector::Zero(n);
    for (Index r = 0; r < active; ++r) y[map[static_cast<size_t>(r)]] = yf[r];
    const double obj = objective(y);
    if (obj < bestObj) {
      bestObj = obj;
      best = y;
    }
  }
  return best;
}

// Shooting algorithm on explicit features: min |x - D y|^2 + gamma |y|_1.
// Maintains the residual vector directly, a different computation path from
// the library's Gram-space loop.
inline Vector lasso_reference_cd(const Matrix& d, const Vector& x,
                                 double gamma, int sweeps = 20000) {
  const Index n = d.cols();
  Vector y = Vector::Zero(n);
  Vector r = x;  // x - D y
  for (int it = 0; it < sweeps; ++it) {
    double maxChange = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double djj = d.col(j).squaredNorm();
      if (djj == 0.0) continue;
      const double rho = d.col(j).dot(r) + djj * y[j];
      double ynew;
      if (rho > 0.5 * gamma)
        ynew = (rho - 0.5 * gamma) / djj;
      else if (rho < -0.5 * gamma)
        ynew = (rho + 0.5 * gamma) / djj;
      else
        ynew = 0.0;
      const double delta = ynew - y[j];
      if (delta != 0.0) {
        r -= d.col(j) * delta;
        y[j] = ynew;
        maxChange = std::max(maxChange, std::abs(delta));
      }
    }
    if (maxChange < 1e-12) break;
  }
  return y;
}

// Null-space method for min y'Py - 2 q'y subject to sum(y) = 1.
inline Vector eq_qp_nullspace(const Matrix& p, const Vector& q) {
  const Index n = q.size();
  const Vector y0 = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::FullPivLU<Matrix> lu(Matrix::Ones(1, n));
  const Matrix z = lu.kernel();  // n x (n-1)
  const Matrix zpz = z.transpose() * p * z;
  const Vector rhs = z.transpose() * (q - p * y0);
  const Vector v = zpz.ldlt().solve(rhs);
  return y0 + z * v;
}

inline double central_difference(const std::function<double(double)>& f,
                                 double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles

#endif
