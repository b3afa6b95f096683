#include "kcode/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kcode {

namespace {

void require_symmetric(const Matrix& m, double tol, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw NumericError(std::string(what) + ": matrix is not symmetric");
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

}  // namespace

Matrix PsdFactor::reconstruct() const {
  const Index n = u.rows();
  Matrix k(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      double v = 0.0;
      for (Index r = 0; r < sigma.size(); ++r)
        v += sigma[r] * u(i, r) * u(j, r);
      k(i, j) = v;
      k(j, i) = v;
    }
  return k;
}

Matrix PsdFactor::sqrt_factor() const {
  return sigma.cwiseSqrt().asDiagonal() * u.transpose();
}

PsdFactor psd_factor(const Matrix& k, double tau) {
  require_symmetric(k, 1e-10, "psd_factor");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(k);
  if (eig.info() != Eigen::Success)
    throw NumericError("psd_factor: eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();  // ascending
  const double lambda_max = ev[ev.size() - 1];
  const double cut = std::max(0.0, tau * lambda_max);
  Index r = 0;
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > cut) ++r;
  if (r == 0)
    throw NumericError("psd_factor: all eigenvalues below threshold "
                       "(degenerate Gram)");
  PsdFactor f;
  f.tau = tau;
  f.u.resize(k.rows(), r);
  f.sigma.resize(r);
  // Reorder retained eigenpairs to descending.
  for (Index i = 0; i < r; ++i) {
    const Index src = ev.size() - 1 - i;
    f.sigma[i] = ev[src];
    f.u.col(i) = eig.eigenvectors().col(src);
  }
  return f;
}

Vector lasso_solve(const Matrix& q, const Vector& b, double gamma,
                   LassoTrace* trace) {
  require_symmetric(q, 1e-8, "lasso_solve");
  if (q.rows() != b.size())
    throw DimensionError("lasso_solve: Q and b dimensions differ");
  if (gamma < 0.0) throw NumericError("lasso_solve: gamma must be >= 0");

  const Index n = b.size();
  const double half_gamma = 0.5 * gamma;
  Vector y = Vector::Zero(n);
  Vector qy = Vector::Zero(n);  // Q y, maintained incrementally
  if (trace) {
    trace->objective.clear();
    trace->sweeps = 0;
  }

  constexpr int kMaxSweeps = 10000;
  constexpr double kCoordTol = 1e-10;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double qjj = q(j, j);
      // c_j = b_j - sum_{k != j} Q_jk y_k
      const double c = b[j] - (qy[j] - qjj * y[j]);
      double ynew;
      if (qjj > 0.0) {
        ynew = soft_threshold(c, half_gamma) / qjj;
      } else {
        // Zero or negative curvature: only y_j = 0 can be optimal, and only
        // when the subgradient condition allows it.
        if (std::abs(c) > half_gamma + 1e-12 * std::max(1.0, std::abs(c)) ||
            qjj < -1e-12 * std::max(1.0, q.cwiseAbs().maxCoeff()))
          throw NumericError(
              "lasso_solve: nonpositive curvature on coordinate " +
              std::to_string(j) + " (Q not PSD)");
        ynew = 0.0;
      }
      const double delta = ynew - y[j];
      if (delta != 0.0) {
        qy += q.col(j) * delta;
        y[j] = ynew;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (trace)
      trace->objective.push_back(y.dot(qy) - 2.0 * b.dot(y) +
                                 gamma * y.lpNorm<1>());
    if (max_change < kCoordTol) {
      ++sweep;
      break;
    }
  }
  if (trace) trace->sweeps = sweep;
  return y;
}

Matrix ridge_solve(const Matrix& g, const Matrix& b, double eps) {
  require_symmetric(g, 1e-10, "ridge_solve");
  if (g.rows() != b.rows())
    throw DimensionError("ridge_solve: right-hand side rows differ from G");
  if (eps < 0.0) throw NumericError("ridge_solve: eps must be >= 0");

  Matrix a = g;
  a.diagonal().array() += eps;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("ridge_solve: factorization failed");
  // Pivot-ratio condition estimate; the negated comparison also rejects
  // NaN pivots. (LDLT::rcond() reports 1 for exactly singular diagonals.)
  const Vector pivots = ldlt.vectorD().cwiseAbs();
  if (!(pivots.minCoeff() >= 1e-14 * pivots.maxCoeff()))
    throw NumericError("ridge_solve: singular system after ridge "
                       "(condition estimate beyond 1e14)");

  Matrix z = ldlt.solve(b);
  const double bmax = b.cwiseAbs().maxCoeff();
  if (bmax == 0.0) return Matrix::Zero(b.rows(), b.cols());
  // Iterative refinement until the max-norm residual is comfortably inside
  // the contract bound.
  for (int it = 0; it < 5; ++it) {
    Matrix r = b - a * z;
    if (r.cwiseAbs().maxCoeff() <= 1e-9 * bmax) break;
    z += ldlt.solve(r);
  }
  if ((b - a * z).cwiseAbs().maxCoeff() > 1e-8 * bmax)
    throw NumericError("ridge_solve: residual check failed "
                       "(system too ill-conditioned)");
  return z;
}

double default_ridge_eps(const Matrix& g) {
  if (g.rows() == 0) return 0.0;
  return 1e-8 * g.trace() / static_cast<double>(g.rows());
}

Matrix pseudo_inverse(const Matrix& y, double eps) {
  const Index n = y.rows();
  Matrix yyt(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = y.row(i).dot(y.row(j));
      yyt(i, j) = v;
      yyt(j, i) = v;
    }
  Matrix z = ridge_solve(yyt, y, eps);  // (YY' + eps I)^{-1} Y, N x M
  return z.transpose();
}

}  // namespace kcode
