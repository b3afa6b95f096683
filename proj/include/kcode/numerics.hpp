#ifndef KCODE_NUMERICS_HPP
#define KCODE_NUMERICS_HPP

#include "kcode/common.hpp"

#include <vector>

namespace kcode {

// Truncated eigendecomposition of a symmetric matrix. Retains eigenpairs
// with eigenvalue >= tau * lambda_max; negative eigenvalues (indefinite
// kernels, rounding noise) are discarded, so reconstruct() is PSD.
struct PsdFactor {
  Matrix u;      // N x r, orthonormal columns
  Vector sigma;  // r retained eigenvalues, descending, all > 0
  double tau = 1e-10;

  Index rank() const { return sigma.size(); }
  // U diag(sigma) U', exactly symmetric by construction.
  Matrix reconstruct() const;
  // A = Sigma^{1/2} U'  (r x N), so that A'A = reconstruct().
  Matrix sqrt_factor() const;
};

// Throws NumericError when K is not symmetric within 1e-10 (relative) or
// when every eigenvalue falls below the threshold (degenerate Gram).
PsdFactor psd_factor(const Matrix& k, double tau = 1e-10);

struct LassoTrace {
  std::vector<double> objective;  // value after each sweep
  int sweeps = 0;
};

// Minimizes  y'Qy - 2 b'y + gamma |y|_1  by cyclic coordinate descent with
// soft thresholding, coordinates in ascending order, starting from y = 0.
// Stops when the largest coordinate change in a sweep is < 1e-10, or after
// 10000 sweeps. Throws NumericError when nonpositive curvature is hit on a
// coordinate that requires a nonzero step (Q not PSD).
Vector lasso_solve(const Matrix& q, const Vector& b, double gamma,
                   LassoTrace* trace = nullptr);

// (G + eps I)^{-1} B via LDLT with iterative refinement. Throws
// NumericError when the condition estimate exceeds 1e14 or the residual
// check |(G+eps I)Z - B|_max <= 1e-8 |B|_max fails.
Matrix ridge_solve(const Matrix& g, const Matrix& b, double eps);

// Ridge default used by the learning loops: 1e-8 * trace(G) / N.
double default_ridge_eps(const Matrix& g);

// Ridged Moore-Penrose pseudo-inverse ((Y Y' + eps I)^{-1} Y)', shape M x N
// for an N x M input. With eps = 0 and Y of full row rank this is exact.
Matrix pseudo_inverse(const Matrix& y, double eps);

}  // namespace kcode

#endif
