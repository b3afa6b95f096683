#ifndef KCODE_CODERS_HPP
#define KCODE_CODERS_HPP

#include "kcode/kernels.hpp"
#include "kcode/numerics.hpp"

namespace kcode {

enum class CodeConstraint { none, one_hot, simplex, sum_to_one };

enum class Scheme { kbow_hard, kbow_soft, ksc, kllc_exact, kllc_approx };

CodeConstraint constraint_for(Scheme scheme);
const char* scheme_name(Scheme scheme);
Scheme scheme_from_name(const std::string& name);

// N x M matrix of codes, one column per sample, tagged with the constraint
// set its columns satisfy.
struct CodeMatrix {
  Matrix y;
  CodeConstraint constraint = CodeConstraint::none;
};

// One dictionary/query pairing plus the coding hyperparameters.
//   gamma   prior weight (l1 for sparse coding, locality for exact LLC)
//   sigma   bandwidth (soft bag of words, exact-LLC locality)
//   nB      local dictionary size for approximate LLC
//   epsLLC  relative ridge for the LLC systems (times trace/N)
struct CodingProblem {
  const GramBundle& gram;
  double gamma = 0.0;
  double sigma = 1.0;
  Index nB = 1;
  double epsLLC = 1e-6;
};

// Squared RKHS distance between query q and atom j, clamped at zero:
// k(x,x) - 2 k(x,d_j) + k(d_j,d_j).
double rkhs_distance_sq(const GramBundle& gram, Index query, Index atom);

// One-hot code at the RKHS-nearest atom; ties go to the smallest index.
Vector encode_kbow_hard(const CodingProblem& p, Index query);

// Soft assignment y_i proportional to exp(-sigma d_i^2), normalized to sum
// one; the largest exponent is subtracted before exponentiation.
Vector encode_kbow_soft(const CodingProblem& p, Index query);

// Kernel sparse coding: lasso over the PSD-clipped Gram. factor must come
// from psd_factor(gram.kDD).
Vector encode_ksc(const CodingProblem& p, const PsdFactor& factor,
                  Index query);

// Exact kernel LLC: minimizes the reconstruction plus gamma |E y|^2 subject
// to sum(y) = 1, with E_ii = exp(sigma (d_i - min_j d_j)). Solved through
// the equality-constrained KKT system with relative ridge epsLLC.
Vector encode_kllc_exact(const CodingProblem& p, Index query);

// Approximate kernel LLC: restricts support to the nB nearest atoms, solves
// (C + epsLLC tr(C)/nB I) y' = 1 over the local Gram and normalizes by the
// signed sum. Entries off the support are zero.
Vector encode_kllc_approx(const CodingProblem& p, Index query);

// Columnwise application of one scheme to every query in the bundle.
CodeMatrix encode_batch(const CodingProblem& p, Scheme scheme,
                        int threads = 1);

// Augmented variants used by supervised coding: the quadratic term gains
// qAdd and the linear term gains bAdd (already scaled by eta).
Vector encode_ksc_augmented(const CodingProblem& p, const PsdFactor& factor,
                            Index query, const Matrix& qAdd,
                            const Vector& bAdd);
Vector encode_kllc_exact_augmented(const CodingProblem& p, Index query,
                                   const Matrix& qAdd, const Vector& bAdd);
Vector encode_kllc_approx_augmented(const CodingProblem& p, Index query,
                                    const Matrix& qAdd, const Vector& bAdd);

// Value of the scheme's per-sample objective at code y: reconstruction in
// RKHS plus the scheme's prior (gamma |y|_1 for kSC; gamma |E y|^2 with the
// query's locality weights for exact LLC; zero otherwise).
double coding_objective(const CodingProblem& p, Scheme scheme, Index query,
                        const Vector& y);

}  // namespace kcode

#endif
