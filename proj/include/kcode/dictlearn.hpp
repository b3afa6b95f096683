#ifndef KCODE_DICTLEARN_HPP
#define KCODE_DICTLEARN_HPP

#include "kcode/coders.hpp"

#include <optional>
#include <vector>

namespace kcode {

// Dictionary represented either as explicit atoms or, via the Representer
// theorem, as a coefficient matrix A (M x N) over a training set X so that
// the atoms live at Phi(X) A in RKHS.
struct DualDictionary {
  enum class Mode { explicit_atoms, dual };

  Mode mode = Mode::explicit_atoms;
  SampleSet atoms;        // explicit mode
  Matrix coeffs;          // dual mode, M x N
  SampleSet trainingSet;  // dual mode basis X
  std::optional<std::vector<int>> atomLabels;

  static DualDictionary Explicit(SampleSet atoms);
  static DualDictionary Dual(SampleSet x, Matrix coeffs);

  Index atom_count() const;
  // Gram bundle of this dictionary against the given queries.
  GramBundle bundle_for(const KernelSpec& spec,
                        const SampleSet& queries) const;
};

struct FitReport {
  // Objective recorded after every half-step (post-encode, post-update).
  std::vector<double> objectiveTrace;
  int iterations = 0;
  bool converged = false;
  // Atoms whose code row was entirely zero at the final encode.
  std::vector<Index> deadAtoms;
};

struct FitParams {
  double gamma = 0.0;
  double sigma = 1.0;
  Index nB = 1;
  double epsLLC = 1e-6;
  int maxIter = 20;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FitResult {
  DualDictionary dict;
  CodeMatrix codes;
  FitReport report;
};

// Dual-mode dictionary selecting N distinct training columns, sampled
// without replacement; deterministic per seed.
DualDictionary init_dictionary(const SampleSet& x, Index n,
                               std::uint64_t seed);

// Closed-form dictionary update from codes Y (N x M): the ridged
// pseudo-inverse, returned M x N. The ridge defaults to zero and falls back
// to 1e-8 trace(YY')/N when the condition estimate exceeds 1e12.
Matrix update_dictionary(const Matrix& y);

// Same computation; Y columns are expected to be zero outside each sample's
// local support (the approximate-LLC encoder guarantees this).
Matrix update_dictionary_llc(const Matrix& y);

// Alternates encoding and the dictionary update until the relative
// objective decrease drops below tol or maxIter iterations. Soft bag of
// words, whose codes are determined by the dictionary, instead updates A by
// backtracking gradient descent on the full objective. Throws NumericError
// if the objective increases beyond a 1e-10 relative slack.
FitResult fit_alternating(const SampleSet& x, const KernelSpec& spec,
                          Scheme scheme, const FitParams& params,
                          Index nAtoms);

namespace detail {
// Soft-BoW fit objective R(A) with the codes substituted as a function of
// the dictionary; exposed for gradient verification.
double softbow_objective(const Matrix& kxx, const Matrix& a, double sigma,
                         Matrix* yOut, Matrix* gradOut);
}  // namespace detail

}  // namespace kcode

#endif
