#ifndef KCODE_KERNELLEARN_HPP
#define KCODE_KERNELLEARN_HPP

#include "kcode/dictlearn.hpp"

namespace kcode {

// Reconstruction-over-discrepancy ratio with fixed codes. Kernel-dependent
// prior terms stay frozen during kernel updates, so the numerator carries
// reconstruction only.
struct RatioObjective {
  double numerator = 0.0;
  double denominator = 0.0;
  double value = 0.0;
};

// Mean pairwise squared RKHS distance between dictionary atoms,
// (1/N^2) sum_ij (k_ii - 2 k_ij + k_jj). Throws DimensionError for N < 2
// and CollapsedDictionaryError when the value falls to 1e-14 or below.
double discrepancy(const KernelSpec& spec, const DualDictionary& dict);

// Ratio of mean reconstruction error over the samples in x (codes fixed at
// Y, one column per sample) to the dictionary discrepancy.
RatioObjective eval_ratio(const KernelSpec& spec, const DualDictionary& dict,
                          const SampleSet& x, const Matrix& y);

// Analytic derivative of the ratio with respect to the Gaussian width beta
// (also valid for the log-Euclidean RBF, which is Gaussian on logged
// features).
double grad_beta(const KernelSpec& spec, const DualDictionary& dict,
                 const SampleSet& x, const Matrix& y);

struct KernelOptResult {
  KernelSpec spec;
  std::vector<double> trace;  // ratio value at start and after each step
};

// Monotone backtracking descent on the ratio in log(beta); Armijo constant
// 1e-4. Stops when the relative decrease falls below tol or after maxIter
// steps. The returned ratio never exceeds the initial one.
KernelOptResult optimize_beta(const KernelSpec& spec,
                              const DualDictionary& dict, const SampleSet& x,
                              const Matrix& y, int maxIter, double tol);

struct MklOptResult {
  Vector alpha;
  std::vector<double> trace;
};

// Learns simplex-constrained combination weights over the base kernels by
// projected gradient with backtracking; the ratio trace is non-increasing.
// With a single base kernel the weight vector is exactly [1].
MklOptResult optimize_mkl(const std::vector<KernelSpec>& bases,
                          const DualDictionary& dict, const SampleSet& x,
                          const Matrix& y, int maxIter, double tol);

// Euclidean projection onto the probability simplex.
Vector project_simplex(const Vector& v);

}  // namespace kcode

#endif
