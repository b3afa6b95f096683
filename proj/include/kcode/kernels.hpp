#ifndef KCODE_KERNELS_HPP
#define KCODE_KERNELS_HPP

#include "kcode/common.hpp"

#include <vector>

namespace kcode {

enum class KernelFamily {
  linear,
  gaussian,
  polynomial,
  sigmoid,
  log_euclidean_rbf,
  combination,
};

// Declarative description of a kernel: a single parametric family or a
// nonnegatively weighted combination of base (non-combination) kernels.
//
//   linear             k(a,b) = a'b
//   gaussian           k(a,b) = exp(-beta |a-b|^2),          beta > 0
//   polynomial         k(a,b) = (1 + beta a'b)^degree
//   sigmoid            k(a,b) = tanh(scale a'b + offset)     (may be indefinite)
//   log_euclidean_rbf  k(A,B) = exp(-beta |logm A - logm B|_F^2)  on SPD matrices
struct KernelSpec {
  KernelFamily family = KernelFamily::linear;
  double beta = 1.0;    // gaussian, polynomial, log_euclidean_rbf
  int degree = 2;       // polynomial
  double scale = 1.0;   // sigmoid
  double offset = 0.0;  // sigmoid
  std::vector<KernelSpec> members;  // combination only
  std::vector<double> weights;      // combination only, same length

  static KernelSpec Linear();
  static KernelSpec Gaussian(double beta);
  static KernelSpec Polynomial(double beta, int degree);
  static KernelSpec Sigmoid(double scale, double offset);
  static KernelSpec LogEuclideanRbf(double beta);
  static KernelSpec Combination(std::vector<KernelSpec> members,
                                std::vector<double> weights);

  bool is_combination() const { return family == KernelFamily::combination; }
  // True when evaluation requires SPD inputs (log-Euclidean members only).
  bool wants_spd() const;
  // Throws NumericError / DimensionError if parameters violate the family's
  // constraints (gaussian beta <= 0, negative combination weight, nested
  // combinations, empty combination, degree < 1).
  void validate() const;
};

// Symmetric positive-definite matrix used as a sample (e.g. a region
// covariance descriptor). Construction from images is out of scope; these
// arrive ready-made.
struct SpdDescriptor {
  Matrix m;
};

enum class SampleKind { vector, spd };

// A homogeneous set of samples: either columns of a d x n matrix or a list
// of n SPD matrices of identical size.
class SampleSet {
 public:
  SampleSet() : kind_(SampleKind::vector), vectors_(0, 0) {}

  static SampleSet Vectors(Matrix columns);
  static SampleSet Spd(std::vector<Matrix> matrices);

  SampleKind kind() const { return kind_; }
  bool is_spd() const { return kind_ == SampleKind::spd; }
  Index size() const;
  // Feature dimension for vectors; matrix side length for SPD.
  Index dim() const;

  const Matrix& vectors() const;
  const std::vector<Matrix>& spd() const;

  SampleSet subset(const std::vector<Index>& indices) const;

 private:
  SampleKind kind_;
  Matrix vectors_;            // d x n, vector kind
  std::vector<Matrix> spd_;   // spd kind
};

// Cached kernel evaluations for one dictionary / query pairing.
// kDD is exactly symmetric (each unordered pair evaluated once).
struct GramBundle {
  Matrix kDD;   // N x N
  Matrix kxD;   // N x Q, column q = k(x_q, D)
  Vector kxx;   // Q, self-similarity of each query

  Index atoms() const { return kDD.rows(); }
  Index queries() const { return kxx.size(); }
};

// Matrix logarithm of an SPD matrix via symmetric eigendecomposition.
// Throws NumericError if any eigenvalue <= 1e-12 (input not SPD enough).
Matrix spd_log(const Matrix& m);

// Feature columns the kernel effectively operates on: the raw vectors, or
// the vectorized matrix logarithms of SPD samples (for which the
// log-Euclidean RBF is a Gaussian).
Matrix kernel_features(const KernelSpec& spec, const SampleSet& s);

double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b);
double eval_kernel(const KernelSpec& spec, const SpdDescriptor& a,
                   const SpdDescriptor& b);
double eval_kernel(const KernelSpec& spec, const SampleSet& a, Index i,
                   const SampleSet& b, Index j);

// Cross-Gram: entry (i,j) = k(A_i, B_j). When called with the same object
// for A and B the symmetric path is taken (one evaluation per unordered
// pair), so the result is exactly symmetric.
Matrix gram_matrix(const KernelSpec& spec, const SampleSet& a,
                   const SampleSet& b);
Matrix gram_matrix(const KernelSpec& spec, const SampleSet& a);

// Bundle for an explicit dictionary: kDD = K(D,D), kxD = k(x,D) per query,
// kxx = k(x,x) per query.
GramBundle gram_bundle(const KernelSpec& spec, const SampleSet& dict,
                       const SampleSet& queries);

// Bundle for the implicit dictionary Phi(X) A (Representer form):
// kDD = A' K(X,X) A and kxD = A' k(x,X). A must have |X| rows.
GramBundle dual_gram(const KernelSpec& spec, const SampleSet& x,
                     const Matrix& a, const SampleSet& queries);

}  // namespace kcode

#endif
