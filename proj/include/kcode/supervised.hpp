#ifndef KCODE_SUPERVISED_HPP
#define KCODE_SUPERVISED_HPP

#include "kcode/dictlearn.hpp"

namespace kcode {

// S x M one-hot label matrix, column i encoding the class of sample i.
Matrix label_matrix(const std::vector<int>& labels, int classCount);

enum class ClassifierKind { linear, bilinear };

// Classifier learned jointly with codes and dictionary. Linear predicts
// W y; bilinear predicts per class j the score k(x,X) A_j y through the
// Representer form W_j = Phi(X) A_j.
struct SupervisedModel {
  ClassifierKind kind = ClassifierKind::linear;
  Matrix w;                // S x N, linear
  std::vector<Matrix> a;   // S matrices, M x N each, bilinear
  double eta = 1.0;
  double rho = 0.0;

  bool is_zero() const;
  Index classes() const {
    return kind == ClassifierKind::linear ? w.rows()
                                          : static_cast<Index>(a.size());
  }
};

// Ridge regression of the labels on the codes:
// W = L Y' (YY' + (rho M / eta) I)^{-1}. With eta == 0 the classifier terms
// vanish and W = 0.
Matrix fit_linear_classifier(const Matrix& y, const Matrix& l, double eta,
                             double rho);

// Per-class normal equations of the bilinear objective, solved densely;
// refuses problems with M*N beyond solveCap. kxx is the training Gram
// K(X,X); returns one M x N coefficient matrix per class.
std::vector<Matrix> fit_bilinear_classifier(const Matrix& kxx,
                                            const Matrix& y, const Matrix& l,
                                            double eta, double rho,
                                            Index solveCap = 4096);

// Training-time coding with the discriminative term folded into the
// quadratic: Q += eta W'W, b += eta W'l. With label == nullptr (test time),
// eta == 0, or an all-zero classifier, this is exactly the unsupervised
// encoder. Supported schemes: ksc, kllc_exact, kllc_approx.
Vector encode_supervised_linear(const CodingProblem& p, Index query,
                                Scheme scheme, const PsdFactor* factor,
                                const Matrix& w, const Vector* label,
                                double eta);

// Bilinear counterpart: the per-sample classifier matrix G has rows
// kappa' A_j, and Q += eta G'G, b += eta G'l.
Vector encode_supervised_bilinear(const CodingProblem& p, Index query,
                                  Scheme scheme, const PsdFactor* factor,
                                  const std::vector<Matrix>& a,
                                  const Vector& kappa, const Vector* label,
                                  double eta);

// argmax of the classifier scores; ties go to the smallest class index.
// kappa (= k(x, X)) is required for bilinear models.
int predict(const SupervisedModel& model, const Vector& code,
            const Vector* kappa = nullptr);

struct SupervisedFitParams {
  double gamma = 0.0;
  double sigma = 1.0;
  Index nB = 1;
  double epsLLC = 1e-6;
  double eta = 1.0;
  double rho = 0.0;
  int maxIter = 10;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  int threads = 1;
  Index solveCap = 4096;
};

struct SupervisedFitResult {
  DualDictionary dict;
  SupervisedModel model;
  CodeMatrix codes;
  FitReport report;
};

// Alternates supervised coding, the dictionary update, and the classifier
// refit. The total objective (reconstruction + prior + eta loss + rho
// regularizer) is non-increasing within a 1e-8 relative slack per
// half-step; a larger increase raises NumericError. With eta == 0 the
// dictionary and codes match fit_alternating bit for bit.
SupervisedFitResult fit_supervised(const SampleSet& x,
                                   const std::vector<int>& labels,
                                   const KernelSpec& spec, Scheme scheme,
                                   ClassifierKind kind,
                                   const SupervisedFitParams& params,
                                   Index nAtoms);

}  // namespace kcode

#endif
