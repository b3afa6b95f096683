#ifndef KCODE_CLASSIFY_HPP
#define KCODE_CLASSIFY_HPP

#include "kcode/kernels.hpp"

#include <vector>

namespace kcode {

struct ClassResiduals {
  int predicted = 0;
  Vector residuals;  // one entry per class; 0 for classes with no atoms
};

// Class-residual rule: masks the code to each class's atoms and scores
// -2 y_s' k(x,D) + y_s' K(D,D) y_s (the k(x,x) term is constant across
// classes and dropped). Classes with no atoms are excluded from the argmin;
// ties go to the smallest class index.
ClassResiduals residual_classify(const Vector& code, const GramBundle& gram,
                                 Index query,
                                 const std::vector<int>& atomLabels,
                                 int classCount);

// 1-nearest-neighbor on code vectors under Euclidean distance; ties go to
// the smallest training index.
int nn_classify(const Matrix& codesTrain, const std::vector<int>& labels,
                const Vector& codeQuery);

struct Metrics {
  double accuracy = 0.0;
  Vector perClass;           // per-class accuracy; 0 when a class is absent
  Eigen::MatrixXi confusion;  // rows = true class, cols = predicted
};

Metrics evaluate(const std::vector<int>& predictions,
                 const std::vector<int>& labels);

}  // namespace kcode

#endif
