#include "kcode/classify.hpp"

#include <algorithm>
#include <limits>

namespace kcode {

ClassResiduals residual_classify(const Vector& code, const GramBundle& gram,
                                 Index query,
                                 const std::vector<int>& atomLabels,
                                 int classCount) {
  const Index n = gram.atoms();
  if (static_cast<Index>(atomLabels.size()) != n)
    throw DimensionError("residual_classify: one label per atom required");
  if (code.size() != n)
    throw DimensionError("residual_classify: code length must match atoms");
  if (classCount < 1)
    throw DimensionError("residual_classify: classCount must be >= 1");
  for (int l : atomLabels)
    if (l < 0 || l >= classCount)
      throw DimensionError("residual_classify: atom label out of range");

  ClassResiduals out;
  out.residuals = Vector::Zero(classCount);
  std::vector<bool> populated(static_cast<size_t>(classCount), false);
  for (int s = 0; s < classCount; ++s) {
    Vector masked = Vector::Zero(n);
    bool any = false;
    for (Index j = 0; j < n; ++j)
      if (atomLabels[static_cast<size_t>(j)] == s) {
        masked[j] = code[j];
        any = true;
      }
    populated[static_cast<size_t>(s)] = any;
    if (!any) continue;  // residual stays 0; class excluded from the argmin
    out.residuals[s] = -2.0 * masked.dot(gram.kxD.col(query)) +
                       masked.dot(gram.kDD * masked);
  }
  int best = -1;
  for (int s = 0; s < classCount; ++s) {
    if (!populated[static_cast<size_t>(s)]) continue;
    if (best < 0 || out.residuals[s] < out.residuals[best]) best = s;
  }
  if (best < 0)
    throw DimensionError("residual_classify: no class has any atoms");
  out.predicted = best;
  return out;
}

int nn_classify(const Matrix& codesTrain, const std::vector<int>& labels,
                const Vector& codeQuery) {
  const Index m = codesTrain.cols();
  if (m < 1) throw DimensionError("nn_classify: empty training codes");
  if (static_cast<Index>(labels.size()) != m)
    throw DimensionError("nn_classify: one label per training code required");
  if (codesTrain.rows() != codeQuery.size())
    throw DimensionError("nn_classify: code dimensions differ");
  Index best = 0;
  double bestD = (codesTrain.col(0) - codeQuery).squaredNorm();
  for (Index i = 1; i < m; ++i) {
    const double d = (codesTrain.col(i) - codeQuery).squaredNorm();
    if (d < bestD) {
      bestD = d;
      best = i;
    }
  }
  return labels[static_cast<size_t>(best)];
}

Metrics evaluate(const std::vector<int>& predictions,
                 const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw DimensionError("evaluate: predictions and labels differ in length");
  if (predictions.empty()) throw DimensionError("evaluate: empty input");
  int classes = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || predictions[i] < 0)
      throw DimensionError("evaluate: negative label");
    classes = std::max({classes, labels[i] + 1, predictions[i] + 1});
  }
  Metrics m;
  m.confusion = Eigen::MatrixXi::Zero(classes, classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m.confusion(labels[i], predictions[i]) += 1;
    if (labels[i] == predictions[i]) ++correct;
  }
  m.accuracy =
      static_cast<double>(correct) / static_cast<double>(labels.size());
  m.perClass = Vector::Zero(classes);
  for (int s = 0; s < classes; ++s) {
    const int total = m.confusion.row(s).sum();
    if (total > 0)
      m.perClass[s] =
          static_cast<double>(m.confusion(s, s)) / static_cast<double>(total);
  }
  return m;
}

}  // namespace kcode
