#include "kcode/synth.hpp"

#include <cmath>
#include <numbers>

namespace kcode {

namespace {

// Symmetric PSD square root via eigendecomposition, eigenvalues clamped at
// zero so an all-zero covariance is legal.
Matrix psd_sqrt(const Matrix& cov) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success)
    throw NumericError("gen_blobs: covariance eigendecomposition failed");
  Vector s = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * s.asDiagonal() *
         eig.eigenvectors().transpose();
}

// Orthonormalize a square Gaussian matrix by classical Gram-Schmidt.
Matrix random_orthogonal(Index dim, Rng& rng) {
  Matrix g(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) g(i, j) = rng.gaussian();
  Matrix q(dim, dim);
  for (Index j = 0; j < dim; ++j) {
    Vector v = g.col(j);
    for (Index k = 0; k < j; ++k) v -= q.col(k).dot(g.col(j)) * q.col(k);
    const double norm = v.norm();
    if (norm < 1e-12)
      throw NumericError("gen_spd: degenerate Gram-Schmidt column");
    q.col(j) = v / norm;
  }
  return q;
}

}  // namespace

LabeledVectors gen_circles(Index perClass, const std::vector<double>& radii,
                           double noise, std::uint64_t seed) {
  if (noise < 0.0) throw NumericError("gen_circles: noise must be >= 0");
  for (std::size_t i = 0; i < radii.size(); ++i)
    for (std::size_t j = i + 1; j < radii.size(); ++j)
      if (radii[i] == radii[j])
        throw NumericError("gen_circles: radii must be distinct");
  const Index classes = static_cast<Index>(radii.size());
  LabeledVectors out;
  out.x.resize(2, perClass * classes);
  out.labels.resize(static_cast<size_t>(perClass * classes));
  Rng rng(seed);
  Index col = 0;
  for (Index c = 0; c < classes; ++c) {
    for (Index i = 0; i < perClass; ++i, ++col) {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = radii[static_cast<size_t>(c)] +
                       (noise > 0.0 ? noise * rng.gaussian() : 0.0);
      out.x(0, col) = r * std::cos(theta);
      out.x(1, col) = r * std::sin(theta);
      out.labels[static_cast<size_t>(col)] = static_cast<int>(c);
    }
  }
  return out;
}

LabeledVectors gen_blobs(Index perClass, const Matrix& centers,
                         const std::vector<Matrix>& covariances,
                         std::uint64_t seed,
                         const std::vector<int>& classLabels) {
  const Index blobs = centers.cols();
  const Index d = centers.rows();
  if (static_cast<Index>(covariances.size()) != blobs)
    throw DimensionError("gen_blobs: one covariance per center required");
  if (!classLabels.empty() &&
      static_cast<Index>(classLabels.size()) != blobs)
    throw DimensionError("gen_blobs: one class label per center required");
  LabeledVectors out;
  out.x.resize(d, perClass * blobs);
  out.labels.resize(static_cast<size_t>(perClass * blobs));
  Rng rng(seed);
  Index col = 0;
  for (Index c = 0; c < blobs; ++c) {
    const Matrix root = psd_sqrt(covariances[static_cast<size_t>(c)]);
    const int label = classLabels.empty()
                          ? static_cast<int>(c)
                          : classLabels[static_cast<size_t>(c)];
    for (Index i = 0; i < perClass; ++i, ++col) {
      Vector z(d);
      for (Index r = 0; r < d; ++r) z[r] = rng.gaussian();
      out.x.col(col) = centers.col(c) + root * z;
      out.labels[static_cast<size_t>(col)] = label;
    }
  }
  return out;
}

std::vector<Matrix> gen_spd(Index count, Index dim, double anisotropy,
                            std::uint64_t seed) {
  if (dim < 2) throw DimensionError("gen_spd: dim must be >= 2");
  if (anisotropy < 1.0)
    throw NumericError("gen_spd: anisotropy must be >= 1");
  const double span = std::log(anisotropy);
  Rng rng(seed);
  std::vector<Matrix> out;
  out.reserve(static_cast<size_t>(count));
  for (Index k = 0; k < count; ++k) {
    Matrix q = random_orthogonal(dim, rng);
    Vector lambda(dim);
    for (Index i = 0; i < dim; ++i)
      lambda[i] = std::exp(rng.uniform(-span, span));
    // B = Q diag(sqrt(lambda)); S = B B' written one unordered pair at a
    // time so the result is exactly symmetric.
    Matrix b = q * lambda.cwiseSqrt().asDiagonal();
    Matrix s(dim, dim);
    for (Index j = 0; j < dim; ++j)
      for (Index i = 0; i <= j; ++i) {
        const double v = b.row(i).dot(b.row(j));
        s(i, j) = v;
        s(j, i) = v;
      }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace kcode
