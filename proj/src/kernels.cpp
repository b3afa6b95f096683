#include "kcode/kernels.hpp"

#include <cmath>
#include <utility>

namespace kcode {

namespace {

constexpr double kSpdEigenvalueFloor = 1e-12;

void check_symmetric_input(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw NumericError(std::string(what) + ": matrix is not symmetric");
}

// Base-kernel evaluation on feature columns. log-Euclidean RBF is evaluated
// on pre-logged features, where it reduces to a Gaussian.
double eval_base(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                 const Eigen::Ref<const Vector>& b) {
  switch (spec.family) {
    case KernelFamily::linear:
      return a.dot(b);
    case KernelFamily::gaussian:
    case KernelFamily::log_euclidean_rbf:
      return std::exp(-spec.beta * (a - b).squaredNorm());
    case KernelFamily::polynomial:
      return std::pow(1.0 + spec.beta * a.dot(b), spec.degree);
    case KernelFamily::sigmoid:
      return std::tanh(spec.scale * a.dot(b) + spec.offset);
    case KernelFamily::combination:
      break;
  }
  throw NumericError("eval_base: combination is not a base kernel");
}

double eval_features(const KernelSpec& spec, const Eigen::Ref<const Vector>& a,
                     const Eigen::Ref<const Vector>& b) {
  if (!spec.is_combination()) return eval_base(spec, a, b);
  double v = 0.0;
  for (std::size_t l = 0; l < spec.members.size(); ++l)
    v += spec.weights[l] * eval_base(spec.members[l], a, b);
  return v;
}

// Feature columns a kernel actually operates on: the raw vectors, or the
// vectorized matrix logarithms of SPD samples (Frobenius distances between
// logs equal Euclidean distances between these columns).
struct Features {
  Matrix storage;
  const Matrix* cols = nullptr;
  const Matrix& get() const { return *cols; }
};

Features prepare_features(const KernelSpec& spec, const SampleSet& s) {
  Features f;
  if (!s.is_spd()) {
    if (spec.wants_spd())
      throw DimensionError(
          "log-Euclidean RBF kernel requires SPD samples, got vectors");
    f.cols = &s.vectors();
    return f;
  }
  if (!spec.wants_spd())
    throw DimensionError("kernel on SPD samples must be log-Euclidean RBF");
  const auto& mats = s.spd();
  const Index n = s.dim();
  f.storage.resize(n * n, s.size());
  for (Index i = 0; i < s.size(); ++i) {
    Matrix lm = spd_log(mats[i]);
    f.storage.col(i) = Eigen::Map<const Vector>(lm.data(), n * n);
  }
  f.cols = &f.storage;
  return f;
}

void check_compatible(const SampleSet& a, const SampleSet& b) {
  if (a.kind() != b.kind())
    throw DimensionError("sample sets have different kinds");
  if (a.size() > 0 && b.size() > 0 && a.dim() != b.dim())
    throw DimensionError("sample sets have different dimensions");
}

}  // namespace

KernelSpec KernelSpec::Linear() {
  KernelSpec s;
  s.family = KernelFamily::linear;
  return s;
}

KernelSpec KernelSpec::Gaussian(double beta) {
  KernelSpec s;
  s.family = KernelFamily::gaussian;
  s.beta = beta;
  return s;
}

KernelSpec KernelSpec::Polynomial(double beta, int degree) {
  KernelSpec s;
  s.family = KernelFamily::polynomial;
  s.beta = beta;
  s.degree = degree;
  return s;
}

KernelSpec KernelSpec::Sigmoid(double scale, double offset) {
  KernelSpec s;
  s.family = KernelFamily::sigmoid;
  s.scale = scale;
  s.offset = offset;
  return s;
}

KernelSpec KernelSpec::LogEuclideanRbf(double beta) {
  KernelSpec s;
  s.family = KernelFamily::log_euclidean_rbf;
  s.beta = beta;
  return s;
}

KernelSpec KernelSpec::Combination(std::vector<KernelSpec> members,
                                   std::vector<double> weights) {
  KernelSpec s;
  s.family = KernelFamily::combination;
  s.members = std::move(members);
  s.weights = std::move(weights);
  return s;
}

bool KernelSpec::wants_spd() const {
  if (family == KernelFamily::log_euclidean_rbf) return true;
  if (family == KernelFamily::combination && !members.empty())
    return members.front().wants_spd();
  return false;
}

void KernelSpec::validate() const {
  switch (family) {
    case KernelFamily::linear:
    case KernelFamily::sigmoid:
      return;
    case KernelFamily::gaussian:
      if (!(beta > 0.0))
        throw NumericError("gaussian kernel requires beta > 0");
      return;
    case KernelFamily::log_euclidean_rbf:
      if (!(beta > 0.0))
        throw NumericError("log-Euclidean RBF kernel requires beta > 0");
      return;
    case KernelFamily::polynomial:
      if (degree < 1)
        throw NumericError("polynomial kernel requires degree >= 1");
      return;
    case KernelFamily::combination:
      break;
  }
  if (members.empty())
    throw NumericError("combination kernel has no members");
  if (members.size() != weights.size())
    throw DimensionError("combination members and weights differ in length");
  const bool spd = members.front().wants_spd();
  for (std::size_t l = 0; l < members.size(); ++l) {
    if (members[l].is_combination())
      throw NumericError("combination members must be base kernels");
    if (members[l].wants_spd() != spd)
      throw DimensionError("combination mixes SPD and vector kernels");
    if (weights[l] < 0.0)
      throw NumericError("combination weights must be nonnegative");
    members[l].validate();
  }
}

SampleSet SampleSet::Vectors(Matrix columns) {
  SampleSet s;
  s.kind_ = SampleKind::vector;
  s.vectors_ = std::move(columns);
  return s;
}

SampleSet SampleSet::Spd(std::vector<Matrix> matrices) {
  SampleSet s;
  s.kind_ = SampleKind::spd;
  for (std::size_t i = 1; i < matrices.size(); ++i)
    if (matrices[i].rows() != matrices[0].rows())
      throw DimensionError("SPD sample set mixes matrix sizes");
  s.spd_ = std::move(matrices);
  return s;
}

Index SampleSet::size() const {
  return is_spd() ? static_cast<Index>(spd_.size()) : vectors_.cols();
}

Index SampleSet::dim() const {
  return is_spd() ? (spd_.empty() ? 0 : spd_.front().rows())
                  : vectors_.rows();
}

const Matrix& SampleSet::vectors() const {
  if (is_spd()) throw DimensionError("sample set holds SPD matrices");
  return vectors_;
}

const std::vector<Matrix>& SampleSet::spd() const {
  if (!is_spd()) throw DimensionError("sample set holds vectors");
  return spd_;
}

SampleSet SampleSet::subset(const std::vector<Index>& indices) const {
  if (is_spd()) {
    std::vector<Matrix> out;
    out.reserve(indices.size());
    for (Index i : indices) out.push_back(spd_.at(static_cast<size_t>(i)));
    return Spd(std::move(out));
  }
  Matrix out(vectors_.rows(), static_cast<Index>(indices.size()));
  for (std::size_t j = 0; j < indices.size(); ++j)
    out.col(static_cast<Index>(j)) = vectors_.col(indices[j]);
  return Vectors(std::move(out));
}

Matrix spd_log(const Matrix& m) {
  check_symmetric_input(m, "spd_log");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success)
    throw NumericError("spd_log: eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();
  if (ev.minCoeff() <= kSpdEigenvalueFloor)
    throw NumericError("spd_log: matrix is not positive definite (eigenvalue "
                       "at or below 1e-12)");
  Vector logev = ev.array().log();
  return eig.eigenvectors() * logev.asDiagonal() *
         eig.eigenvectors().transpose();
}

Matrix kernel_features(const KernelSpec& spec, const SampleSet& s) {
  spec.validate();
  return prepare_features(spec, s).get();
}

double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b) {
  spec.validate();
  if (spec.wants_spd())
    throw DimensionError("log-Euclidean RBF kernel requires SPD samples");
  if (a.size() != b.size())
    throw DimensionError("eval_kernel: vectors differ in dimension");
  return eval_features(spec, a, b);
}

double eval_kernel(const KernelSpec& spec, const SpdDescriptor& a,
                   const SpdDescriptor& b) {
  spec.validate();
  if (!spec.wants_spd())
    throw DimensionError("kernel on SPD samples must be log-Euclidean RBF");
  if (a.m.rows() != b.m.rows())
    throw DimensionError("eval_kernel: SPD matrices differ in size");
  const Index n = a.m.rows();
  Matrix la = spd_log(a.m), lb = spd_log(b.m);
  Vector va = Eigen::Map<const Vector>(la.data(), n * n);
  Vector vb = Eigen::Map<const Vector>(lb.data(), n * n);
  return eval_features(spec, va, vb);
}

double eval_kernel(const KernelSpec& spec, const SampleSet& a, Index i,
                   const SampleSet& b, Index j) {
  if (a.is_spd())
    return eval_kernel(spec, SpdDescriptor{a.spd().at(static_cast<size_t>(i))},
                       SpdDescriptor{b.spd().at(static_cast<size_t>(j))});
  return eval_kernel(spec, Vector(a.vectors().col(i)),
                     Vector(b.vectors().col(j)));
}

Matrix gram_matrix(const KernelSpec& spec, const SampleSet& a,
                   const SampleSet& b) {
  if (&a == &b) return gram_matrix(spec, a);
  spec.validate();
  check_compatible(a, b);
  Features fa = prepare_features(spec, a);
  Features fb = prepare_features(spec, b);
  Matrix g(a.size(), b.size());
  for (Index j = 0; j < b.size(); ++j)
    for (Index i = 0; i < a.size(); ++i)
      g(i, j) = eval_features(spec, fa.get().col(i), fb.get().col(j));
  return g;
}

Matrix gram_matrix(const KernelSpec& spec, const SampleSet& a) {
  spec.validate();
  Features fa = prepare_features(spec, a);
  const Index n = a.size();
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = eval_features(spec, fa.get().col(i), fa.get().col(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

GramBundle gram_bundle(const KernelSpec& spec, const SampleSet& dict,
                       const SampleSet& queries) {
  spec.validate();
  check_compatible(dict, queries);
  GramBundle gb;
  gb.kDD = gram_matrix(spec, dict);
  gb.kxD = gram_matrix(spec, dict, queries);
  Features fq = prepare_features(spec, queries);
  gb.kxx.resize(queries.size());
  for (Index q = 0; q < queries.size(); ++q)
    gb.kxx[q] = eval_features(spec, fq.get().col(q), fq.get().col(q));
  return gb;
}

GramBundle dual_gram(const KernelSpec& spec, const SampleSet& x,
                     const Matrix& a, const SampleSet& queries) {
  if (a.rows() != x.size())
    throw DimensionError("dual_gram: coefficient rows must match |X|");
  GramBundle base = gram_bundle(spec, x, queries);
  GramBundle gb;
  const Index n = a.cols();
  const Matrix kxa = base.kDD * a;  // K(X,X) A, M x N
  gb.kDD.resize(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = a.col(i).dot(kxa.col(j));
      gb.kDD(i, j) = v;
      gb.kDD(j, i) = v;
    }
  gb.kxD = a.transpose() * base.kxD;
  gb.kxx = base.kxx;
  return gb;
}

}  // namespace kcode
