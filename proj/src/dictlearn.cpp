#include "kcode/dictlearn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kcode {

namespace {

double reconstruction(const GramBundle& g, Index q, const Vector& y) {
  return g.kxx[q] - 2.0 * y.dot(g.kxD.col(q)) + y.dot(g.kDD * y);
}

void check_monotone(std::vector<double>& trace, double next,
                    const char* step) {
  if (!trace.empty()) {
    const double prev = trace.back();
    if (next > prev + 1e-10 * std::max(1.0, std::abs(prev)))
      throw NumericError(std::string("fit_alternating: objective increased "
                                     "at the ") +
                         step + " step (contract violation)");
  }
  trace.push_back(next);
}

std::vector<Index> zero_rows(const Matrix& y) {
  std::vector<Index> dead;
  for (Index r = 0; r < y.rows(); ++r)
    if ((y.row(r).array() == 0.0).all()) dead.push_back(r);
  return dead;
}

// Backtracking gradient descent on R(A); Armijo constant 1e-4, at most 100
// descent steps, step halved until decrease.
Matrix softbow_descend(const Matrix& kxx, Matrix a, double sigma) {
  double step = 1.0;
  for (int it = 0; it < 100; ++it) {
    Matrix grad;
    const double f0 = detail::softbow_objective(kxx, a, sigma, nullptr, &grad);
    const double gnorm2 = grad.squaredNorm();
    if (gnorm2 < 1e-24) break;
    bool accepted = false;
    double s = step;
    for (int h = 0; h < 60; ++h) {
      Matrix cand = a - s * grad;
      const double f = detail::softbow_objective(kxx, cand, sigma, nullptr, nullptr);
      if (f <= f0 - 1e-4 * s * gnorm2) {
        a = std::move(cand);
        step = 2.0 * s;
        accepted = true;
        break;
      }
      s *= 0.5;
    }
    if (!accepted) break;
    if (s * std::sqrt(gnorm2) < 1e-12) break;
  }
  return a;
}

FitResult fit_softbow(const SampleSet& x, const KernelSpec& spec,
                      const FitParams& params, Index nAtoms) {
  FitResult res;
  res.dict = init_dictionary(x, nAtoms, params.seed);
  const Matrix kxx = gram_matrix(spec, x);
  FitReport& rep = res.report;
  double prev_end = 0.0;
  for (int it = 1; it <= params.maxIter; ++it) {
    const double objE = detail::softbow_objective(kxx, res.dict.coeffs,
                                                  params.sigma, nullptr,
                                                  nullptr);
    check_monotone(rep.objectiveTrace, objE, "encode");
    res.dict.coeffs =
        softbow_descend(kxx, res.dict.coeffs, params.sigma);
    const double objU = detail::softbow_objective(kxx, res.dict.coeffs,
                                                  params.sigma, &res.codes.y,
                                                  nullptr);
    check_monotone(rep.objectiveTrace, objU, "update");
    rep.iterations = it;
    if (it > 1 &&
        prev_end - objU < params.tol * std::max(1.0, std::abs(prev_end))) {
      rep.converged = true;
      break;
    }
    prev_end = objU;
  }
  res.codes.constraint = CodeConstraint::simplex;
  rep.deadAtoms = zero_rows(res.codes.y);
  return res;
}

}  // namespace

namespace detail {

// Soft bag of words treats the codes as a function of the dictionary, so
// the fit objective is R(A) with Y(A) substituted. Returns the mean
// objective and fills Y and, optionally, the gradient dR/dA.
double softbow_objective(const Matrix& kxx, const Matrix& a, double sigma,
                         Matrix* yOut, Matrix* gradOut) {
  const Index m = kxx.rows();
  const Index n = a.cols();
  const Matrix p = a.transpose() * kxx;   // N x M, column i = k(x_i, D)
  const Matrix kda = kxx * a;             // M x N
  Matrix kdd(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = a.col(i).dot(kda.col(j));
      kdd(i, j) = v;
      kdd(j, i) = v;
    }
  Matrix y(n, m);
  for (Index i = 0; i < m; ++i) {
    Vector d2(n);
    for (Index j = 0; j < n; ++j)
      d2[j] = std::max(0.0, kxx(i, i) - 2.0 * p(j, i) + kdd(j, j));
    const double dmin = d2.minCoeff();
    Vector w = ((d2.array() - dmin) * -sigma).exp();
    y.col(i) = w / w.sum();
  }
  double obj = 0.0;
  for (Index i = 0; i < m; ++i)
    obj += kxx(i, i) - 2.0 * y.col(i).dot(p.col(i)) +
           y.col(i).dot(kdd * y.col(i));
  obj /= static_cast<double>(m);
  if (yOut) *yOut = y;
  if (gradOut) {
    // Fixed-codes part plus the chain through the softmax weights.
    Matrix s(m, n);
    for (Index i = 0; i < m; ++i) {
      Vector g = -2.0 * p.col(i) + 2.0 * kdd * y.col(i);
      Vector jg = y.col(i).cwiseProduct(g) -
                  y.col(i) * y.col(i).dot(g);  // (diag(y) - y y') g
      s.row(i) = (-sigma * jg).transpose();
    }
    Matrix grad = -2.0 * kxx * (Matrix::Identity(m, m) - a * y) *
                      y.transpose() -
                  2.0 * kxx * s +
                  2.0 * kxx * a * s.colwise().sum().asDiagonal();
    *gradOut = grad / static_cast<double>(m);
  }
  return obj;
}

}  // namespace detail

DualDictionary DualDictionary::Explicit(SampleSet atoms) {
  DualDictionary d;
  d.mode = Mode::explicit_atoms;
  d.atoms = std::move(atoms);
  return d;
}

DualDictionary DualDictionary::Dual(SampleSet x, Matrix coeffs) {
  if (coeffs.rows() != x.size())
    throw DimensionError("DualDictionary: coefficient rows must match |X|");
  DualDictionary d;
  d.mode = Mode::dual;
  d.trainingSet = std::move(x);
  d.coeffs = std::move(coeffs);
  return d;
}

Index DualDictionary::atom_count() const {
  return mode == Mode::explicit_atoms ? atoms.size() : coeffs.cols();
}

GramBundle DualDictionary::bundle_for(const KernelSpec& spec,
                                      const SampleSet& queries) const {
  if (mode == Mode::explicit_atoms) return gram_bundle(spec, atoms, queries);
  return dual_gram(spec, trainingSet, coeffs, queries);
}

DualDictionary init_dictionary(const SampleSet& x, Index n,
                               std::uint64_t seed) {
  const Index m = x.size();
  if (n < 1 || n > m)
    throw DimensionError("init_dictionary: need 1 <= N <= |X|");
  // Partial Fisher-Yates over the column indices.
  std::vector<Index> idx(static_cast<size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  Rng rng(seed);
  for (Index i = 0; i < n; ++i) {
    const Index j =
        i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  Matrix a = Matrix::Zero(m, n);
  for (Index c = 0; c < n; ++c) a(idx[static_cast<size_t>(c)], c) = 1.0;
  return DualDictionary::Dual(x, std::move(a));
}

Matrix update_dictionary(const Matrix& y) {
  const Index n = y.rows();
  Matrix yyt(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = y.row(i).dot(y.row(j));
      yyt(i, j) = v;
      yyt(j, i) = v;
    }
  double eps = 0.0;
  Eigen::LDLT<Matrix> probe(yyt);
  const Vector pivots = probe.vectorD().cwiseAbs();
  if (probe.info() != Eigen::Success ||
      !(pivots.minCoeff() >= 1e-12 * pivots.maxCoeff()))
    eps = 1e-8 * yyt.trace() / static_cast<double>(n);
  return pseudo_inverse(y, eps);
}

Matrix update_dictionary_llc(const Matrix& y) { return update_dictionary(y); }

FitResult fit_alternating(const SampleSet& x, const KernelSpec& spec,
                          Scheme scheme, const FitParams& params,
                          Index nAtoms) {
  if (params.maxIter < 1)
    throw DimensionError("fit_alternating: maxIter must be >= 1");
  if (scheme == Scheme::kbow_soft) return fit_softbow(x, spec, params, nAtoms);

  FitResult res;
  res.dict = init_dictionary(x, nAtoms, params.seed);
  const Index m = x.size();
  FitReport& rep = res.report;

  GramBundle bundle = res.dict.bundle_for(spec, x);
  Vector frozenPrior(m);
  double prev_end = 0.0;
  for (int it = 1; it <= params.maxIter; ++it) {
    const CodingProblem p{bundle, params.gamma, params.sigma, params.nB,
                          params.epsLLC};
    res.codes = encode_batch(p, scheme, params.threads);
    double objE = 0.0;
    for (Index q = 0; q < m; ++q) {
      const double full = coding_objective(p, scheme, q, res.codes.y.col(q));
      frozenPrior[q] = full - reconstruction(bundle, q, res.codes.y.col(q));
      objE += full;
    }
    objE /= static_cast<double>(m);
    check_monotone(rep.objectiveTrace, objE, "encode");

    res.dict.coeffs = scheme == Scheme::kllc_approx
                          ? update_dictionary_llc(res.codes.y)
                          : update_dictionary(res.codes.y);
    bundle = res.dict.bundle_for(spec, x);
    double objU = 0.0;
    for (Index q = 0; q < m; ++q)
      objU += reconstruction(bundle, q, res.codes.y.col(q)) + frozenPrior[q];
    objU /= static_cast<double>(m);
    check_monotone(rep.objectiveTrace, objU, "update");

    rep.iterations = it;
    if (it > 1 &&
        prev_end - objU < params.tol * std::max(1.0, std::abs(prev_end))) {
      rep.converged = true;
      break;
    }
    prev_end = objU;
  }
  rep.deadAtoms = zero_rows(res.codes.y);
  return res;
}

}  // namespace kcode
