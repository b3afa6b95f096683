#include "kcode/supervised.hpp"

#include <algorithm>
#include <cmath>

namespace kcode {

namespace {

Matrix symmetric_product(const Matrix& w) {
  // W'W written one unordered pair at a time; exactly symmetric.
  const Index n = w.cols();
  Matrix g(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = w.col(i).dot(w.col(j));
      g(i, j) = v;
      g(j, i) = v;
    }
  return g;
}

Vector dispatch_unsupervised(const CodingProblem& p, Index query,
                             Scheme scheme, const PsdFactor* factor) {
  switch (scheme) {
    case Scheme::ksc:
      if (!factor)
        throw NumericError("supervised coding: ksc needs a PSD factor");
      return encode_ksc(p, *factor, query);
    case Scheme::kllc_exact:
      return encode_kllc_exact(p, query);
    case Scheme::kllc_approx:
      return encode_kllc_approx(p, query);
    default:
      throw NumericError(
          "supervised coding supports ksc, kllc_exact and kllc_approx");
  }
}

Vector dispatch_augmented(const CodingProblem& p, Index query, Scheme scheme,
                          const PsdFactor* factor, const Matrix& qAdd,
                          const Vector& bAdd) {
  switch (scheme) {
    case Scheme::ksc:
      if (!factor)
        throw NumericError("supervised coding: ksc needs a PSD factor");
      return encode_ksc_augmented(p, *factor, query, qAdd, bAdd);
    case Scheme::kllc_exact:
      return encode_kllc_exact_augmented(p, query, qAdd, bAdd);
    case Scheme::kllc_approx:
      return encode_kllc_approx_augmented(p, query, qAdd, bAdd);
    default:
      throw NumericError(
          "supervised coding supports ksc, kllc_exact and kllc_approx");
  }
}

void check_monotone_supervised(std::vector<double>& trace, double next,
                               const char* step) {
  if (!trace.empty()) {
    const double prev = trace.back();
    if (next > prev + 1e-8 * std::max(1.0, std::abs(prev)))
      throw NumericError(std::string("fit_supervised: objective increased "
                                     "at the ") +
                         step + " step (contract violation)");
  }
  trace.push_back(next);
}

double reconstruction(const GramBundle& g, Index q, const Vector& y) {
  return g.kxx[q] - 2.0 * y.dot(g.kxD.col(q)) + y.dot(g.kDD * y);
}

// eta/M loss + regularizer for the current model and codes.
double classifier_terms(const SupervisedModel& model, const Matrix& y,
                        const Matrix& l, const Matrix* kxx) {
  const Index m = y.cols();
  if (model.eta == 0.0) return 0.0;
  double loss = 0.0, reg = 0.0;
  if (model.kind == ClassifierKind::linear) {
    loss = (l - model.w * y).squaredNorm();
    reg = model.rho * model.w.squaredNorm();
  } else {
    const Index s = static_cast<Index>(model.a.size());
    for (Index i = 0; i < m; ++i) {
      const Vector kappa = kxx->col(i);
      for (Index j = 0; j < s; ++j) {
        const double pred =
            kappa.dot(model.a[static_cast<size_t>(j)] * y.col(i));
        const double e = l(j, i) - pred;
        loss += e * e;
      }
    }
    for (Index j = 0; j < s; ++j) {
      const Matrix& aj = model.a[static_cast<size_t>(j)];
      reg += (aj.transpose() * (*kxx) * aj).trace();
    }
    reg *= model.rho / static_cast<double>(s);
  }
  return model.eta * loss / static_cast<double>(m) + reg;
}

}  // namespace

Matrix label_matrix(const std::vector<int>& labels, int classCount) {
  if (classCount < 1)
    throw DimensionError("label_matrix: classCount must be >= 1");
  Matrix l = Matrix::Zero(classCount, static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classCount)
      throw DimensionError("label_matrix: label out of range");
    l(labels[i], static_cast<Index>(i)) = 1.0;
  }
  return l;
}

bool SupervisedModel::is_zero() const {
  if (kind == ClassifierKind::linear)
    return w.size() == 0 || (w.array() == 0.0).all();
  for (const Matrix& aj : a)
    if (!(aj.array() == 0.0).all()) return false;
  return true;
}

Matrix fit_linear_classifier(const Matrix& y, const Matrix& l, double eta,
                             double rho) {
  if (y.cols() != l.cols())
    throw DimensionError("fit_linear_classifier: Y and L column mismatch");
  if (eta < 0.0 || rho < 0.0)
    throw NumericError("fit_linear_classifier: eta, rho must be >= 0");
  const Index s = l.rows(), n = y.rows(), m = y.cols();
  if (eta == 0.0) return Matrix::Zero(s, n);
  const Matrix yyt = symmetric_product(y.transpose());
  const double ridge = rho * static_cast<double>(m) / eta;
  const Matrix z = ridge_solve(yyt, y * l.transpose(), ridge);  // N x S
  return z.transpose();
}

std::vector<Matrix> fit_bilinear_classifier(const Matrix& kxx,
                                            const Matrix& y, const Matrix& l,
                                            double eta, double rho,
                                            Index solveCap) {
  const Index m = kxx.rows(), n = y.rows(), s = l.rows();
  if (y.cols() != m || l.cols() != m)
    throw DimensionError("fit_bilinear_classifier: column counts must "
                         "match the training Gram");
  if (eta < 0.0 || rho < 0.0)
    throw NumericError("fit_bilinear_classifier: eta, rho must be >= 0");
  if (m * n > solveCap)
    throw Error("fit_bilinear_classifier: M*N = " + std::to_string(m * n) +
                " exceeds the dense solve cap " + std::to_string(solveCap) +
                "; use fewer atoms or samples");
  std::vector<Matrix> out(static_cast<size_t>(s));
  if (eta == 0.0) {
    for (auto& aj : out) aj = Matrix::Zero(m, n);
    return out;
  }

  // System matrix sum_i (y_i y_i') kron (kappa_i kappa_i')
  //             + (rho M / (eta S)) I_N kron K(X,X), built blockwise.
  const Index mn = m * n;
  const double ridge =
      rho * static_cast<double>(m) / (eta * static_cast<double>(s));
  Matrix h(mn, mn);
  for (Index b = 0; b < n; ++b)
    for (Index a = 0; a <= b; ++a) {
      Vector wgt(m);
      for (Index i = 0; i < m; ++i) wgt[i] = y(a, i) * y(b, i);
      Matrix block = kxx * wgt.asDiagonal() * kxx.transpose();
      if (a == b) block += ridge * kxx;
      h.block(a * m, b * m, m, m) = block;
      if (a != b) h.block(b * m, a * m, m, m) = block.transpose();
    }
  h = 0.5 * (h + h.transpose());  // exact symmetry for the solver

  Matrix rhs(mn, s);
  for (Index j = 0; j < s; ++j) {
    Matrix rj = Matrix::Zero(m, n);
    for (Index i = 0; i < m; ++i)
      rj += l(j, i) * kxx.col(i) * y.col(i).transpose();
    rhs.col(j) = Eigen::Map<const Vector>(rj.data(), mn);
  }
  const Matrix sol = ridge_solve(h, rhs, 0.0);
  for (Index j = 0; j < s; ++j)
    out[static_cast<size_t>(j)] =
        Eigen::Map<const Matrix>(sol.col(j).data(), m, n);
  return out;
}

Vector encode_supervised_linear(const CodingProblem& p, Index query,
                                Scheme scheme, const PsdFactor* factor,
                                const Matrix& w, const Vector* label,
                                double eta) {
  if (!label || eta == 0.0 || w.size() == 0 || (w.array() == 0.0).all())
    return dispatch_unsupervised(p, query, scheme, factor);
  const Matrix qAdd = eta * symmetric_product(w);
  const Vector bAdd = eta * (w.transpose() * (*label));
  return dispatch_augmented(p, query, scheme, factor, qAdd, bAdd);
}

Vector encode_supervised_bilinear(const CodingProblem& p, Index query,
                                  Scheme scheme, const PsdFactor* factor,
                                  const std::vector<Matrix>& a,
                                  const Vector& kappa, const Vector* label,
                                  double eta) {
  bool zero = true;
  for (const Matrix& aj : a)
    if (!(aj.array() == 0.0).all()) {
      zero = false;
      break;
    }
  if (!label || eta == 0.0 || zero)
    return dispatch_unsupervised(p, query, scheme, factor);
  const Index s = static_cast<Index>(a.size());
  const Index n = p.gram.atoms();
  Matrix g(s, n);
  for (Index j = 0; j < s; ++j)
    g.row(j) = kappa.transpose() * a[static_cast<size_t>(j)];
  const Matrix qAdd = eta * symmetric_product(g);
  const Vector bAdd = eta * (g.transpose() * (*label));
  return dispatch_augmented(p, query, scheme, factor, qAdd, bAdd);
}

int predict(const SupervisedModel& model, const Vector& code,
            const Vector* kappa) {
  Vector scores;
  if (model.kind == ClassifierKind::linear) {
    scores = model.w * code;
  } else {
    if (!kappa)
      throw DimensionError("predict: bilinear model needs kappa = k(x, X)");
    scores.resize(model.classes());
    for (Index j = 0; j < scores.size(); ++j)
      scores[j] = kappa->dot(model.a[static_cast<size_t>(j)] * code);
  }
  Index best = 0;
  for (Index j = 1; j < scores.size(); ++j)
    if (scores[j] > scores[best]) best = j;
  return static_cast<int>(best);
}

SupervisedFitResult fit_supervised(const SampleSet& x,
                                   const std::vector<int>& labels,
                                   const KernelSpec& spec, Scheme scheme,
                                   ClassifierKind kind,
                                   const SupervisedFitParams& params,
                                   Index nAtoms) {
  if (params.maxIter < 1)
    throw DimensionError("fit_supervised: maxIter must be >= 1");
  if (params.eta < 0.0 || params.rho < 0.0)
    throw NumericError("fit_supervised: eta, rho must be >= 0");
  if (static_cast<Index>(labels.size()) != x.size())
    throw DimensionError("fit_supervised: one label per sample required");
  int classCount = 0;
  for (int l : labels) classCount = std::max(classCount, l + 1);
  {
    std::vector<bool> seen(static_cast<size_t>(classCount), false);
    int distinct = 0;
    for (int l : labels)
      if (!seen[static_cast<size_t>(l)]) {
        seen[static_cast<size_t>(l)] = true;
        ++distinct;
      }
    if (distinct < 2)
      throw DimensionError("fit_supervised: labels must cover >= 2 classes");
  }
  const Matrix l = label_matrix(labels, classCount);
  const Index m = x.size();

  SupervisedFitResult res;
  res.dict = init_dictionary(x, nAtoms, params.seed);
  res.model.kind = kind;
  res.model.eta = params.eta;
  res.model.rho = params.rho;

  // Training Gram, used for bilinear kappa columns and the regularizer.
  const Matrix kq = gram_matrix(spec, x);
  if (kind == ClassifierKind::linear) {
    res.model.w = Matrix::Zero(classCount, nAtoms);
  } else {
    res.model.a.assign(static_cast<size_t>(classCount),
                       Matrix::Zero(m, nAtoms));
  }

  FitReport& rep = res.report;
  GramBundle bundle = res.dict.bundle_for(spec, x);
  Vector frozenPrior(m);
  double prev_end = 0.0;
  for (int it = 1; it <= params.maxIter; ++it) {
    const CodingProblem p{bundle, params.gamma, params.sigma, params.nB,
                          params.epsLLC};
    if (params.eta == 0.0 || res.model.is_zero()) {
      res.codes = encode_batch(p, scheme, params.threads);
    } else {
      res.codes.constraint = constraint_for(scheme);
      res.codes.y.resize(nAtoms, m);
      const PsdFactor* factorPtr = nullptr;
      PsdFactor factor;
      if (scheme == Scheme::ksc) {
        factor = psd_factor(bundle.kDD);
        factorPtr = &factor;
      }
      parallel_for(m, params.threads, [&](Index q) {
        const Vector lab = l.col(q);
        res.codes.y.col(q) =
            kind == ClassifierKind::linear
                ? encode_supervised_linear(p, q, scheme, factorPtr,
                                           res.model.w, &lab, params.eta)
                : encode_supervised_bilinear(p, q, scheme, factorPtr,
                                             res.model.a, kq.col(q), &lab,
                                             params.eta);
      });
    }

    double objE = 0.0;
    for (Index q = 0; q < m; ++q) {
      const double full = coding_objective(p, scheme, q, res.codes.y.col(q));
      frozenPrior[q] = full - reconstruction(bundle, q, res.codes.y.col(q));
      objE += full;
    }
    objE = objE / static_cast<double>(m) +
           classifier_terms(res.model, res.codes.y, l, &kq);
    check_monotone_supervised(rep.objectiveTrace, objE, "encode");

    res.dict.coeffs = update_dictionary(res.codes.y);
    bundle = res.dict.bundle_for(spec, x);

    if (kind == ClassifierKind::linear) {
      res.model.w = fit_linear_classifier(res.codes.y, l, params.eta,
                                          params.rho);
    } else {
      res.model.a = fit_bilinear_classifier(kq, res.codes.y, l, params.eta,
                                            params.rho, params.solveCap);
    }

    double objU = 0.0;
    for (Index q = 0; q < m; ++q)
      objU += reconstruction(bundle, q, res.codes.y.col(q)) + frozenPrior[q];
    objU = objU / static_cast<double>(m) +
           classifier_terms(res.model, res.codes.y, l, &kq);
    check_monotone_supervised(rep.objectiveTrace, objU, "update");

    rep.iterations = it;
    if (it > 1 &&
        prev_end - objU < params.tol * std::max(1.0, std::abs(prev_end))) {
      rep.converged = true;
      break;
    }
    prev_end = objU;
  }
  for (Index r = 0; r < res.codes.y.rows(); ++r)
    if ((res.codes.y.row(r).array() == 0.0).all()) rep.deadAtoms.push_back(r);
  return res;
}

}  // namespace kcode
