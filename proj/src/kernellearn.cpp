#include "kcode/kernellearn.hpp"

#include <algorithm>
#include <cmath>

namespace kcode {

namespace {

constexpr double kCollapseThreshold = 1e-14;

double discrepancy_from_gram(const Matrix& kdd) {
  const Index n = kdd.rows();
  const double nn = static_cast<double>(n);
  return 2.0 * kdd.trace() / nn - 2.0 * kdd.sum() / (nn * nn);
}

// Gram of the dictionary atoms under the given kernel.
Matrix dict_gram(const KernelSpec& spec, const DualDictionary& dict) {
  if (dict.mode == DualDictionary::Mode::explicit_atoms)
    return gram_matrix(spec, dict.atoms);
  const Matrix kxx = gram_matrix(spec, dict.trainingSet);
  const Matrix kxa = kxx * dict.coeffs;
  const Index n = dict.coeffs.cols();
  Matrix kdd(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i <= j; ++i) {
      const double v = dict.coeffs.col(i).dot(kxa.col(j));
      kdd(i, j) = v;
      kdd(j, i) = v;
    }
  return kdd;
}

void check_collapse(double j) {
  if (j <= kCollapseThreshold)
    throw CollapsedDictionaryError(
        "kernel learning: dictionary atoms collapsed in RKHS "
        "(discrepancy at or below 1e-14)");
}

// Precomputed beta-independent quantities for the Gaussian family: squared
// feature distances between the relevant sets, plus the fixed codes.
struct BetaContext {
  bool dual = false;
  Matrix sqTT;  // basis x basis (dual) or atoms x atoms (explicit)
  Matrix sqXT;  // basis x queries (dual) or atoms x queries (explicit)
  Matrix coeffs;  // dual mode only
  const Matrix* y = nullptr;
  Index atomCount = 0;
};

Matrix pairwise_sqdist(const Matrix& a, const Matrix& b) {
  Matrix d(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j)
    for (Index i = 0; i < a.cols(); ++i)
      d(i, j) = (a.col(i) - b.col(j)).squaredNorm();
  return d;
}

BetaContext make_beta_context(const KernelSpec& spec,
                              const DualDictionary& dict, const SampleSet& x,
                              const Matrix& y) {
  if (spec.family != KernelFamily::gaussian &&
      spec.family != KernelFamily::log_euclidean_rbf)
    throw NumericError("kernel parameter learning requires the Gaussian "
                       "(or log-Euclidean RBF) family");
  BetaContext ctx;
  ctx.y = &y;
  const Matrix fx = kernel_features(spec, x);
  if (dict.mode == DualDictionary::Mode::explicit_atoms) {
    const Matrix fd = kernel_features(spec, dict.atoms);
    ctx.sqTT = pairwise_sqdist(fd, fd);
    ctx.sqXT = pairwise_sqdist(fd, fx);
    ctx.atomCount = dict.atoms.size();
  } else {
    ctx.dual = true;
    const Matrix ft = kernel_features(spec, dict.trainingSet);
    ctx.sqTT = pairwise_sqdist(ft, ft);
    ctx.sqXT = pairwise_sqdist(ft, fx);
    ctx.coeffs = dict.coeffs;
    ctx.atomCount = dict.coeffs.cols();
  }
  if (y.rows() != ctx.atomCount || y.cols() != x.size())
    throw DimensionError("kernel learning: code matrix must be N x M");
  return ctx;
}

struct RatioParts {
  double r, j;        // numerator, denominator
  double dr, dj;      // their beta-derivatives
};

// Ratio numerator/denominator and derivatives at the given beta. The
// Gaussian diagonal k(x,x) = 1 contributes a constant 1 per sample and has
// zero derivative.
RatioParts beta_parts(const BetaContext& ctx, double beta) {
  const Matrix kTT = (-beta * ctx.sqTT.array()).exp();
  const Matrix kXT = (-beta * ctx.sqXT.array()).exp();
  const Matrix dTT = -ctx.sqTT.array() * kTT.array();
  const Matrix dXT = -ctx.sqXT.array() * kXT.array();
  const Matrix& y = *ctx.y;
  Matrix kDD, kxD, dDD, dxD;
  if (ctx.dual) {
    kDD = ctx.coeffs.transpose() * kTT * ctx.coeffs;
    kxD = ctx.coeffs.transpose() * kXT;
    dDD = ctx.coeffs.transpose() * dTT * ctx.coeffs;
    dxD = ctx.coeffs.transpose() * dXT;
  } else {
    kDD = kTT;
    kxD = kXT;
    dDD = dTT;
    dxD = dXT;
  }
  const Index m = y.cols();
  RatioParts p{};
  for (Index i = 0; i < m; ++i) {
    const auto yi = y.col(i);
    p.r += 1.0 - 2.0 * yi.dot(kxD.col(i)) + yi.dot(kDD * yi);
    p.dr += -2.0 * yi.dot(dxD.col(i)) + yi.dot(dDD * yi);
  }
  p.r /= static_cast<double>(m);
  p.dr /= static_cast<double>(m);
  p.j = discrepancy_from_gram(kDD);
  p.dj = discrepancy_from_gram(dDD);
  return p;
}

double ratio_value(const BetaContext& ctx, double beta) {
  RatioParts p = beta_parts(ctx, beta);
  check_collapse(p.j);
  return p.r / p.j;
}

}  // namespace

double discrepancy(const KernelSpec& spec, const DualDictionary& dict) {
  if (dict.atom_count() < 2)
    throw DimensionError("discrepancy: needs at least two atoms");
  const double j = discrepancy_from_gram(dict_gram(spec, dict));
  check_collapse(j);
  return j;
}

RatioObjective eval_ratio(const KernelSpec& spec, const DualDictionary& dict,
                          const SampleSet& x, const Matrix& y) {
  if (y.rows() != dict.atom_count() || y.cols() != x.size())
    throw DimensionError("eval_ratio: code matrix must be N x M");
  const GramBundle g = dict.bundle_for(spec, x);
  RatioObjective out;
  const Index m = x.size();
  for (Index i = 0; i < m; ++i) {
    const auto yi = y.col(i);
    out.numerator +=
        g.kxx[i] - 2.0 * yi.dot(g.kxD.col(i)) + yi.dot(g.kDD * yi);
  }
  out.numerator /= static_cast<double>(m);
  out.denominator = discrepancy(spec, dict);
  out.value = out.numerator / out.denominator;
  return out;
}

double grad_beta(const KernelSpec& spec, const DualDictionary& dict,
                 const SampleSet& x, const Matrix& y) {
  BetaContext ctx = make_beta_context(spec, dict, x, y);
  RatioParts p = beta_parts(ctx, spec.beta);
  check_collapse(p.j);
  return (p.dr * p.j - p.r * p.dj) / (p.j * p.j);
}

KernelOptResult optimize_beta(const KernelSpec& spec,
                              const DualDictionary& dict, const SampleSet& x,
                              const Matrix& y, int maxIter, double tol) {
  if (!(spec.beta > 0.0))
    throw NumericError("optimize_beta: starting beta must be > 0");
  BetaContext ctx = make_beta_context(spec, dict, x, y);

  double theta = std::log(spec.beta);
  double f = ratio_value(ctx, spec.beta);  // throws if collapsed at start
  KernelOptResult res;
  res.spec = spec;
  res.trace.push_back(f);

  double step = 1.0;
  for (int it = 0; it < maxIter; ++it) {
    const double beta = std::exp(theta);
    RatioParts p = beta_parts(ctx, beta);
    check_collapse(p.j);
    const double dfdb = (p.dr * p.j - p.r * p.dj) / (p.j * p.j);
    if (std::abs(dfdb) < 1e-12) break;  // already stationary
    const double g = dfdb * beta;       // d/d(log beta)
    bool accepted = false;
    double s = step;
    double thetaNew = theta, fNew = f;
    for (int h = 0; h < 60; ++h, s *= 0.5) {
      const double cand = theta - s * g;
      const double betaCand = std::exp(cand);
      if (!std::isfinite(betaCand) || betaCand <= 0.0) continue;
      double fc;
      try {
        fc = ratio_value(ctx, betaCand);
      } catch (const CollapsedDictionaryError&) {
        continue;  // candidate degenerates the dictionary; shrink the step
      }
      if (fc <= f - 1e-4 * s * g * g) {
        thetaNew = cand;
        fNew = fc;
        step = std::min(2.0 * s, 1e3);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double prev = f;
    theta = thetaNew;
    f = fNew;
    res.trace.push_back(f);
    if (std::abs(prev - f) < tol * std::max(std::abs(prev), 1e-300)) break;
  }
  res.spec.beta = std::exp(theta);
  return res;
}

Vector project_simplex(const Vector& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  for (Index i = 0; i < n; ++i) {
    cumsum += u[static_cast<size_t>(i)];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<size_t>(i)] - t > 0.0) tau = t;
  }
  return (v.array() - tau).cwiseMax(0.0);
}

MklOptResult optimize_mkl(const std::vector<KernelSpec>& bases,
                          const DualDictionary& dict, const SampleSet& x,
                          const Matrix& y, int maxIter, double tol) {
  const Index l = static_cast<Index>(bases.size());
  if (l < 1) throw DimensionError("optimize_mkl: need at least one kernel");

  // The ratio is linear-fractional in alpha: F = (alpha'r) / (alpha'j).
  Vector r(l), j(l);
  for (Index k = 0; k < l; ++k) {
    const RatioObjective ro = [&] {
      try {
        return eval_ratio(bases[static_cast<size_t>(k)], dict, x, y);
      } catch (const CollapsedDictionaryError&) {
        RatioObjective z;  // degenerate vertex: mark with zero denominator
        const GramBundle g =
            dict.bundle_for(bases[static_cast<size_t>(k)], x);
        for (Index i = 0; i < x.size(); ++i) {
          const auto yi = y.col(i);
          z.numerator +=
              g.kxx[i] - 2.0 * yi.dot(g.kxD.col(i)) + yi.dot(g.kDD * yi);
        }
        z.numerator /= static_cast<double>(x.size());
        z.denominator = 0.0;
        return z;
      }
    }();
    r[k] = ro.numerator;
    j[k] = ro.denominator;
  }
  if (j.maxCoeff() <= kCollapseThreshold)
    throw CollapsedDictionaryError(
        "optimize_mkl: every base kernel collapses the dictionary");

  MklOptResult res;
  if (l == 1) {
    res.alpha = Vector::Ones(1);
    res.trace.push_back(r[0] / j[0]);
    return res;
  }

  const auto value = [&](const Vector& a) {
    const double den = a.dot(j);
    check_collapse(den);
    return a.dot(r) / den;
  };

  Vector alpha = Vector::Constant(l, 1.0 / static_cast<double>(l));
  double f = value(alpha);
  res.trace.push_back(f);
  double step = 1.0;
  bool done = false;
  for (int it = 0; it < maxIter && !done; ++it) {
    const double den = alpha.dot(j);
    const Vector grad = (r * den - alpha.dot(r) * j) / (den * den);
    bool accepted = false;
    double s = step;
    for (int h = 0; h < 60; ++h, s *= 0.5) {
      const Vector cand = project_simplex(alpha - s * grad);
      const double moved2 = (cand - alpha).squaredNorm();
      if (moved2 < 1e-28) break;  // stationary under projection
      double fc;
      try {
        fc = value(cand);
      } catch (const CollapsedDictionaryError&) {
        continue;
      }
      if (fc <= f - 1e-4 * moved2 / s) {
        alpha = cand;
        const double prev = f;
        f = fc;
        res.trace.push_back(f);
        step = std::min(2.0 * s, 1e3);
        accepted = true;
        done = std::abs(prev - f) < tol * std::max(std::abs(prev), 1e-300);
        break;
      }
    }
    if (!accepted) break;
  }
  res.alpha = alpha;
  return res;
}

}  // namespace kcode
