#include "kcode/coders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kcode {

namespace {

void check_query(const GramBundle& g, Index query) {
  if (query < 0 || query >= g.queries())
    throw DimensionError("query index out of range");
  if (g.atoms() < 1) throw DimensionError("empty dictionary");
}

// Locality weights for exact LLC: E_ii = exp(sigma (d_i - d_min)). The shift
// by the smallest distance keeps the exponent bounded; it rescales the prior
// by a query-dependent positive constant, so gamma is tuned per dataset.
Vector llc_locality_weights(const CodingProblem& p, Index query) {
  const Index n = p.gram.atoms();
  Vector d(n);
  for (Index j = 0; j < n; ++j)
    d[j] = std::sqrt(rkhs_distance_sq(p.gram, query, j));
  const double dmin = d.minCoeff();
  return ((d.array() - dmin) * p.sigma).exp();
}

// Atom indices ordered by RKHS distance, ties by smaller index; first nB.
std::vector<Index> nearest_atoms(const CodingProblem& p, Index query,
                                 Index nB) {
  const Index n = p.gram.atoms();
  std::vector<Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> d(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j)
    d[static_cast<size_t>(j)] = rkhs_distance_sq(p.gram, query, j);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return d[static_cast<size_t>(a)] < d[static_cast<size_t>(b)];
  });
  order.resize(static_cast<size_t>(nB));
  return order;
}

// Equality-constrained solve: minimize y'(S/2)y - rhs'y s.t. sum(y) = 1,
// with S = 2(quadratic block) + ridge already applied. Solved by block
// elimination through one symmetric factorization.
Vector constrained_quadratic(const Matrix& s, const Vector& rhs) {
  const Index n = s.rows();
  Matrix stacked(n, 2);
  stacked.col(0) = rhs;
  stacked.col(1) = Vector::Ones(n);
  Matrix z;
  try {
    z = ridge_solve(s, stacked, 0.0);
  } catch (const NumericError&) {
    throw NumericError("kernel LLC: singular KKT system after ridge");
  }
  const double denom = z.col(1).sum();
  if (denom == 0.0)
    throw NumericError("kernel LLC: singular KKT system after ridge");
  const double lambda = (z.col(0).sum() - 1.0) / denom;
  return z.col(0) - lambda * z.col(1);
}

Vector kllc_exact_impl(const CodingProblem& p, Index query,
                       const Matrix* qAdd, const Vector* bAdd) {
  check_query(p.gram, query);
  if (p.sigma < 0.0 || p.gamma < 0.0)
    throw NumericError("kernel LLC: sigma and gamma must be >= 0");
  const Index n = p.gram.atoms();
  Vector e = llc_locality_weights(p, query);
  Matrix h = 2.0 * p.gram.kDD;
  h.diagonal() += 2.0 * p.gamma * e.array().square().matrix();
  if (qAdd) h += 2.0 * *qAdd;
  Vector rhs = 2.0 * p.gram.kxD.col(query);
  if (bAdd) rhs += 2.0 * *bAdd;
  h.diagonal().array() += p.epsLLC * h.trace() / static_cast<double>(n);
  return constrained_quadratic(h, rhs);
}

Vector kllc_approx_impl(const CodingProblem& p, Index query,
                        const Matrix* qAdd, const Vector* bAdd) {
  check_query(p.gram, query);
  const Index n = p.gram.atoms();
  if (p.nB < 1 || p.nB > n)
    throw DimensionError("approximate LLC: nB must be in [1, N]");
  const std::vector<Index> support = nearest_atoms(p, query, p.nB);
  Vector y = Vector::Zero(n);
  if (p.nB == 1) {
    y[support[0]] = 1.0;
    return y;
  }
  const Index m = p.nB;
  if (qAdd || bAdd) {
    // Supervised augmentation breaks the shift invariance behind the C-form
    // trick; solve the local equality-constrained system directly.
    Matrix h(m, m);
    for (Index j = 0; j < m; ++j)
      for (Index i = 0; i <= j; ++i) {
        double v = 2.0 * p.gram.kDD(support[static_cast<size_t>(i)],
                                    support[static_cast<size_t>(j)]);
        if (qAdd)
          v += 2.0 * (*qAdd)(support[static_cast<size_t>(i)],
                             support[static_cast<size_t>(j)]);
        h(i, j) = v;
        h(j, i) = v;
      }
    Vector rhs(m);
    for (Index i = 0; i < m; ++i) {
      rhs[i] = 2.0 * p.gram.kxD(support[static_cast<size_t>(i)], query);
      if (bAdd) rhs[i] += 2.0 * (*bAdd)[support[static_cast<size_t>(i)]];
    }
    h.diagonal().array() += p.epsLLC * h.trace() / static_cast<double>(m);
    Vector local = constrained_quadratic(h, rhs);
    for (Index i = 0; i < m; ++i) y[support[static_cast<size_t>(i)]] = local[i];
    return y;
  }
  // C_ij = (phi(x) - phi(b_i))'(phi(x) - phi(b_j)), symmetric by
  // construction.
  const double kxx = p.gram.kxx[query];
  Matrix c(m, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i <= j; ++i) {
      const Index ai = support[static_cast<size_t>(i)];
      const Index aj = support[static_cast<size_t>(j)];
      const double v = p.gram.kDD(ai, aj) - p.gram.kxD(ai, query) -
                       p.gram.kxD(aj, query) + kxx;
      c(i, j) = v;
      c(j, i) = v;
    }
  const double ridge = p.epsLLC * c.trace() / static_cast<double>(m);
  Vector yp = ridge_solve(c, Matrix::Ones(m, 1), ridge).col(0);
  const double s = yp.sum();
  if (std::abs(s) <= 1e-14 * std::max(1.0, yp.lpNorm<1>()))
    throw NumericError("approximate LLC: degenerate normalization "
                       "(local solution sums to zero)");
  for (Index i = 0; i < m; ++i) y[support[static_cast<size_t>(i)]] = yp[i] / s;
  return y;
}

Vector ksc_impl(const CodingProblem& p, const Matrix& qc, Index query,
                const Matrix* qAdd, const Vector* bAdd) {
  check_query(p.gram, query);
  if (p.gamma < 0.0) throw NumericError("sparse coding: gamma must be >= 0");
  Vector b = p.gram.kxD.col(query);
  if (!qAdd && !bAdd) return lasso_solve(qc, b, p.gamma);
  Matrix q = qc;
  if (qAdd) q += *qAdd;
  if (bAdd) b += *bAdd;
  return lasso_solve(q, b, p.gamma);
}

}  // namespace

CodeConstraint constraint_for(Scheme scheme) {
  switch (scheme) {
    case Scheme::kbow_hard:
      return CodeConstraint::one_hot;
    case Scheme::kbow_soft:
      return CodeConstraint::simplex;
    case Scheme::ksc:
      return CodeConstraint::none;
    case Scheme::kllc_exact:
    case Scheme::kllc_approx:
      return CodeConstraint::sum_to_one;
  }
  throw NumericError("unknown coding scheme");
}

const char* scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kbow_hard:
      return "kbow_hard";
    case Scheme::kbow_soft:
      return "kbow_soft";
    case Scheme::ksc:
      return "ksc";
    case Scheme::kllc_exact:
      return "kllc_exact";
    case Scheme::kllc_approx:
      return "kllc_approx";
  }
  throw NumericError("unknown coding scheme");
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "kbow_hard") return Scheme::kbow_hard;
  if (name == "kbow_soft") return Scheme::kbow_soft;
  if (name == "ksc") return Scheme::ksc;
  if (name == "kllc_exact") return Scheme::kllc_exact;
  if (name == "kllc_approx") return Scheme::kllc_approx;
  throw ParseError("unknown coding scheme '" + name + "'");
}

double rkhs_distance_sq(const GramBundle& gram, Index query, Index atom) {
  check_query(gram, query);
  if (atom < 0 || atom >= gram.atoms())
    throw DimensionError("atom index out of range");
  const double v =
      gram.kxx[query] - 2.0 * gram.kxD(atom, query) + gram.kDD(atom, atom);
  return v > 0.0 ? v : 0.0;
}

Vector encode_kbow_hard(const CodingProblem& p, Index query) {
  check_query(p.gram, query);
  const Index n = p.gram.atoms();
  Index best = 0;
  double best_d = rkhs_distance_sq(p.gram, query, 0);
  for (Index j = 1; j < n; ++j) {
    const double d = rkhs_distance_sq(p.gram, query, j);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  Vector y = Vector::Zero(n);
  y[best] = 1.0;
  return y;
}

Vector encode_kbow_soft(const CodingProblem& p, Index query) {
  check_query(p.gram, query);
  if (!(p.sigma > 0.0))
    throw NumericError("soft bag of words: sigma must be > 0");
  const Index n = p.gram.atoms();
  Vector d(n);
  for (Index j = 0; j < n; ++j) d[j] = rkhs_distance_sq(p.gram, query, j);
  const double dmin = d.minCoeff();
  Vector y = ((d.array() - dmin) * -p.sigma).exp();
  return y / y.sum();
}

Vector encode_ksc(const CodingProblem& p, const PsdFactor& factor,
                  Index query) {
  return ksc_impl(p, factor.reconstruct(), query, nullptr, nullptr);
}

Vector encode_kllc_exact(const CodingProblem& p, Index query) {
  return kllc_exact_impl(p, query, nullptr, nullptr);
}

Vector encode_kllc_approx(const CodingProblem& p, Index query) {
  return kllc_approx_impl(p, query, nullptr, nullptr);
}

Vector encode_ksc_augmented(const CodingProblem& p, const PsdFactor& factor,
                            Index query, const Matrix& qAdd,
                            const Vector& bAdd) {
  return ksc_impl(p, factor.reconstruct(), query, &qAdd, &bAdd);
}

Vector encode_kllc_exact_augmented(const CodingProblem& p, Index query,
                                   const Matrix& qAdd, const Vector& bAdd) {
  return kllc_exact_impl(p, query, &qAdd, &bAdd);
}

Vector encode_kllc_approx_augmented(const CodingProblem& p, Index query,
                                    const Matrix& qAdd, const Vector& bAdd) {
  return kllc_approx_impl(p, query, &qAdd, &bAdd);
}

CodeMatrix encode_batch(const CodingProblem& p, Scheme scheme, int threads) {
  const Index m = p.gram.queries();
  CodeMatrix out;
  out.constraint = constraint_for(scheme);
  out.y.resize(p.gram.atoms(), m);
  if (m == 0) return out;

  if (scheme == Scheme::ksc) {
    const PsdFactor factor = psd_factor(p.gram.kDD);
    const Matrix qc = factor.reconstruct();
    parallel_for(m, threads, [&](Index q) {
      out.y.col(q) = ksc_impl(p, qc, q, nullptr, nullptr);
    });
    return out;
  }
  parallel_for(m, threads, [&](Index q) {
    switch (scheme) {
      case Scheme::kbow_hard:
        out.y.col(q) = encode_kbow_hard(p, q);
        break;
      case Scheme::kbow_soft:
        out.y.col(q) = encode_kbow_soft(p, q);
        break;
      case Scheme::kllc_exact:
        out.y.col(q) = encode_kllc_exact(p, q);
        break;
      case Scheme::kllc_approx:
        out.y.col(q) = encode_kllc_approx(p, q);
        break;
      case Scheme::ksc:
        break;  // handled above
    }
  });
  return out;
}

double coding_objective(const CodingProblem& p, Scheme scheme, Index query,
                        const Vector& y) {
  check_query(p.gram, query);
  double v = p.gram.kxx[query] - 2.0 * y.dot(p.gram.kxD.col(query)) +
             y.dot(p.gram.kDD * y);
  switch (scheme) {
    case Scheme::ksc:
      v += p.gamma * y.lpNorm<1>();
      break;
    case Scheme::kllc_exact: {
      Vector e = llc_locality_weights(p, query);
      v += p.gamma * (e.array() * y.array()).matrix().squaredNorm();
      break;
    }
    default:
      break;
  }
  return v;
}

}  // namespace kcode
