#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kcode/kernels.hpp"
#include "oracles.hpp"

#include <cmath>

using namespace kcode;

namespace {

SampleSet random_vectors(Rng& rng, Index d, Index n, double scale = 1.0) {
  return SampleSet::Vectors(oracles::random_matrix(rng, d, n, scale));
}

double min_max_eig_ratio(const Matrix& g, double& maxEig) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  maxEig = eig.eigenvalues().maxCoeff();
  return eig.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("eval_kernel closed forms") {
  const KernelSpec g1 = KernelSpec::Gaussian(1.0);
  Vector a(3), b(3);
  a << 0.3, -1.2, 0.5;
  b = a;
  CHECK(eval_kernel(g1, a, b) == doctest::Approx(1.0).epsilon(1e-15));

  Vector z(1), o(1);
  z << 0.0;
  o << 1.0;
  CHECK(eval_kernel(g1, z, o) == doctest::Approx(std::exp(-1.0)));

  // Convex combination of identity cases.
  Vector e(2);
  e << 1.0, 0.0;
  const KernelSpec combo = KernelSpec::Combination(
      {KernelSpec::Linear(), KernelSpec::Gaussian(1.0)}, {0.5, 0.5});
  CHECK(eval_kernel(combo, e, e) == doctest::Approx(1.0).epsilon(1e-15));

  const KernelSpec poly = KernelSpec::Polynomial(0.5, 2);
  CHECK(eval_kernel(poly, e, e) == doctest::Approx(2.25));
  const KernelSpec sig = KernelSpec::Sigmoid(1.0, -0.5);
  CHECK(eval_kernel(sig, e, e) == doctest::Approx(std::tanh(0.5)));
}

TEST_CASE("eval_kernel rejects bad inputs") {
  Vector a(2), b(3);
  a.setZero();
  b.setZero();
  CHECK_THROWS_AS(eval_kernel(KernelSpec::Linear(), a, b), DimensionError);
  CHECK_THROWS_AS(eval_kernel(KernelSpec::Gaussian(0.0), a, a), NumericError);
  CHECK_THROWS_AS(eval_kernel(KernelSpec::Gaussian(-1.0), a, a),
                  NumericError);
  // Nested combinations are not allowed.
  KernelSpec inner = KernelSpec::Combination({KernelSpec::Linear()}, {1.0});
  KernelSpec outer = KernelSpec::Combination({inner}, {1.0});
  CHECK_THROWS_AS(outer.validate(), NumericError);
  KernelSpec negw =
      KernelSpec::Combination({KernelSpec::Linear()}, {-0.1});
  CHECK_THROWS_AS(negw.validate(), NumericError);
}

TEST_CASE("gram_matrix known values and exact symmetry") {
  Matrix cols(1, 2);
  cols << 0.0, 1.0;
  const SampleSet s = SampleSet::Vectors(cols);
  const Matrix g = gram_matrix(KernelSpec::Gaussian(1.0), s);
  CHECK(g(0, 0) == doctest::Approx(1.0));
  CHECK(g(1, 1) == doctest::Approx(1.0));
  CHECK(g(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK(g(0, 1) == g(1, 0));

  Matrix id(2, 2);
  id << 1, 0, 0, 1;
  const Matrix gl = gram_matrix(KernelSpec::Linear(), SampleSet::Vectors(id));
  CHECK((gl - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(11);
  const SampleSet r = random_vectors(rng, 4, 9);
  const Matrix gr = gram_matrix(KernelSpec::Gaussian(0.7), r);
  CHECK((gr - gr.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("PSD property of gram matrices on random inputs") {
  Rng rng(29);
  const SampleSet s = random_vectors(rng, 5, 10);
  for (const KernelSpec& spec :
       {KernelSpec::Linear(), KernelSpec::Gaussian(2.0),
        KernelSpec::Polynomial(0.5, 3)}) {
    double maxEig = 0.0;
    const double minEig = min_max_eig_ratio(gram_matrix(spec, s), maxEig);
    CHECK(minEig >= -1e-8 * std::max(maxEig, 1.0));
  }
}

TEST_CASE("combination gram equals weighted member sum exactly") {
  Rng rng(3);
  const SampleSet s = random_vectors(rng, 3, 7);
  const std::vector<KernelSpec> members = {
      KernelSpec::Linear(), KernelSpec::Gaussian(0.5),
      KernelSpec::Sigmoid(0.3, 0.1)};
  const std::vector<double> weights = {0.2, 0.5, 0.3};
  const Matrix combined =
      gram_matrix(KernelSpec::Combination(members, weights), s);
  Matrix manual = Matrix::Zero(7, 7);
  std::vector<Matrix> grams;
  for (const auto& mspec : members) grams.push_back(gram_matrix(mspec, s));
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j) {
      double v = 0.0;
      for (std::size_t l = 0; l < members.size(); ++l)
        v += weights[l] * grams[l](i, j);
      manual(i, j) = v;
    }
  CHECK((combined - manual).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dual_gram identities") {
  Rng rng(17);
  const Index m = 6;
  const SampleSet x = random_vectors(rng, 3, m);
  const KernelSpec spec = KernelSpec::Gaussian(0.8);
  const SampleSet queries = random_vectors(rng, 3, 4);

  SUBCASE("identity coefficients reproduce the training Gram") {
    const GramBundle g = dual_gram(spec, x, Matrix::Identity(m, m), queries);
    const GramBundle direct = gram_bundle(spec, x, queries);
    CHECK((g.kDD - direct.kDD).cwiseAbs().maxCoeff() == 0.0);
    CHECK((g.kxD - direct.kxD).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("column selection picks a submatrix") {
    Matrix sel = Matrix::Zero(m, 2);
    sel(2, 0) = 1.0;
    sel(5, 1) = 1.0;
    const GramBundle g = dual_gram(spec, x, sel, queries);
    const Matrix kxx = gram_matrix(spec, x);
    CHECK(g.kDD(0, 0) == doctest::Approx(kxx(2, 2)).epsilon(1e-15));
    CHECK(g.kDD(0, 1) == doctest::Approx(kxx(2, 5)).epsilon(1e-15));
    CHECK(g.kDD(1, 1) == doctest::Approx(kxx(5, 5)).epsilon(1e-15));
  }

  SUBCASE("linear kernel matches explicitly mapped atoms") {
    const Matrix a = oracles::random_matrix(rng, m, 4);
    const GramBundle g =
        dual_gram(KernelSpec::Linear(), x, a, queries);
    const Matrix mapped = x.vectors() * a;  // d x 4 explicit atoms
    const GramBundle direct = gram_bundle(
        KernelSpec::Linear(), SampleSet::Vectors(mapped), queries);
    CHECK((g.kDD - direct.kDD).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.kxD - direct.kxD).cwiseAbs().maxCoeff() < 1e-10);
  }

  SUBCASE("row mismatch throws") {
    CHECK_THROWS_AS(dual_gram(spec, x, Matrix::Zero(m + 1, 2), queries),
                    DimensionError);
  }
}

TEST_CASE("log-Euclidean RBF kernel on SPD matrices") {
  Matrix i2 = Matrix::Identity(2, 2);
  Matrix d2 = i2 * std::exp(2.0);
  const KernelSpec spec = KernelSpec::LogEuclideanRbf(1.0);
  // |logm(I) - logm(e^2 I)|_F^2 = |2 I|_F^2 = 8.
  CHECK(eval_kernel(spec, SpdDescriptor{i2}, SpdDescriptor{d2}) ==
        doctest::Approx(std::exp(-8.0)));
  CHECK(eval_kernel(spec, SpdDescriptor{i2}, SpdDescriptor{i2}) ==
        doctest::Approx(1.0));

  SUBCASE("non-SPD input is rejected") {
    Matrix neg = i2;
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(eval_kernel(spec, SpdDescriptor{neg}, SpdDescriptor{i2}),
                    NumericError);
    Matrix asym(2, 2);
    asym << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(spd_log(asym), NumericError);
  }

  SUBCASE("kind mismatches are rejected") {
    Vector v(2);
    v.setZero();
    CHECK_THROWS_AS(eval_kernel(spec, v, v), DimensionError);
    std::vector<Matrix> mats = {i2, d2};
    CHECK_THROWS_AS(gram_matrix(KernelSpec::Linear(), SampleSet::Spd(mats)),
                    DimensionError);
  }
}

TEST_CASE("sigmoid kernel may be indefinite but evaluates") {
  Rng rng(5);
  const SampleSet s = random_vectors(rng, 2, 6, 2.0);
  const Matrix g = gram_matrix(KernelSpec::Sigmoid(1.5, -1.0), s);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(g.cwiseAbs().maxCoeff() <= 1.0);
}
