#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kcode/classify.hpp"
#include "oracles.hpp"

#include <algorithm>

using namespace kcode;

namespace {

GramBundle linear_bundle(const Matrix& atoms, const Matrix& queries) {
  return gram_bundle(KernelSpec::Linear(), SampleSet::Vectors(atoms),
                     SampleSet::Vectors(queries));
}

}  // namespace

TEST_CASE("residual_classify") {
  SUBCASE("one-hot code on orthonormal atoms") {
    const Matrix atoms = Matrix::Identity(4, 4);
    Matrix q = atoms.col(1);
    const GramBundle g = linear_bundle(atoms, q);
    const std::vector<int> labels = {0, 1, 2, 1};
    const ClassResiduals out =
        residual_classify(Vector::Unit(4, 1), g, 0, labels, 3);
    CHECK(out.predicted == 1);
    CHECK(out.residuals[1] == doctest::Approx(-1.0));
    CHECK(out.residuals[0] == doctest::Approx(0.0));
    CHECK(out.residuals[2] == doctest::Approx(0.0));
  }

  SUBCASE("zero code ties break to the smallest class") {
    Rng rng(3);
    const Matrix atoms = oracles::random_matrix(rng, 3, 4);
    const Matrix q = oracles::random_matrix(rng, 3, 1);
    const GramBundle g = linear_bundle(atoms, q);
    const ClassResiduals out =
        residual_classify(Vector::Zero(4), g, 0, {1, 0, 1, 0}, 2);
    CHECK(out.predicted == 0);
    CHECK(out.residuals.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("residuals match the explicit-feature computation") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
      const Matrix atoms = oracles::random_matrix(rng, 4, 6);
      const Vector x = oracles::random_vector(rng, 4);
      const Vector y = oracles::random_vector(rng, 6);
      const std::vector<int> labels = {0, 1, 2, 0, 1, 2};
      const GramBundle g = linear_bundle(atoms, x);
      const ClassResiduals out = residual_classify(y, g, 0, labels, 3);
      for (int s = 0; s < 3; ++s) {
        Vector masked = Vector::Zero(6);
        for (Index j = 0; j < 6; ++j)
          if (labels[static_cast<size_t>(j)] == s) masked[j] = y[j];
        const double explicitResidual =
            (x - atoms * masked).squaredNorm() - x.squaredNorm();
        CHECK(out.residuals[s] ==
              doctest::Approx(explicitResidual).epsilon(1e-10));
      }
    }
  }

  SUBCASE("classes without atoms are excluded from the argmin") {
    const Matrix atoms = Matrix::Identity(3, 3);
    Matrix q(3, 1);
    q << 1.0, 0.0, 0.0;
    const GramBundle g = linear_bundle(atoms, q);
    // Class 0 has no atoms; every populated residual is positive, yet the
    // empty class must not win on its zero placeholder.
    Vector code(3);
    code << -0.5, -0.5, -0.5;
    const ClassResiduals out =
        residual_classify(code, g, 0, {1, 2, 2}, 3);
    CHECK(out.predicted != 0);
    CHECK(out.residuals[0] == 0.0);
    CHECK(out.residuals[1] > 0.0);
    CHECK(out.residuals[2] > 0.0);
  }

  SUBCASE("label validation") {
    const Matrix atoms = Matrix::Identity(2, 2);
    const GramBundle g = linear_bundle(atoms, atoms);
    CHECK_THROWS_AS(residual_classify(Vector::Zero(2), g, 0, {0, 2}, 2),
                    DimensionError);
    CHECK_THROWS_AS(residual_classify(Vector::Zero(2), g, 0, {0}, 2),
                    DimensionError);
  }
}

TEST_CASE("nn_classify") {
  SUBCASE("exact match returns that code's label") {
    Rng rng(5);
    const Matrix codes = oracles::random_matrix(rng, 4, 7);
    const std::vector<int> labels = {3, 1, 4, 1, 5, 9, 2};
    for (Index i = 0; i < 7; ++i)
      CHECK(nn_classify(codes, labels, codes.col(i)) ==
            labels[static_cast<size_t>(i)]);
  }

  SUBCASE("single training sample always wins") {
    Matrix codes(2, 1);
    codes << 0.4, -0.2;
    Vector q(2);
    q << 100.0, 100.0;
    CHECK(nn_classify(codes, {7}, q) == 7);
  }

  SUBCASE("matches a brute-force scan") {
    Rng rng(31);
    for (int t = 0; t < 15; ++t) {
      const Matrix codes = oracles::random_matrix(rng, 3, 9);
      std::vector<int> labels;
      for (int i = 0; i < 9; ++i)
        labels.push_back(static_cast<int>(rng.below(4)));
      const Vector q = oracles::random_vector(rng, 3);
      Index best = 0;
      for (Index i = 1; i < 9; ++i)
        if ((codes.col(i) - q).squaredNorm() <
            (codes.col(best) - q).squaredNorm())
          best = i;
      CHECK(nn_classify(codes, labels, q) ==
            labels[static_cast<size_t>(best)]);
    }
  }

  SUBCASE("permutation invariance up to distance ties") {
    Rng rng(77);
    const Matrix codes = oracles::random_matrix(rng, 3, 8);
    std::vector<int> labels = {0, 1, 2, 3, 4, 5, 6, 7};
    const Vector q = oracles::random_vector(rng, 3);
    const int base = nn_classify(codes, labels, q);
    // Reverse the training order; with distinct distances the winner's
    // label is unchanged.
    Matrix rev(3, 8);
    std::vector<int> revLabels(8);
    for (Index i = 0; i < 8; ++i) {
      rev.col(i) = codes.col(7 - i);
      revLabels[static_cast<size_t>(i)] = labels[static_cast<size_t>(7 - i)];
    }
    CHECK(nn_classify(rev, revLabels, q) == base);
  }

  SUBCASE("empty training set is rejected") {
    CHECK_THROWS_AS(nn_classify(Matrix(3, 0), {}, Vector::Zero(3)),
                    DimensionError);
  }
}

TEST_CASE("evaluate") {
  SUBCASE("all correct and all wrong") {
    CHECK(evaluate({0, 1, 2}, {0, 1, 2}).accuracy == 1.0);
    CHECK(evaluate({1, 0}, {0, 1}).accuracy == 0.0);
  }

  SUBCASE("seven of ten correct") {
    const std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    const std::vector<int> preds = {0, 0, 0, 0, 1, 1, 1, 1, 0, 0};
    const Metrics m = evaluate(preds, labels);
    CHECK(m.accuracy == doctest::Approx(0.7));
    CHECK(m.perClass[0] == doctest::Approx(0.8));
    CHECK(m.perClass[1] == doctest::Approx(0.6));
    CHECK(m.confusion(0, 0) == 4);
    CHECK(m.confusion(0, 1) == 1);
    CHECK(m.confusion(1, 0) == 2);
    CHECK(m.confusion(1, 1) == 3);
  }

  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(evaluate({}, {}), DimensionError);
    CHECK_THROWS_AS(evaluate({0}, {0, 1}), DimensionError);
  }
}
