#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "distdf/error.hpp"
#include "distdf/linalg.hpp"
#include "helpers.hpp"

using namespace distdf;
using testing::normal;

TEST_CASE("sym_eig on identity and diagonal inputs") {
  const auto id = linalg::sym_eig(Matrix::Identity(3, 3));
  CHECK(id.eigenvalues.isApprox(Vector::Ones(3)));
  CHECK(linalg::frobenius(id.eigenvectors.transpose() * id.eigenvectors - Matrix::Identity(3, 3)) <= 1e-12);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1;
  d(1, 1) = 4;
  const auto e = linalg::sym_eig(d);
  CHECK(e.eigenvalues(0) == doctest::Approx(4));
  CHECK(e.eigenvalues(1) == doctest::Approx(1));
  CHECK(std::abs(e.eigenvectors(1, 0)) == doctest::Approx(1));
  CHECK(std::abs(e.eigenvectors(0, 1)) == doctest::Approx(1));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices and sorts descending") {
  CounterRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = normal(rng, 5, 5);
    a = (a + a.transpose()).eval();
    const auto e = linalg::sym_eig(a);
    const Matrix back = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
    CHECK(linalg::frobenius(back - a) <= 1e-8 * (1 + linalg::frobenius(a)));
    CHECK(linalg::frobenius(e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(5, 5)) <= 1e-8);
    for (int k = 0; k + 1 < 5; ++k) CHECK(e.eigenvalues(k) >= e.eigenvalues(k + 1));
  }
}

TEST_CASE("sym_eig matches the 2x2 characteristic polynomial") {
  CounterRng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.normal(), b = rng.normal(), c = rng.normal();
    Matrix m(2, 2);
    m << a, b, b, c;
    const double mid = 0.5 * (a + c);
    const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    const auto e = linalg::sym_eig(m);
    CHECK(std::abs(e.eigenvalues(0) - (mid + rad)) <= 1e-12);
    CHECK(std::abs(e.eigenvalues(1) - (mid - rad)) <= 1e-12);
  }
}

TEST_CASE("sym_eig rejects non-square input") {
  CHECK_THROWS_AS(linalg::sym_eig(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("psd_sqrt examples") {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  Matrix expected = Matrix::Zero(2, 2);
  expected(0, 0) = 2;
  expected(1, 1) = 3;
  CHECK(linalg::frobenius(linalg::psd_sqrt(d, 0.0) - expected) <= 1e-14);
  CHECK(linalg::psd_sqrt(Matrix::Zero(3, 3), 0.0).isZero(0.0));
  CHECK_THROWS_AS(linalg::psd_sqrt(Matrix::Zero(3, 2), 0.0), DimensionError);
}

TEST_CASE("psd_sqrt squares back to the input up to 64x64") {
  CounterRng rng(5);
  for (Eigen::Index d : {3, 8, 17, 64}) {
    const Matrix m = normal(rng, d, d);
    const Matrix a = m.transpose() * m;
    const Matrix s = linalg::psd_sqrt(a, 0.0);
    CHECK(linalg::frobenius(s - s.transpose()) <= 1e-12 * linalg::frobenius(s));
    CHECK(linalg::frobenius(s * s - a) <= 1e-7 * linalg::frobenius(a));
  }
}

TEST_CASE("psd_sqrt applies the clamp floor") {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1;
  const Matrix s = linalg::psd_sqrt(a, 0.25);
  CHECK(s(1, 1) == doctest::Approx(0.5));
  CHECK(s(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("mean_and_cov examples") {
  Matrix same(2, 3);
  same << 1, 2, 3, 1, 2, 3;
  CHECK(linalg::mean_and_cov(same).cov.isZero(0.0));

  Matrix z(2, 2);
  z << 0, 0, 2, 2;
  const auto mc = linalg::mean_and_cov(z);
  CHECK(mc.mean.isApprox(Vector::Ones(2)));
  CHECK(linalg::frobenius(mc.cov - Matrix::Ones(2, 2)) <= 1e-15);

  CHECK_THROWS_AS(linalg::mean_and_cov(Matrix::Zero(1, 3)), InsufficientSamplesError);
}

TEST_CASE("mean_and_cov matches a naive double loop and stays PSD") {
  CounterRng rng(6);
  const Matrix x = normal(rng, 7, 4);
  const auto mc = linalg::mean_and_cov(x);
  for (int a = 0; a < 4; ++a) {
    double ma = 0;
    for (int i = 0; i < 7; ++i) ma += x(i, a) / 7.0;
    CHECK(mc.mean(a) == doctest::Approx(ma).epsilon(1e-14));
    for (int b = 0; b < 4; ++b) {
      double s = 0;
      for (int i = 0; i < 7; ++i) s += (x(i, a) - x.col(a).mean()) * (x(i, b) - x.col(b).mean());
      CHECK(std::abs(mc.cov(a, b) - s / 7.0) <= 1e-13);
    }
  }
  // Rank-deficient: B = 3 rows in 10 dimensions.
  const auto thin = linalg::mean_and_cov(normal(rng, 3, 10));
  CHECK(linalg::sym_eig(thin.cov).eigenvalues.minCoeff() >= -1e-10);
}

TEST_CASE("mean_and_cov estimates a known 4-D Gaussian (Monte Carlo)") {
  CounterRng rng(7);
  Matrix l = Matrix::Zero(4, 4);
  l << 1, 0, 0, 0, 0.5, 1, 0, 0, -0.3, 0.2, 0.8, 0, 0.1, 0.4, -0.2, 0.6;
  const Matrix truth = l * l.transpose();
  // B = 64 draws, averaged over 400 batches so the tolerance can be tight.
  Matrix avg = Matrix::Zero(4, 4);
  for (int rep = 0; rep < 400; ++rep) avg += linalg::mean_and_cov(normal(rng, 64, 4) * l.transpose()).cov / 400.0;
  // Divisor B gives E[Σ̂] = (B−1)/B · Σ.
  CHECK(testing::max_abs(avg - truth * (63.0 / 64.0)) <= 0.03);
}

TEST_CASE("mahalanobis_sq examples and oracle") {
  Vector v(2);
  v << 1, 2;
  CHECK(linalg::mahalanobis_sq(v, Matrix::Identity(2, 2)) == doctest::Approx(5).epsilon(1e-15));
  Vector w(2);
  w << 2, 0;
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 1;
  CHECK(linalg::mahalanobis_sq(w, d) == doctest::Approx(1).epsilon(1e-15));

  CounterRng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = testing::random_spd(rng, 4);
    const Vector x = normal(rng, 4, 1).col(0);
    const double explicit_inverse = x.dot(Eigen::MatrixXd(s).inverse() * x);
    CHECK(std::abs(linalg::mahalanobis_sq(x, s) - explicit_inverse) <= 1e-10 * std::max(1.0, explicit_inverse));
    const Vector y = normal(rng, 6, 1).col(0);
    CHECK(linalg::mahalanobis_sq(y, Matrix::Identity(6, 6)) == doctest::Approx(y.squaredNorm()).epsilon(1e-15));
  }
}

TEST_CASE("mahalanobis_sq rejects singular covariance") {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1;
  CHECK_THROWS_AS(linalg::mahalanobis_sq(Vector::Ones(2), s), SingularMatrixError);
  CHECK_THROWS_AS(linalg::mahalanobis_sq(Vector::Ones(3), Matrix::Identity(2, 2)), DimensionError);
}

TEST_CASE("clamp_pullback matches finite differences of a clamped spectral function") {
  // f(A) = <G, clamp(A)> with a rank-deficient A so some eigenvalues sit on the floor.
  CounterRng rng(9);
  const Matrix m = normal(rng, 2, 5);
  Matrix a = m.transpose() * m;
  a *= 3.0;
  const double rel = 1e-3;
  Matrix g = normal(rng, 5, 5);
  g = (g + g.transpose()).eval();
  auto clamped = [&](const Matrix& x) {
    const auto e = linalg::sym_eig(x);
    const double floor = linalg::clamp_floor(e.eigenvalues, rel);
    return linalg::spectral_apply(e, [&](double l) { return std::max(l, floor); });
  };
  const Matrix analytic = linalg::clamp_pullback(linalg::sym_eig(a), rel, g);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i) {
    for (int j = i; j < 5; ++j) {
      Matrix e = Matrix::Zero(5, 5);
      e(i, j) += 1;
      if (i != j) e(j, i) += 1;
      const double fd = ((g.cwiseProduct(clamped(a + h * e))).sum() - (g.cwiseProduct(clamped(a - h * e))).sum()) / (2 * h);
      const double an = (analytic.cwiseProduct(e)).sum();
      CHECK(std::abs(fd - an) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}
