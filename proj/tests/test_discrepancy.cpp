#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "distdf/discrepancy.hpp"
#include "distdf/error.hpp"
#include "helpers.hpp"

using namespace distdf;
using testing::normal;
using testing::random_spd;

namespace {

GaussianSummary scalar(double mean, double var) {
  return {Vector::Constant(1, mean), Matrix::Constant(1, 1, var)};
}

GaussianSummary random_summary(CounterRng& rng, Eigen::Index d) {
  return {normal(rng, d, 1).col(0), random_spd(rng, d, 0.3)};
}

// Symmetric finite-difference gradient of f over a symmetric matrix argument,
// returned in the convention df = <G, dΣ> with G symmetric.
template <class F>
Matrix sym_fd(const Matrix& s, F&& f, double h) {
  const Eigen::Index d = s.rows();
  Matrix g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      Matrix e = Matrix::Zero(d, d);
      e(i, j) = e(j, i) = 1;
      const double dir = (f(s + h * e) - f(s - h * e)) / (2 * h);
      g(i, j) = g(j, i) = (i == j) ? dir : dir / 2;
    }
  }
  return g;
}

}  // namespace

TEST_CASE("bures examples") {
  CounterRng rng(1);
  const Matrix s = random_spd(rng, 5);
  CHECK(bures(s, s) <= 1e-8);

  Vector a(3), b(3);
  a << 1, 2, 0.5;
  b << 3, 0.1, 0.5;
  const double expected = (a - b).squaredNorm();
  const Matrix da = a.cwiseProduct(a).asDiagonal(), db = b.cwiseProduct(b).asDiagonal();
  CHECK(bures(da, db) == doctest::Approx(expected).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) {
    const Matrix x = random_spd(rng, 4), y = random_spd(rng, 4);
    CHECK(std::abs(bures(x, y) - bures(y, x)) <= 1e-8);
    CHECK(bures(x, y) >= 0.0);
  }
  CHECK_THROWS_AS(bures(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("bures_wasserstein closed forms") {
  CHECK(bures_wasserstein(scalar(0, 1), scalar(3, 4)) == doctest::Approx(10));
  CounterRng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const double m1 = rng.uniform(-3, 3), m2 = rng.uniform(-3, 3), s1 = rng.uniform(0, 3), s2 = rng.uniform(0, 3);
    const double expected = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
    CHECK(std::abs(bures_wasserstein(scalar(m1, s1 * s1), scalar(m2, s2 * s2)) - expected) <= 1e-10);
  }
  const auto g = random_summary(rng, 6);
  CHECK(bures_wasserstein(g, g) <= 1e-8);
  const auto h = random_summary(rng, 6);
  CHECK(std::abs(bures_wasserstein(g, h) - bures_wasserstein(h, g)) <= 1e-8);
}

TEST_CASE("bures agrees with the commuting-case formula") {
  // Commuting covariances: Tr(Σa^½ Σb Σa^½)^½ = Σ √(λa λb) in a shared basis.
  CounterRng rng(3);
  const Matrix q = Eigen::HouseholderQR<Eigen::MatrixXd>(Eigen::MatrixXd(normal(rng, 5, 5))).householderQ();
  Vector la(5), lb(5);
  for (int i = 0; i < 5; ++i) {
    la(i) = rng.uniform(0.1, 3);
    lb(i) = rng.uniform(0.1, 3);
  }
  const Matrix sa = q * la.asDiagonal() * q.transpose(), sb = q * lb.asDiagonal() * q.transpose();
  const double expected = (la.cwiseSqrt() - lb.cwiseSqrt()).squaredNorm();
  CHECK(bures(sa, sb) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("bures_wasserstein_grad: hand cases") {
  const auto a = scalar(1, 4), b = scalar(3, 9);
  const auto g = bures_wasserstein_grad(a, b);
  CHECK(g.mean(0) == doctest::Approx(2 * (3 - 1)));
  CHECK(g.cov(0, 0) == doctest::Approx(1 - 2.0 / 3.0));
  const auto same = bures_wasserstein_grad(a, a);
  CHECK(same.mean.isZero(0.0));
  CHECK(std::abs(same.cov(0, 0)) <= 1e-8);
}

TEST_CASE("bures_wasserstein_grad matches finite differences, dims 2-16, 100 seeds") {
  for (int seed = 0; seed < 100; ++seed) {
    CounterRng rng(static_cast<std::uint64_t>(seed), 4);
    const auto d = static_cast<Eigen::Index>(2 + rng.below(15));
    const auto a = random_summary(rng, d), b = random_summary(rng, d);
    const auto g = bures_wasserstein_grad(a, b);
    CHECK(testing::max_abs(g.cov - g.cov.transpose()) <= 1e-10);
    const Matrix fd = sym_fd(b.cov, [&](const Matrix& s) { return bures_wasserstein(a, {b.mean, s}); }, 1e-5);
    CHECK(testing::gradient_close(g.cov, fd, 1e-4));
    CHECK(testing::max_abs(g.mean - 2 * (b.mean - a.mean)) <= 1e-12);
  }
}

TEST_CASE("sample-space route equals the summary route") {
  CounterRng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng.below(12));
    const auto d = static_cast<Eigen::Index>(1 + rng.below(20));
    const Matrix a = normal(rng, n, d), b = normal(rng, n, d) * 1.5;
    const auto sa = GaussianSummary::from_samples(a), sb = GaussianSummary::from_samples(b);
    const double dense = bures_wasserstein(sa, sb);
    const auto sample = bures_wasserstein_samples(a, b, true, true, true);
    CHECK(sample.value == doctest::Approx(dense).epsilon(1e-8));
    // Dense square roots of rank-deficient covariances pick up √(round-off) terms.
    CHECK(bures_wasserstein_samples(a, b, false, true, false).value == doctest::Approx(bures(sa.cov, sb.cov)).epsilon(1e-6));
    CHECK(bures_wasserstein_samples(a, b, true, false, false).value ==
          doctest::Approx((sa.mean - sb.mean).squaredNorm()).epsilon(1e-12));
    // Gradient on the rows of b against central differences.
    Matrix fd(n, d);
    Matrix probe = b;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double keep = probe(i, j);
        probe(i, j) = keep + 1e-5;
        const double up = bures_wasserstein_samples(a, probe, true, true, false).value;
        probe(i, j) = keep - 1e-5;
        const double down = bures_wasserstein_samples(a, probe, true, true, false).value;
        probe(i, j) = keep;
        fd(i, j) = (up - down) / 2e-5;
      }
    }
    CHECK(testing::gradient_close(sample.grad_b, fd, 1e-4));
  }
}

TEST_CASE("mmd_linear") {
  Matrix a(2, 2), b(2, 2);
  a << -1, 1, 1, -1;
  b << 0, 2, 2, 0;
  CHECK(mmd_linear(a, b) == doctest::Approx(2));
  CHECK(mmd_linear(a, a) == 0.0);
  Matrix swapped = a;
  swapped.row(0).swap(swapped.row(1));
  CHECK(mmd_linear(swapped, b) == doctest::Approx(mmd_linear(a, b)).epsilon(1e-15));
  CHECK_THROWS_AS(mmd_linear(a, Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("mmd_rbf against a naive double loop and hand cases") {
  CounterRng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto m = static_cast<Eigen::Index>(1 + rng.below(8));
    const Matrix a = normal(rng, n, 3), b = normal(rng, m, 3);
    const double bw = rng.uniform(0.3, 3);
    auto k = [&](const auto& x, const auto& y) { return std::exp(-(x - y).squaredNorm() / (2 * bw * bw)); };
    double aa = 0, bb = 0, ab = 0;
    for (Eigen::Index i = 0; i < n; ++i) for (Eigen::Index j = 0; j < n; ++j) aa += k(a.row(i), a.row(j));
    for (Eigen::Index i = 0; i < m; ++i) for (Eigen::Index j = 0; j < m; ++j) bb += k(b.row(i), b.row(j));
    for (Eigen::Index i = 0; i < n; ++i) for (Eigen::Index j = 0; j < m; ++j) ab += k(a.row(i), b.row(j));
    const double naive = aa / (n * n) + bb / (m * m) - 2 * ab / (n * m);
    CHECK(std::abs(mmd_rbf(a, b, bw) - naive) <= 1e-12);
    CHECK(std::abs(mmd_rbf(a, a, bw)) <= 1e-12);
    CHECK(mmd_rbf(a, b, bw) >= -1e-12);
  }
  Matrix x(1, 2), y(1, 2);
  x << 0, 0;
  y << 3, 4;
  CHECK(mmd_rbf(x, y, 2.0) == doctest::Approx(2 - 2 * std::exp(-25.0 / 8.0)));
  CHECK_THROWS(mmd_rbf(x, y, 0.0));
  CHECK_THROWS(mmd_rbf(x, y, -1.0));
}

TEST_CASE("mmd gradients at a fixed bandwidth") {
  CounterRng rng(7);
  const Matrix a = normal(rng, 5, 3), b = normal(rng, 6, 3);
  for (int kind = 0; kind < 2; ++kind) {
    auto value = [&](const Matrix& x) { return kind == 0 ? mmd_linear(a, x) : mmd_rbf(a, x, 1.3); };
    const auto grad = kind == 0 ? mmd_linear_grad(a, b) : mmd_rbf_grad(a, b, 1.3);
    CHECK(grad.value == doctest::Approx(value(b)).epsilon(1e-14));
    Matrix fd(b.rows(), b.cols()), probe = b;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double keep = probe.data()[i];
      probe.data()[i] = keep + 1e-6;
      const double up = value(probe);
      probe.data()[i] = keep - 1e-6;
      const double down = value(probe);
      probe.data()[i] = keep;
      fd.data()[i] = (up - down) / 2e-6;
    }
    CHECK(testing::gradient_close(grad.grad_b, fd, 1e-6));
  }
}

TEST_CASE("median_bandwidth") {
  Matrix a(2, 1), b(1, 1);
  a << 0, 1;
  b << 3;
  // Pairwise distances 1, 3, 2 -> median 2.
  CHECK(median_bandwidth(a, b) == doctest::Approx(2));
  CHECK(median_bandwidth(Matrix::Zero(2, 2), Matrix::Zero(2, 2)) == 1.0);
}

TEST_CASE("kl_gaussian hand cases and asymmetry") {
  CHECK(kl_gaussian(scalar(0, 1), scalar(1, 1)) == doctest::Approx(0.5));
  CounterRng rng(8);
  const auto a = random_summary(rng, 4), b = random_summary(rng, 4);
  CHECK(kl_gaussian(a, a) == doctest::Approx(0).scale(1));
  CHECK(std::abs(kl_gaussian(a, a)) <= 1e-9);
  CHECK(std::abs(kl_gaussian(a, b) - kl_gaussian(b, a)) > 1e-6);
}

TEST_CASE("kl_gaussian agrees with joint diagonalization") {
  CounterRng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto a = random_summary(rng, d), b = random_summary(rng, d);
    // Generalized eigenproblem Σa v = λ Σb v: KL = ½ Σ (λ − 1 − ln λ) + ½ δᵀΣb⁻¹δ.
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(Eigen::MatrixXd(a.cov), Eigen::MatrixXd(b.cov));
    double expected = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double l = ges.eigenvalues()(i);
      expected += 0.5 * (l - 1 - std::log(l));
    }
    const Vector delta = b.mean - a.mean;
    expected += 0.5 * delta.dot(Eigen::MatrixXd(b.cov).ldlt().solve(delta));
    CHECK(kl_gaussian(a, b, 1e-14) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(kl_gaussian(a, b) >= -1e-9);
  }
}

TEST_CASE("kl_gaussian_grad matches finite differences") {
  CounterRng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = static_cast<Eigen::Index>(2 + rng.below(6));
    const auto a = random_summary(rng, d), b = random_summary(rng, d);
    const auto g = kl_gaussian_grad(a, b);
    const Matrix fd = sym_fd(b.cov, [&](const Matrix& s) { return kl_gaussian(a, {b.mean, s}); }, 1e-6);
    CHECK(testing::gradient_close(g.cov, fd, 1e-4));
    Vector fdm(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      Vector up = b.mean, down = b.mean;
      up(i) += 1e-6;
      down(i) -= 1e-6;
      fdm(i) = (kl_gaussian(a, {up, b.cov}) - kl_gaussian(a, {down, b.cov})) / 2e-6;
    }
    CHECK(testing::gradient_close(g.mean, fdm, 1e-5));
  }
}

TEST_CASE("gaussian-vs-empirical convergence at small scale") {
  // Same construction as the oracle suite, at N = 512 and a looser bound.
  CounterRng rng(11);
  const GaussianSummary a{Vector::Zero(2), Matrix::Identity(2, 2)};
  GaussianSummary b{Vector::Constant(2, 1.5), Matrix::Identity(2, 2) * 2.0};
  const Matrix xa = normal(rng, 512, 2);
  const Matrix xb = (normal(rng, 512, 2) * std::sqrt(2.0)).rowwise() + b.mean.transpose();
  const double exact = bures_wasserstein(a, b);
  CHECK(std::abs(empirical_wasserstein(xa, xb, 2) - exact) / exact <= 0.15);
}
