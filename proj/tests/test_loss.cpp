#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "distdf/error.hpp"
#include "distdf/loss.hpp"
#include "helpers.hpp"

using namespace distdf;
using testing::normal;

namespace {

Matrix fd_forecast(const Matrix& x, const Matrix& y, const Matrix& yhat, const LossConfig& cfg, double h) {
  Matrix fd(yhat.rows(), yhat.cols()), probe = yhat;
  for (Eigen::Index i = 0; i < yhat.size(); ++i) {
    const double keep = probe.data()[i];
    probe.data()[i] = keep + h;
    const double up = distdf_value(x, y, probe, cfg).total;
    probe.data()[i] = keep - h;
    const double down = distdf_value(x, y, probe, cfg).total;
    probe.data()[i] = keep;
    fd.data()[i] = (up - down) / (2 * h);
  }
  return fd;
}

Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(perm[i]));
  return out;
}

}  // namespace

TEST_CASE("concat_joint") {
  Matrix x(2, 2), y(2, 1);
  x << 1, 2, 3, 4;
  y << 5, 6;
  Matrix expected(2, 3);
  expected << 1, 2, 5, 3, 4, 6;
  CHECK(concat_joint(x, y) == expected);
  CHECK(concat_joint(Matrix(2, 0), y) == y);
  CHECK_THROWS_AS(concat_joint(x, Matrix::Zero(3, 1)), DimensionError);
}

TEST_CASE("mse_loss and mae_metric") {
  Matrix y = Matrix::Zero(1, 1), yhat = Matrix::Constant(1, 1, 2);
  const auto r = mse_loss(y, yhat);
  CHECK(r.value == 4.0);
  CHECK(r.grad(0, 0) == 4.0);
  CHECK(mae_metric(y, yhat) == 2.0);

  const Matrix a = normal(1, 5, 4), b = normal(2, 5, 4);
  CHECK(mae_metric(a * 3.0, b * 3.0) == doctest::Approx(3.0 * mae_metric(a, b)).epsilon(1e-14));
  const auto m = mse_loss(a, b);
  Matrix fd(5, 4), probe = b;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double keep = probe.data()[i];
    probe.data()[i] = keep + 1e-6;
    const double up = mse_loss(a, probe).value;
    probe.data()[i] = keep - 1e-6;
    const double down = mse_loss(a, probe).value;
    probe.data()[i] = keep;
    fd.data()[i] = (up - down) / 2e-6;
  }
  CHECK(testing::gradient_close(m.grad, fd, 1e-7));
  CHECK_THROWS_AS(mse_loss(a, Matrix::Zero(5, 3)), DimensionError);
}

TEST_CASE("alpha = 0 is bit-identical to MSE") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = normal(seed, 16, 8), y = normal(seed + 100, 16, 4), yhat = normal(seed + 200, 16, 4);
    LossConfig cfg;
    cfg.alpha = 0.0;
    const auto report = distdf_loss(x, y, yhat, cfg);
    const auto mse = mse_loss(y, yhat);
    CHECK(report.total == mse.value);
    CHECK(report.grad_forecast == mse.grad);
  }
}

TEST_CASE("forecast equal to label gives zero loss and gradient") {
  for (const auto kind : {DiscrepancyKind::bures_wasserstein, DiscrepancyKind::mean_only, DiscrepancyKind::cov_only,
                          DiscrepancyKind::mmd_linear, DiscrepancyKind::mmd_rbf, DiscrepancyKind::kl}) {
    CAPTURE(to_string(kind));
    const Matrix x = normal(3, 32, 6), y = normal(4, 32, 4);
    LossConfig cfg;
    cfg.alpha = 0.5;
    cfg.kind = kind;
    const auto r = distdf_loss(x, y, y, cfg);
    CHECK(std::abs(r.total) <= 1e-9);
    CHECK(testing::max_abs(r.grad_forecast) <= 1e-6);
  }
}

TEST_CASE("gradient matches finite differences for every differentiable kind") {
  for (const auto kind : {DiscrepancyKind::bures_wasserstein, DiscrepancyKind::mean_only, DiscrepancyKind::cov_only,
                          DiscrepancyKind::mmd_linear, DiscrepancyKind::kl}) {
    for (const double alpha : {0.3, 1.0}) {
      CAPTURE(to_string(kind));
      CAPTURE(alpha);
      const Matrix x = normal(5, 16, 8), y = normal(6, 16, 4), yhat = normal(7, 16, 4);
      LossConfig cfg;
      cfg.alpha = alpha;
      cfg.kind = kind;
      const auto r = distdf_loss(x, y, yhat, cfg);
      CHECK(r.total == distdf_value(x, y, yhat, cfg).total);
      CHECK(testing::gradient_close(r.grad_forecast, fd_forecast(x, y, yhat, cfg, 1e-5), 1e-4));
    }
  }
  // mmd_rbf with a fixed bandwidth; the median heuristic is treated as a constant in the gradient.
  const Matrix x = normal(8, 16, 8), y = normal(9, 16, 4), yhat = normal(10, 16, 4);
  LossConfig cfg;
  cfg.alpha = 0.7;
  cfg.kind = DiscrepancyKind::mmd_rbf;
  cfg.rbf_bandwidth = 2.5;
  CHECK(testing::gradient_close(distdf_loss(x, y, yhat, cfg).grad_forecast, fd_forecast(x, y, yhat, cfg, 1e-5), 1e-5));
}

TEST_CASE("gradient in the wide regime, where B is below the joint dimension") {
  // B = 4 with H + T = 24 routes through the samples formulation.
  const Matrix x = normal(11, 4, 16), y = normal(12, 4, 8), yhat = normal(13, 4, 8);
  LossConfig cfg;
  cfg.alpha = 1.0;
  CHECK(testing::gradient_close(distdf_loss(x, y, yhat, cfg).grad_forecast, fd_forecast(x, y, yhat, cfg, 1e-5), 1e-4));
}

TEST_CASE("loss is affine in alpha") {
  const Matrix x = normal(14, 16, 8), y = normal(15, 16, 4), yhat = normal(16, 16, 4);
  LossConfig cfg;
  cfg.alpha = 0.0;
  const auto l0 = distdf_loss(x, y, yhat, cfg);
  cfg.alpha = 1.0;
  const auto l1 = distdf_loss(x, y, yhat, cfg);
  for (const double a : {0.1, 0.25, 0.9}) {
    cfg.alpha = a;
    const auto la = distdf_loss(x, y, yhat, cfg);
    CHECK(la.total == doctest::Approx(a * l1.total + (1 - a) * l0.total).epsilon(1e-12));
    CHECK(testing::max_abs(la.grad_forecast - (a * l1.grad_forecast + (1 - a) * l0.grad_forecast)) <= 1e-12);
    CHECK(la.dist_term == doctest::Approx(l1.dist_term).epsilon(1e-12));
    CHECK(la.mse_term == doctest::Approx(l0.mse_term).epsilon(1e-12));
  }
}

TEST_CASE("row permutation and label/forecast swap invariance") {
  const Matrix x = normal(17, 12, 5), y = normal(18, 12, 3), yhat = normal(19, 12, 3);
  LossConfig cfg;
  cfg.alpha = 0.6;
  const std::vector<std::size_t> perm{3, 7, 0, 11, 5, 1, 9, 2, 10, 4, 8, 6};
  const auto base = distdf_loss(x, y, yhat, cfg);
  const auto shuffled = distdf_loss(permute_rows(x, perm), permute_rows(y, perm), permute_rows(yhat, perm), cfg);
  CHECK(shuffled.total == doctest::Approx(base.total).epsilon(1e-11));
  CHECK(testing::max_abs(shuffled.grad_forecast - permute_rows(base.grad_forecast, perm)) <= 1e-11);
  // BW is symmetric in its arguments, as is MSE.
  CHECK(distdf_value(x, yhat, y, cfg).total == doctest::Approx(base.total).epsilon(1e-8));
}

TEST_CASE("autocorrelation_bias") {
  Vector r(2);
  r << 1, 1;
  Matrix s(2, 2);
  s << 1, 0.5, 0.5, 1;
  CHECK(autocorrelation_bias(r, s) == doctest::Approx(-2.0 / 3.0));
  CHECK(std::abs(autocorrelation_bias(r, Matrix::Identity(2, 2))) <= 1e-15);
}

TEST_CASE("input validation") {
  const Matrix x = normal(20, 1, 4), y = normal(21, 1, 2);
  LossConfig cfg;
  cfg.alpha = 0.5;
  CHECK_THROWS(distdf_loss(x, y, y, cfg));  // B < 2
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.alpha = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  const Matrix xb = normal(22, 8, 4), yb = normal(23, 8, 2), yh = normal(24, 8, 2);
  cfg.alpha = 0.5;
  cfg.kind = DiscrepancyKind::emd;
  CHECK(!has_gradient(cfg.kind));
  CHECK(distdf_value(xb, yb, yh, cfg).total > 0.0);
  CHECK_THROWS(distdf_loss(xb, yb, yh, cfg));
  CHECK_THROWS_AS(parse_discrepancy_kind("nope"), ConfigError);
  CHECK(parse_discrepancy_kind("bures_wasserstein") == DiscrepancyKind::bures_wasserstein);
}
