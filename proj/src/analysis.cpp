#include "distdf/analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "distdf/error.hpp"

namespace distdf {

Matrix ols_residuals(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw DimensionError(fmt::format("ols_residuals: X has {} rows, y has {}", x.rows(), y.rows()));
  }
  if (x.rows() <= x.cols()) {
    throw InsufficientSamplesError(
        fmt::format("ols_residuals: underdetermined ({} samples for {} regressors)", x.rows(), x.cols()));
  }
  Eigen::MatrixXd design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  const Eigen::MatrixXd rhs = y;
  const Eigen::MatrixXd beta = cod.solve(rhs);
  return y - design * beta;
}

Vector ols_residuals(const Matrix& x, const Vector& y) {
  const Matrix col = y;
  return ols_residuals(x, col).col(0);
}

namespace {

Matrix correlation_of_columns(const Matrix& r, const Matrix& reference, std::vector<Eigen::Index>* degenerate) {
  const Eigen::Index t = r.cols();
  const Matrix centered = r.rowwise() - r.colwise().mean();
  Vector norms(t);
  std::vector<bool> flat(static_cast<std::size_t>(t), false);
  for (Eigen::Index j = 0; j < t; ++j) {
    norms(j) = centered.col(j).norm();
    const Vector ref = reference.col(j);
    const double scale = (ref.array() - ref.mean()).matrix().norm();
    if (norms(j) <= 1e-9 * scale || norms(j) == 0.0) {
      flat[static_cast<std::size_t>(j)] = true;
      if (degenerate) degenerate->push_back(j);
    }
  }
  Matrix out = Matrix::Identity(t, t);
  for (Eigen::Index a = 0; a < t; ++a) {
    for (Eigen::Index b = a + 1; b < t; ++b) {
      double c = 0.0;
      if (!flat[static_cast<std::size_t>(a)] && !flat[static_cast<std::size_t>(b)]) {
        c = centered.col(a).dot(centered.col(b)) / (norms(a) * norms(b));
        c = std::clamp(c, -1.0, 1.0);
      }
      out(a, b) = c;
      out(b, a) = c;
    }
  }
  return out;
}

}  // namespace

PartialCorrelationMatrix partial_correlation(const Matrix& x, const Matrix& y) {
  if (x.rows() <= x.cols() + 2) {
    throw InsufficientSamplesError(fmt::format(
        "partial_correlation: need more than H + 2 = {} samples, got {}", x.cols() + 2, x.rows()));
  }
  PartialCorrelationMatrix out;
  out.controlled_dim = x.cols();
  out.sample_count = x.rows();
  const Matrix residuals = ols_residuals(x, y);
  out.matrix = correlation_of_columns(residuals, y, &out.degenerate_columns);
  return out;
}

Matrix pearson_correlation(const Matrix& y) {
  if (y.rows() < 2) throw InsufficientSamplesError("pearson_correlation: need at least 2 rows");
  return correlation_of_columns(y, y, nullptr);
}

double offdiag_exceedance(const Matrix& m, double threshold) {
  linalg::require_square(m, "offdiag_exceedance");
  if (!(threshold >= 0.0)) throw InputError("offdiag_exceedance: threshold must be >= 0");
  const Eigen::Index t = m.rows();
  if (t < 2) return 0.0;
  Eigen::Index over = 0;
  for (Eigen::Index a = 0; a < t; ++a) {
    for (Eigen::Index b = 0; b < t; ++b) {
      if (a != b && std::abs(m(a, b)) > threshold) ++over;
    }
  }
  return static_cast<double>(over) / static_cast<double>(t * (t - 1));
}

}  // namespace distdf
