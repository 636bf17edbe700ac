#pragma once

#include <vector>

#include "distdf/linalg.hpp"

namespace distdf {

/// Partial correlation of label steps given the history.
struct PartialCorrelationMatrix {
  Matrix matrix;  // T×T, unit diagonal
  Eigen::Index controlled_dim = 0;
  Eigen::Index sample_count = 0;
  /// Label steps whose residual had zero variance; their off-diagonal entries are 0.
  std::vector<Eigen::Index> degenerate_columns;
};

/// Residuals of y regressed on [1, X] by minimum-norm least squares.
Vector ols_residuals(const Matrix& x, const Vector& y);

/// Column-wise ols_residuals for every column of Y with one factorization.
Matrix ols_residuals(const Matrix& x, const Matrix& y);

/// Entry (t, t') is the Pearson correlation of the residuals of Y_t and Y_t'
/// after regressing both on [1, X].
PartialCorrelationMatrix partial_correlation(const Matrix& x, const Matrix& y);

/// Pearson correlation matrix of the columns of Y.
Matrix pearson_correlation(const Matrix& y);

/// Fraction of off-diagonal entries with |value| > threshold.
double offdiag_exceedance(const Matrix& m, double threshold);

}  // namespace distdf
