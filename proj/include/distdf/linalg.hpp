#pragma once

#include <Eigen/Dense>
#include <functional>

namespace distdf {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted in descending order.
struct SpectralDecomposition {
  Vector eigenvalues;
  Matrix eigenvectors;  // column k pairs with eigenvalues(k)
};

struct MeanCov {
  Vector mean;
  Matrix cov;
};

namespace linalg {

inline constexpr double kDefaultRelativeClamp = 1e-8;

/// Throws DimensionError unless `a` is square.
void require_square(const Matrix& a, const char* what);

/// Throws InputError if any entry is NaN or infinite.
void require_finite(const Matrix& a, const char* what);

/// Symmetric eigendecomposition. The input is symmetrized as (A + Aᵀ)/2 first.
SpectralDecomposition sym_eig(const Matrix& a);

/// Eigenvalue floor used when a square root or inverse must be defined on
/// rank-deficient input: rel · max(λ_max, 1).
double clamp_floor(const Vector& eigenvalues, double rel = kDefaultRelativeClamp);

/// V · diag(f(λ)) · Vᵀ.
Matrix spectral_apply(const SpectralDecomposition& eig, const std::function<double(double)>& f);

/// V · diag(sqrt(max(λ, clamp_eps))) · Vᵀ.
Matrix psd_sqrt(const Matrix& a, double clamp_eps);

/// Sample mean and maximum-likelihood covariance (divisor B) of the rows.
MeanCov mean_and_cov(const Matrix& samples);

/// vᵀ Σ⁻¹ v through a Cholesky factorization.
double mahalanobis_sq(const Vector& v, const Matrix& sigma);

double frobenius(const Matrix& a);

/// Pulls a cotangent on the clamped matrix F = V·diag(max(λ, floor))·Vᵀ back
/// onto the unclamped symmetric input, where floor = rel·max(λ_max, 1).
/// The floor's dependence on λ_max is included.
Matrix clamp_pullback(const SpectralDecomposition& eig, double rel, const Matrix& grad_clamped);

}  // namespace linalg
}  // namespace distdf
