#include "distdf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "distdf/error.hpp"

namespace distdf::linalg {

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite()) throw InputError(std::string(what) + ": non-finite entry");
}

SpectralDecomposition sym_eig(const Matrix& a) {
  require_square(a, "sym_eig");
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sym_eig: eigensolver did not converge");
  }
  // Eigen returns ascending order; flip to descending.
  const Eigen::Index n = a.rows();
  SpectralDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = solver.eigenvalues()(n - 1 - k);
    out.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

double clamp_floor(const Vector& eigenvalues, double rel) {
  const double top = eigenvalues.size() > 0 ? eigenvalues.maxCoeff() : 0.0;
  return rel * std::max(top, 1.0);
}

Matrix spectral_apply(const SpectralDecomposition& eig, const std::function<double(double)>& f) {
  const Eigen::Index n = eig.eigenvalues.size();
  Matrix scaled = eig.eigenvectors;
  for (Eigen::Index k = 0; k < n; ++k) scaled.col(k) *= f(eig.eigenvalues(k));
  Matrix out = scaled * eig.eigenvectors.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix psd_sqrt(const Matrix& a, double clamp_eps) {
  require_square(a, "psd_sqrt");
  if (clamp_eps < 0.0) throw InputError("psd_sqrt: clamp_eps must be >= 0");
  if (a.size() == 0) return a;
  const auto eig = sym_eig(a);
  return spectral_apply(eig, [clamp_eps](double l) { return std::sqrt(std::max(l, clamp_eps)); });
}

MeanCov mean_and_cov(const Matrix& samples) {
  const Eigen::Index b = samples.rows();
  const Eigen::Index l = samples.cols();
  if (b < 2) {
    throw InsufficientSamplesError("mean_and_cov: need at least 2 rows, got " + std::to_string(b));
  }
  MeanCov out;
  out.mean = Vector::Zero(l);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) out.mean(j) += samples(i, j);
  }
  out.mean /= static_cast<double>(b);

  Matrix centered = samples.rowwise() - out.mean.transpose();
  out.cov = Matrix::Zero(l, l);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index r = 0; r < l; ++r) {
      const double cr = centered(i, r);
      for (Eigen::Index c = r; c < l; ++c) out.cov(r, c) += cr * centered(i, c);
    }
  }
  for (Eigen::Index r = 0; r < l; ++r) {
    for (Eigen::Index c = r; c < l; ++c) {
      out.cov(r, c) /= static_cast<double>(b);
      out.cov(c, r) = out.cov(r, c);
    }
  }
  return out;
}

double mahalanobis_sq(const Vector& v, const Matrix& sigma) {
  require_square(sigma, "mahalanobis_sq");
  if (v.size() != sigma.rows()) {
    throw DimensionError("mahalanobis_sq: vector length " + std::to_string(v.size()) +
                         " vs covariance " + std::to_string(sigma.rows()));
  }
  const Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(sigma)};
  if (llt.info() != Eigen::Success) {
    throw SingularMatrixError("mahalanobis_sq: covariance is not positive definite");
  }
  const Vector half = llt.matrixL().solve(v);
  return half.squaredNorm();
}

double frobenius(const Matrix& a) { return a.norm(); }

Matrix clamp_pullback(const SpectralDecomposition& eig, double rel, const Matrix& grad_clamped) {
  const Eigen::Index n = eig.eigenvalues.size();
  const double floor = clamp_floor(eig.eigenvalues, rel);
  const Matrix& v = eig.eigenvectors;
  Matrix inner = v.transpose() * (0.5 * (grad_clamped + grad_clamped.transpose())) * v;

  // Divided differences of f(λ) = max(λ, floor).
  double floor_cotangent = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double li = eig.eigenvalues(i);
    const bool clamped_i = li <= floor;
    if (clamped_i) floor_cotangent += inner(i, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double lj = eig.eigenvalues(j);
      const bool clamped_j = lj <= floor;
      double gamma;
      if (clamped_i && clamped_j) {
        gamma = 0.0;
      } else if (!clamped_i && !clamped_j) {
        gamma = 1.0;
      } else {
        gamma = (std::max(li, floor) - std::max(lj, floor)) / (li - lj);
      }
      inner(i, j) *= gamma;
    }
  }
  Matrix out = v * inner * v.transpose();
  // floor = rel·λ_max once λ_max exceeds 1; dλ_max/dΣ = v₁v₁ᵀ.
  if (n > 0 && eig.eigenvalues(0) > 1.0 && floor_cotangent != 0.0) {
    out += (floor_cotangent * rel) * (v.col(0) * v.col(0).transpose());
  }
  return 0.5 * (out + out.transpose());
}

}  // namespace distdf::linalg
