#include "distdf/discrepancy.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "distdf/error.hpp"

namespace distdf {
namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": dimension " + std::to_string(a) + " vs " +
                         std::to_string(b));
  }
}

void require_summary(const GaussianSummary& s, const char* what) {
  linalg::require_square(s.cov, what);
  require_same_dim(s.mean.size(), s.cov.rows(), what);
}

Vector column_means(const Matrix& x) {
  Vector mean = Vector::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) mean += x.row(i).transpose();
  return mean / static_cast<double>(x.rows());
}

double sum_sqrt_nonneg(const Vector& eigenvalues) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) s += std::sqrt(std::max(eigenvalues(k), 0.0));
  return s;
}

}  // namespace

GaussianSummary GaussianSummary::from_samples(const Matrix& samples) {
  auto mc = linalg::mean_and_cov(samples);
  return {std::move(mc.mean), std::move(mc.cov)};
}

double bures(const Matrix& sigma_a, const Matrix& sigma_b, double clamp_eps) {
  linalg::require_square(sigma_a, "bures");
  linalg::require_square(sigma_b, "bures");
  require_same_dim(sigma_a.rows(), sigma_b.rows(), "bures");
  if (sigma_a.size() == 0) return 0.0;
  const Matrix root_a = linalg::psd_sqrt(sigma_a, clamp_eps);
  const Matrix inner = root_a * sigma_b * root_a;
  const auto eig = linalg::sym_eig(inner);
  const double value = sigma_a.trace() + sigma_b.trace() - 2.0 * sum_sqrt_nonneg(eig.eigenvalues);
  return std::max(value, 0.0);
}

double bures_wasserstein(const GaussianSummary& a, const GaussianSummary& b) {
  require_summary(a, "bures_wasserstein");
  require_summary(b, "bures_wasserstein");
  require_same_dim(a.dim(), b.dim(), "bures_wasserstein");
  return (a.mean - b.mean).squaredNorm() + bures(a.cov, b.cov);
}

GaussianGradient bures_wasserstein_grad(const GaussianSummary& a, const GaussianSummary& b,
                                        double rel_clamp) {
  require_summary(a, "bures_wasserstein_grad");
  require_summary(b, "bures_wasserstein_grad");
  require_same_dim(a.dim(), b.dim(), "bures_wasserstein_grad");
  const Eigen::Index l = a.dim();

  GaussianGradient g;
  g.mean = 2.0 * (b.mean - a.mean);
  const Matrix root_a = linalg::psd_sqrt(a.cov, 0.0);
  const auto eig = linalg::sym_eig(root_a * b.cov * root_a);
  const double floor = linalg::clamp_floor(eig.eigenvalues, rel_clamp);
  const Matrix inv_root =
      linalg::spectral_apply(eig, [floor](double mu) { return 1.0 / std::sqrt(std::max(mu, floor)); });
  const Matrix transport_map = root_a * inv_root * root_a;
  g.cov = Matrix::Identity(l, l) - 0.5 * (transport_map + transport_map.transpose());
  return g;
}

SampleDiscrepancy bures_wasserstein_samples(const Matrix& a, const Matrix& b, bool include_mean,
                                            bool include_cov, bool want_grad) {
  require_same_dim(a.cols(), b.cols(), "bures_wasserstein_samples");
  if (a.rows() < 2 || b.rows() < 2) {
    throw InsufficientSamplesError("bures_wasserstein_samples: need at least 2 rows per sample set");
  }
  const double na = static_cast<double>(a.rows());
  const double nb = static_cast<double>(b.rows());
  const Vector mean_a = column_means(a);
  const Vector mean_b = column_means(b);

  SampleDiscrepancy out;
  if (want_grad) out.grad_b = Matrix::Zero(b.rows(), b.cols());

  if (include_mean) {
    const Vector diff = mean_b - mean_a;
    out.value += diff.squaredNorm();
    if (want_grad) out.grad_b.rowwise() += (2.0 / nb) * diff.transpose();
  }
  if (include_cov) {
    const Matrix ac = a.rowwise() - mean_a.transpose();
    const Matrix bc = b.rowwise() - mean_b.transpose();
    const double norm = 1.0 / std::sqrt(na * nb);
    const Eigen::MatrixXd cross = norm * (bc * ac.transpose());
    const unsigned options = want_grad ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(cross, options);
    const Vector& s = svd.singularValues();
    double nuclear = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) nuclear += s(k);
    const double cov_value = ac.squaredNorm() / na + bc.squaredNorm() / nb - 2.0 * nuclear;
    out.value += std::max(cov_value, 0.0);
    if (want_grad) {
      // Polar factor on the numerically nonzero singular values.
      const double cutoff = (s.size() > 0 ? s(0) : 0.0) * 1e-13 * static_cast<double>(std::max(a.rows(), b.rows()));
      Eigen::Index rank = 0;
      while (rank < s.size() && s(rank) > cutoff) ++rank;
      const Eigen::MatrixXd polar =
          svd.matrixU().leftCols(rank) * svd.matrixV().leftCols(rank).transpose();
      out.grad_b += (2.0 / nb) * bc - (2.0 * norm) * (polar * ac);
    }
  }
  return out;
}

double mmd_linear(const Matrix& samples_a, const Matrix& samples_b) {
  require_same_dim(samples_a.cols(), samples_b.cols(), "mmd_linear");
  if (samples_a.rows() == 0 || samples_b.rows() == 0) throw InsufficientSamplesError("mmd_linear: empty sample set");
  return (column_means(samples_a) - column_means(samples_b)).squaredNorm();
}

SampleDiscrepancy mmd_linear_grad(const Matrix& samples_a, const Matrix& samples_b) {
  SampleDiscrepancy out;
  out.value = mmd_linear(samples_a, samples_b);
  const Vector diff = column_means(samples_b) - column_means(samples_a);
  out.grad_b = Matrix::Zero(samples_b.rows(), samples_b.cols());
  out.grad_b.rowwise() += (2.0 / static_cast<double>(samples_b.rows())) * diff.transpose();
  return out;
}

double median_bandwidth(const Matrix& samples_a, const Matrix& samples_b) {
  require_same_dim(samples_a.cols(), samples_b.cols(), "median_bandwidth");
  Matrix all(samples_a.rows() + samples_b.rows(), samples_a.cols());
  all << samples_a, samples_b;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(all.rows() * (all.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < all.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < all.rows(); ++j) dist.push_back((all.row(i) - all.row(j)).norm());
  }
  if (dist.empty()) return 1.0;
  std::sort(dist.begin(), dist.end());
  const std::size_t n = dist.size();
  const double median = n % 2 == 1 ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);
  return median > 0.0 ? median : 1.0;
}

namespace {

double kernel_mean(const Matrix& x, const Matrix& y, double inv_two_h2) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < y.rows(); ++j) {
      total += std::exp(-(x.row(i) - y.row(j)).squaredNorm() * inv_two_h2);
    }
  }
  return total / (static_cast<double>(x.rows()) * static_cast<double>(y.rows()));
}

void check_rbf(const Matrix& a, const Matrix& b, double bandwidth) {
  require_same_dim(a.cols(), b.cols(), "mmd_rbf");
  if (!(bandwidth > 0.0)) throw InputError("mmd_rbf: bandwidth must be positive");
  if (a.rows() == 0 || b.rows() == 0) throw InsufficientSamplesError("mmd_rbf: empty sample set");
}

}  // namespace

double mmd_rbf(const Matrix& samples_a, const Matrix& samples_b, double bandwidth) {
  check_rbf(samples_a, samples_b, bandwidth);
  const double c = 1.0 / (2.0 * bandwidth * bandwidth);
  return kernel_mean(samples_a, samples_a, c) + kernel_mean(samples_b, samples_b, c) -
         2.0 * kernel_mean(samples_a, samples_b, c);
}

SampleDiscrepancy mmd_rbf_grad(const Matrix& samples_a, const Matrix& samples_b, double bandwidth) {
  check_rbf(samples_a, samples_b, bandwidth);
  SampleDiscrepancy out;
  out.value = mmd_rbf(samples_a, samples_b, bandwidth);
  const double c = 1.0 / (2.0 * bandwidth * bandwidth);
  const double h2 = bandwidth * bandwidth;
  const double na = static_cast<double>(samples_a.rows());
  const double nb = static_cast<double>(samples_b.rows());
  out.grad_b = Matrix::Zero(samples_b.rows(), samples_b.cols());
  // ∂k(x, y)/∂x = −k(x, y)·(x − y)/h².
  for (Eigen::Index i = 0; i < samples_b.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples_b.rows(); ++j) {
      const auto diff = samples_b.row(i) - samples_b.row(j);
      const double k = std::exp(-diff.squaredNorm() * c);
      out.grad_b.row(i) -= (2.0 / (nb * nb)) * (k / h2) * diff;
    }
    for (Eigen::Index j = 0; j < samples_a.rows(); ++j) {
      const auto diff = samples_b.row(i) - samples_a.row(j);
      const double k = std::exp(-diff.squaredNorm() * c);
      out.grad_b.row(i) += (2.0 / (na * nb)) * (k / h2) * diff;
    }
  }
  return out;
}

namespace {

struct ClampedGaussian {
  SpectralDecomposition eig;
  Vector clamped;  // floored eigenvalues
  double log_det = 0.0;

  ClampedGaussian(const Matrix& cov, double rel) : eig(linalg::sym_eig(cov)) {
    const double floor = linalg::clamp_floor(eig.eigenvalues, rel);
    clamped = eig.eigenvalues.cwiseMax(floor);
    for (Eigen::Index k = 0; k < clamped.size(); ++k) log_det += std::log(clamped(k));
  }

  Matrix matrix() const { return eig.eigenvectors * clamped.asDiagonal() * eig.eigenvectors.transpose(); }
  Matrix inverse() const {
    return eig.eigenvectors * clamped.cwiseInverse().asDiagonal() * eig.eigenvectors.transpose();
  }
};

void check_kl(const GaussianSummary& a, const GaussianSummary& b, double rel) {
  require_summary(a, "kl_gaussian");
  require_summary(b, "kl_gaussian");
  require_same_dim(a.dim(), b.dim(), "kl_gaussian");
  if (!(rel > 0.0)) throw InputError("kl_gaussian: clamp must be positive");
}

}  // namespace

double kl_gaussian(const GaussianSummary& a, const GaussianSummary& b, double rel_clamp) {
  check_kl(a, b, rel_clamp);
  const ClampedGaussian ca(a.cov, rel_clamp);
  const ClampedGaussian cb(b.cov, rel_clamp);
  const Matrix inv_b = cb.inverse();
  const Vector diff = b.mean - a.mean;
  const double trace_term = (inv_b * ca.matrix()).trace();
  const double quad = diff.dot(inv_b * diff);
  return 0.5 * (trace_term + quad - static_cast<double>(a.dim()) + cb.log_det - ca.log_det);
}

GaussianGradient kl_gaussian_grad(const GaussianSummary& a, const GaussianSummary& b, double rel_clamp) {
  check_kl(a, b, rel_clamp);
  const ClampedGaussian ca(a.cov, rel_clamp);
  const ClampedGaussian cb(b.cov, rel_clamp);
  const Matrix inv_b = cb.inverse();
  const Vector diff = b.mean - a.mean;
  GaussianGradient g;
  g.mean = inv_b * diff;
  const Matrix outer = ca.matrix() + diff * diff.transpose();
  const Matrix grad_clamped = 0.5 * (inv_b - inv_b * outer * inv_b);
  g.cov = linalg::clamp_pullback(cb.eig, rel_clamp, grad_clamped);
  return g;
}

}  // namespace distdf
