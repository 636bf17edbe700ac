#pragma once

#include "distdf/linalg.hpp"
#include "distdf/transport.hpp"

namespace distdf {

/// First- and second-order summary of an empirical joint sample.
struct GaussianSummary {
  Vector mean;
  Matrix cov;

  static GaussianSummary from_samples(const Matrix& samples);
  Eigen::Index dim() const { return mean.size(); }
};

struct GaussianGradient {
  Vector mean;  // ∂/∂μ_b
  Matrix cov;   // ∂/∂Σ_b, symmetric
};

/// Value and gradient with respect to the rows of the second sample set.
struct SampleDiscrepancy {
  double value = 0.0;
  Matrix grad_b;
};

/// Tr Σa + Tr Σb − 2 Tr (Σa^½ Σb Σa^½)^½, floored at 0. `clamp_eps` floors
/// the eigenvalues of Σa inside the inner square root; the outer root only
/// discards negative rounding.
double bures(const Matrix& sigma_a, const Matrix& sigma_b, double clamp_eps = 0.0);

/// Squared 2-Wasserstein distance between N(μa, Σa) and N(μb, Σb).
double bures_wasserstein(const GaussianSummary& a, const GaussianSummary& b);

/// Gradient of bures_wasserstein with respect to (μb, Σb). The Σb part is
/// I − Σa^½ (Σa^½ Σb Σa^½)^{-½} Σa^½ with the inverse root's eigenvalues
/// floored at rel_clamp · max(λ_max, 1).
GaussianGradient bures_wasserstein_grad(const GaussianSummary& a, const GaussianSummary& b,
                                        double rel_clamp = linalg::kDefaultRelativeClamp);

/// Bures–Wasserstein between the Gaussian summaries of two equal-size sample
/// sets, computed in sample space: Tr (Σa^½ Σb Σa^½)^½ equals the nuclear
/// norm of the B×B cross-Gram matrix of the centered samples. Cost is
/// O(B²L + B³), so this is the route used when B ≤ L.
SampleDiscrepancy bures_wasserstein_samples(const Matrix& a, const Matrix& b, bool include_mean,
                                            bool include_cov, bool want_grad);

/// ‖mean(a) − mean(b)‖².
double mmd_linear(const Matrix& samples_a, const Matrix& samples_b);
SampleDiscrepancy mmd_linear_grad(const Matrix& samples_a, const Matrix& samples_b);

/// Median pairwise Euclidean distance over the stacked rows of a and b
/// (1 when the median is 0).
double median_bandwidth(const Matrix& samples_a, const Matrix& samples_b);

/// Biased (V-statistic) MMD² with k(x, y) = exp(−‖x − y‖² / (2·bandwidth²)).
double mmd_rbf(const Matrix& samples_a, const Matrix& samples_b, double bandwidth);
/// Gradient for a fixed bandwidth.
SampleDiscrepancy mmd_rbf_grad(const Matrix& samples_a, const Matrix& samples_b, double bandwidth);

/// KL(N(μa, Σa) ‖ N(μb, Σb)) with both covariances' eigenvalues floored at
/// rel_clamp · max(λ_max, 1).
double kl_gaussian(const GaussianSummary& a, const GaussianSummary& b,
                   double rel_clamp = linalg::kDefaultRelativeClamp);
GaussianGradient kl_gaussian_grad(const GaussianSummary& a, const GaussianSummary& b,
                                  double rel_clamp = linalg::kDefaultRelativeClamp);

}  // namespace distdf
