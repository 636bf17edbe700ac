#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "distdf/linalg.hpp"

namespace distdf {

enum class DiscrepancyKind { bures_wasserstein, mean_only, cov_only, mmd_linear, mmd_rbf, kl, emd };

std::string_view to_string(DiscrepancyKind kind);
/// Throws ConfigError on an unknown name.
DiscrepancyKind parse_discrepancy_kind(std::string_view name);

/// True when distdf_loss can return an exact gradient for the kind.
/// emd is evaluation-only.
bool has_gradient(DiscrepancyKind kind);

struct LossConfig {
  double alpha = 0.0;
  DiscrepancyKind kind = DiscrepancyKind::bures_wasserstein;
  /// Relative eigenvalue floor: eigenvalues below clamp_eps · max(λ_max, 1)
  /// are raised to it wherever an inverse or log-determinant is needed.
  double clamp_eps = linalg::kDefaultRelativeClamp;
  /// Fixed RBF bandwidth; the median pairwise distance is used when unset.
  std::optional<double> rbf_bandwidth;

  void validate() const;
};

struct LossReport {
  double total = 0.0;
  double dist_term = 0.0;
  double mse_term = 0.0;
  Matrix grad_forecast;  // B×T; empty when only the value was requested
};

struct MseResult {
  double value;
  Matrix grad;
};

/// Row-wise [history | block].
Matrix concat_joint(const Matrix& history, const Matrix& block);

/// Mean of (y − ŷ)² over all B·T entries, with gradient 2(ŷ − y)/(B·T).
MseResult mse_loss(const Matrix& label, const Matrix& forecast);

double mae_metric(const Matrix& label, const Matrix& forecast);

/// Distributional term between the (history, label) and (history, forecast)
/// joint samples, value only.
double dist_term(const Matrix& history, const Matrix& label, const Matrix& forecast, const LossConfig& cfg);

/// L_α = α·L_dist + (1 − α)·L_mse for one variable's batch, with the exact
/// gradient with respect to the forecast block. The distributional term
/// compares Z = [X, Y] against Ẑ = [X, Ŷ]; only Ẑ depends on the forecast.
LossReport distdf_loss(const Matrix& history, const Matrix& label, const Matrix& forecast,
                       const LossConfig& cfg);

/// Same as distdf_loss without the gradient.
LossReport distdf_value(const Matrix& history, const Matrix& label, const Matrix& forecast,
                        const LossConfig& cfg);

/// ‖r‖²_{Σ⁻¹} − ‖r‖²: the gap between the conditional Gaussian NLL and MSE.
double autocorrelation_bias(const Vector& residual, const Matrix& sigma_cond);

}  // namespace distdf
