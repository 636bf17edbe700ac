#include "distdf/loss.hpp"

#include <array>
#include <cmath>
#include <string>

#include "distdf/discrepancy.hpp"
#include "distdf/error.hpp"
#include "distdf/transport.hpp"

namespace distdf {
namespace {

constexpr std::array<std::pair<DiscrepancyKind, std::string_view>, 7> kKindNames{{
    {DiscrepancyKind::bures_wasserstein, "bures_wasserstein"},
    {DiscrepancyKind::mean_only, "mean_only"},
    {DiscrepancyKind::cov_only, "cov_only"},
    {DiscrepancyKind::mmd_linear, "mmd_linear"},
    {DiscrepancyKind::mmd_rbf, "mmd_rbf"},
    {DiscrepancyKind::kl, "kl"},
    {DiscrepancyKind::emd, "emd"},
}};

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

// Cotangent on (μ, Σ) of the row sample → cotangent on the rows, with Σ the
// divisor-B covariance: (1/B)·1·gμᵀ + (2/B)·(Z − μ)·sym(GΣ).
Matrix summary_pullback(const Matrix& samples, const Vector& grad_mean, const Matrix& grad_cov) {
  const double b = static_cast<double>(samples.rows());
  const Vector mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - mean.transpose();
  Matrix out = (2.0 / b) * centered * (0.5 * (grad_cov + grad_cov.transpose()));
  out.rowwise() += (1.0 / b) * grad_mean.transpose();
  return out;
}

struct DistResult {
  double value = 0.0;
  Matrix grad_joint;  // cotangent on Ẑ rows; empty for value-only
};

DistResult compute_dist(const Matrix& z, const Matrix& z_hat, const LossConfig& cfg, bool want_grad) {
  DistResult out;
  const Eigen::Index b = z.rows();
  const Eigen::Index l = z.cols();
  switch (cfg.kind) {
    case DiscrepancyKind::bures_wasserstein:
    case DiscrepancyKind::mean_only:
    case DiscrepancyKind::cov_only: {
      const bool with_mean = cfg.kind != DiscrepancyKind::cov_only;
      const bool with_cov = cfg.kind != DiscrepancyKind::mean_only;
      if (!with_cov || b <= l) {
        auto r = bures_wasserstein_samples(z, z_hat, with_mean, with_cov, want_grad);
        out.value = r.value;
        out.grad_joint = std::move(r.grad_b);
        break;
      }
      const auto sa = GaussianSummary::from_samples(z);
      const auto sb = GaussianSummary::from_samples(z_hat);
      out.value = bures(sa.cov, sb.cov) + (with_mean ? (sa.mean - sb.mean).squaredNorm() : 0.0);
      if (want_grad) {
        auto g = bures_wasserstein_grad(sa, sb, cfg.clamp_eps);
        if (!with_mean) g.mean.setZero();
        out.grad_joint = summary_pullback(z_hat, g.mean, g.cov);
      }
      break;
    }
    case DiscrepancyKind::mmd_linear: {
      if (want_grad) {
        auto r = mmd_linear_grad(z, z_hat);
        out.value = r.value;
        out.grad_joint = std::move(r.grad_b);
      } else {
        out.value = mmd_linear(z, z_hat);
      }
      break;
    }
    case DiscrepancyKind::mmd_rbf: {
      const double h = cfg.rbf_bandwidth ? *cfg.rbf_bandwidth : median_bandwidth(z, z_hat);
      if (want_grad) {
        auto r = mmd_rbf_grad(z, z_hat, h);
        out.value = r.value;
        out.grad_joint = std::move(r.grad_b);
      } else {
        out.value = mmd_rbf(z, z_hat, h);
      }
      break;
    }
    case DiscrepancyKind::kl: {
      const auto sa = GaussianSummary::from_samples(z);
      const auto sb = GaussianSummary::from_samples(z_hat);
      out.value = kl_gaussian(sa, sb, cfg.clamp_eps);
      if (want_grad) {
        const auto g = kl_gaussian_grad(sa, sb, cfg.clamp_eps);
        out.grad_joint = summary_pullback(z_hat, g.mean, g.cov);
      }
      break;
    }
    case DiscrepancyKind::emd: {
      if (want_grad) throw ConfigError("loss.kind: emd is evaluation-only and has no gradient");
      out.value = empirical_wasserstein(z, z_hat, 1);
      break;
    }
  }
  return out;
}

void check_inputs(const Matrix& history, const Matrix& label, const Matrix& forecast, const LossConfig& cfg) {
  cfg.validate();
  require_same_shape(label, forecast, "distdf_loss");
  if (history.rows() != label.rows()) {
    throw DimensionError("distdf_loss: history has " + std::to_string(history.rows()) +
                         " rows, label has " + std::to_string(label.rows()));
  }
  if (label.rows() < 2) {
    throw InsufficientSamplesError("distdf_loss: batch of " + std::to_string(label.rows()) +
                                   " rows; need at least 2");
  }
}

LossReport evaluate(const Matrix& history, const Matrix& label, const Matrix& forecast, const LossConfig& cfg,
                    bool want_grad) {
  check_inputs(history, label, forecast, cfg);
  const Matrix z = concat_joint(history, label);
  const Matrix z_hat = concat_joint(history, forecast);
  const auto mse = mse_loss(label, forecast);
  const bool dist_grad = want_grad && cfg.alpha != 0.0;
  const auto dist = compute_dist(z, z_hat, cfg, dist_grad);

  LossReport r;
  r.dist_term = dist.value;
  r.mse_term = mse.value;
  r.total = cfg.alpha == 0.0 ? mse.value : cfg.alpha * dist.value + (1.0 - cfg.alpha) * mse.value;
  if (want_grad) {
    if (!dist_grad) {
      r.grad_forecast = mse.grad;
    } else {
      r.grad_forecast = cfg.alpha * dist.grad_joint.rightCols(label.cols()) + (1.0 - cfg.alpha) * mse.grad;
    }
  }
  return r;
}

}  // namespace

std::string_view to_string(DiscrepancyKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

DiscrepancyKind parse_discrepancy_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  throw ConfigError("unknown discrepancy kind '" + std::string(name) + "'");
}

bool has_gradient(DiscrepancyKind kind) { return kind != DiscrepancyKind::emd; }

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("loss.alpha: must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (!(clamp_eps >= 0.0) || !std::isfinite(clamp_eps)) {
    throw ConfigError("loss.clamp_eps: must be a finite value >= 0");
  }
  if (kind == DiscrepancyKind::kl && clamp_eps == 0.0) {
    throw ConfigError("loss.clamp_eps: kl needs a positive eigenvalue floor");
  }
  if (rbf_bandwidth && !(*rbf_bandwidth > 0.0)) {
    throw ConfigError("loss.rbf_bandwidth: must be positive");
  }
}

Matrix concat_joint(const Matrix& history, const Matrix& block) {
  if (history.rows() != block.rows()) {
    throw DimensionError("concat_joint: " + std::to_string(history.rows()) + " history rows vs " +
                         std::to_string(block.rows()) + " block rows");
  }
  Matrix out(history.rows(), history.cols() + block.cols());
  out.leftCols(history.cols()) = history;
  out.rightCols(block.cols()) = block;
  return out;
}

MseResult mse_loss(const Matrix& label, const Matrix& forecast) {
  require_same_shape(label, forecast, "mse_loss");
  const double count = static_cast<double>(label.size());
  if (count == 0) throw InsufficientSamplesError("mse_loss: empty input");
  MseResult r{0.0, forecast - label};
  for (Eigen::Index i = 0; i < r.grad.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.grad.cols(); ++j) r.value += r.grad(i, j) * r.grad(i, j);
  }
  r.value /= count;
  r.grad *= 2.0 / count;
  return r;
}

double mae_metric(const Matrix& label, const Matrix& forecast) {
  require_same_shape(label, forecast, "mae_metric");
  if (label.size() == 0) throw InsufficientSamplesError("mae_metric: empty input");
  double s = 0.0;
  for (Eigen::Index i = 0; i < label.rows(); ++i) {
    for (Eigen::Index j = 0; j < label.cols(); ++j) s += std::abs(label(i, j) - forecast(i, j));
  }
  return s / static_cast<double>(label.size());
}

double dist_term(const Matrix& history, const Matrix& label, const Matrix& forecast, const LossConfig& cfg) {
  check_inputs(history, label, forecast, cfg);
  return compute_dist(concat_joint(history, label), concat_joint(history, forecast), cfg, false).value;
}

LossReport distdf_loss(const Matrix& history, const Matrix& label, const Matrix& forecast,
                       const LossConfig& cfg) {
  return evaluate(history, label, forecast, cfg, true);
}

LossReport distdf_value(const Matrix& history, const Matrix& label, const Matrix& forecast,
                        const LossConfig& cfg) {
  return evaluate(history, label, forecast, cfg, false);
}

double autocorrelation_bias(const Vector& residual, const Matrix& sigma_cond) {
  return linalg::mahalanobis_sq(residual, sigma_cond) - residual.squaredNorm();
}

}  // namespace distdf
