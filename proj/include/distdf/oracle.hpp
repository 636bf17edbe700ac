#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "distdf/linalg.hpp"
#include "distdf/loss.hpp"

namespace distdf {

/// Outcome of one property check. `worst` is the measured quantity compared
/// against `tolerance` (its meaning is given in `detail`).
struct PropertyResult {
  std::string name;
  bool passed = false;
  std::size_t cases = 0;
  double worst = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail;
};

namespace oracle {

/// Minimum of Σ cost(i, π(i)) over every permutation; n ≤ 8.
double brute_force_assignment(const Matrix& cost);

/// Central differences of the L_α value with respect to every forecast entry.
Matrix finite_difference(const Matrix& history, const Matrix& label, const Matrix& forecast,
                         const LossConfig& cfg, double step);

/// ‖g − fd‖∞ / ‖fd‖∞ (or ‖g − fd‖∞ when fd vanishes).
double relative_gradient_error(const Matrix& grad, const Matrix& fd);

/// 1-D Bures–Wasserstein against (μ₁−μ₂)² + (σ₁−σ₂)².
PropertyResult bures_1d(std::uint64_t seed, std::size_t cases = 1000);
/// Empirical W₂² of N samples per side against the closed form, d ∈ {1, 2, 3}.
PropertyResult gaussian_vs_empirical(std::uint64_t seed, std::size_t samples = 2048);
/// Σ_x P(x)·W_p(conditionals) ≤ W_p(joints) for p ∈ {1, 2}, with X supports
/// far enough apart that no plan moves mass across X values.
PropertyResult conditional_bound(std::uint64_t seed, std::size_t cases = 100);
/// Equality of the bound at p = 1 on the same instances.
PropertyResult conditional_equality(std::uint64_t seed, std::size_t cases = 100);
/// Joints at distance 0 have every conditional slice at distance 0.
PropertyResult conditional_alignment(std::uint64_t seed, std::size_t cases = 100);
/// Autocorrelation bias vanishes under identity covariance and not under AR(1).
PropertyResult autocorrelation_bias_check(std::uint64_t seed, std::size_t cases = 1000);
/// discrete_ot against brute-force permutations, n = m ≤ 6.
PropertyResult assignment_bruteforce(std::uint64_t seed, std::size_t cases = 200);
/// distdf_loss gradients against central differences.
PropertyResult loss_gradients(std::uint64_t seed, std::size_t seeds_per_shape = 20, double rtol = 1e-4);
/// Partial correlation of residual steps with known correlation 0.6.
PropertyResult partial_correlation_recovery(std::uint64_t seed, Eigen::Index samples = 5000);

/// Suite names accepted by run_suite, in run order.
const std::vector<std::string>& suite_names();
/// Runs one named suite, or every suite for "all". Throws ConfigError on an
/// unknown selector.
std::vector<PropertyResult> run_suite(std::string_view selector, std::uint64_t seed);

}  // namespace oracle
}  // namespace distdf
