#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "distdf/linalg.hpp"

namespace distdf {

/// T_total × D observations in time order.
struct Series {
  Matrix values;
  std::vector<std::string> variable_names;
  std::vector<std::string> timestamps;  // empty when the source had no date column

  Eigen::Index length() const { return values.rows(); }
  Eigen::Index variables() const { return values.cols(); }
  /// Rows [begin, end).
  Series slice(Eigen::Index begin, Eigen::Index end) const;
};

/// Univariate AR(p): s_t = Σ_k φ_k s_{t−k} + ε_t, ε_t ~ N(0, σ²).
struct ArSpec {
  std::vector<double> coefficients;
  double noise_std = 1.0;
  std::size_t length = 0;
  std::uint64_t seed = 0;
  std::size_t variables = 1;  // independent replicas, one RNG stream each

  /// Throws ConfigError unless the companion matrix has spectral radius < 1.
  void validate() const;
};

double companion_spectral_radius(const std::vector<double>& coefficients);

/// Generates spec.variables independent AR series, discarding 10·p burn-in steps.
Series generate_ar(const ArSpec& spec);

/// Covariance of the next T values of an AR(1) given the history:
/// σ²·φ^{|s−t|}·(1 − φ^{2·min(s,t)})/(1 − φ²), 1-indexed.
Matrix ar1_conditional_cov(double phi, double sigma, Eigen::Index horizon);

/// All windows of one variable: row i of `history` covers
/// [offsets[i], offsets[i] + H) and row i of `label` the following T steps.
struct WindowBatch {
  Matrix history;
  Matrix label;
  std::size_t variable_index = 0;
  std::vector<Eigen::Index> offsets;

  Eigen::Index size() const { return history.rows(); }
  /// Rows selected by index, in the given order.
  WindowBatch select(const std::vector<std::size_t>& rows) const;
};

/// floor((T_total − H − T)/stride) + 1, or 0 if the series is too short.
Eigen::Index window_count(Eigen::Index total, Eigen::Index history, Eigen::Index horizon, Eigen::Index stride);

/// One WindowBatch per variable.
std::vector<WindowBatch> make_windows(const Series& series, Eigen::Index history, Eigen::Index horizon,
                                      Eigen::Index stride = 1);

struct Splits {
  Series train;
  Series val;
  Series test;
};

using SplitRatios = std::array<double, 3>;
inline constexpr SplitRatios kDefaultSplit{0.7, 0.1, 0.2};

/// Contiguous, ordered, non-overlapping segments. Throws if any segment is
/// shorter than min_length.
Splits chronological_split(const Series& series, const SplitRatios& ratios, Eigen::Index min_length = 0);

/// Fixed-length benchmark split. Validation and test borrow the previous
/// `lookback` steps as history, so every step of their own span can be
/// forecast.
struct SplitPreset {
  std::string name;
  std::array<Eigen::Index, 3> steps;            // train / val / test spans
  std::array<Eigen::Index, 3> published_counts;  // forecast origins at lookback 96
};

/// "ett_hour" (12/4/4 months hourly) and "ett_minute" (same span, 15 min).
std::optional<SplitPreset> find_preset(const std::string& name);
Splits preset_split(const Series& series, const SplitPreset& preset, Eigen::Index lookback);

/// Per-variable z-score fitted on the training split.
struct Scaler {
  Vector mean;
  Vector scale;
  std::vector<std::size_t> constant_variables;  // std was 0; scale forced to 1

  Series transform(const Series& s) const;
  Series inverse(const Series& s) const;
};

Scaler fit_scaler(const Series& train);

/// Fits on `train` and applies to train and every entry of `others`.
std::pair<Scaler, std::vector<Series>> standardize(const Series& train, const std::vector<Series>& others);

/// Header row required; a first column named "date" (any case) becomes the
/// timestamps; every other cell must parse as a number.
Series read_csv(std::istream& in, const std::string& source_name = "<stream>");
Series load_csv(const std::string& path);
void write_csv(std::ostream& out, const Series& series);
void save_csv(const std::string& path, const Series& series);

}  // namespace distdf
