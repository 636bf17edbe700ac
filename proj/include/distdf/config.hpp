#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "distdf/data.hpp"
#include "distdf/train.hpp"

namespace distdf {

enum class DataSource { synthetic, csv };

struct DataConfig {
  DataSource source = DataSource::synthetic;
  ArSpec ar{{0.8}, 1.0, 10000, 0, 1};  // seed is taken from ExperimentConfig::seed
  std::string csv_path;
  /// Optional subset of CSV columns, in the given order.
  std::vector<std::string> columns;
  bool standardize = true;
};

struct SplitConfig {
  SplitRatios ratios = kDefaultSplit;
  std::optional<std::string> preset;  // overrides ratios
};

struct BenchConfig {
  Eigen::Index batch = 128;
  Eigen::Index history = 96;
  std::vector<Eigen::Index> horizons{96, 192, 336, 720};
  Eigen::Index variables = 21;
  std::size_t repeats = 5;
  /// Weight of the distributional term in the timed loss (the rest of
  /// train's loss settings are reused).
  double alpha = 1.0;
};

/// Everything one CLI invocation needs. Parsed from JSON; unknown keys and
/// invalid values raise ConfigError with the offending field path.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  Eigen::Index history = 24;
  Eigen::Index horizon = 24;
  SplitConfig split;
  TrainConfig train;
  std::vector<double> sweep_alphas = kAlphaGrid;
  double analyze_threshold = 0.1;
  std::string oracle_suite = "all";
  BenchConfig bench;
  std::string output_dir = "out";

  /// Pushes the master seed into the data generator and the trainer.
  void apply_seed(std::uint64_t s);
  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Normative JSON rendering; parse_config(to_json(c)) reproduces c.
nlohmann::ordered_json to_json(const ExperimentConfig& c);

}  // namespace distdf
