#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "distdf/analysis.hpp"
#include "distdf/config.hpp"
#include "distdf/oracle.hpp"

namespace distdf {

/// Series loaded per the data section, split, and standardized on train.
struct PreparedData {
  Series raw;
  Splits splits;
  Scaler scaler;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

/// Writes <out>/data.csv and <out>/manifest.json. The manifest is the
/// normative config and regenerates the same CSV when passed back as --config.
Series cmd_generate(const ExperimentConfig& cfg, std::ostream& log);

struct TrainSummary {
  double test_mse = 0.0;
  double test_mae = 0.0;
  std::size_t best_epoch = 0;
  double alpha = 0.0;
  TrainRecord record;
};

/// Writes checkpoint.txt, epochs.jsonl and summary.json under the output dir.
TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log);

/// Writes metrics.json for a checkpoint evaluated on the configured test split.
Metrics cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path, std::ostream& log);

/// Writes sweep.csv (alpha, mse, mae, best_epoch) and prints the table.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

struct AnalyzeSummary {
  PartialCorrelationMatrix partial;
  double exceedance = 0.0;
  double threshold = 0.0;
};

/// Partial correlation of the label steps given the history over every
/// training window of every variable. Writes partial_correlation.csv and
/// analysis.json.
AnalyzeSummary cmd_analyze(const ExperimentConfig& cfg, std::ostream& log);

/// Runs the configured oracle suite and writes oracle.json.
std::vector<PropertyResult> cmd_oracle(const ExperimentConfig& cfg, std::ostream& log);

struct BenchRow {
  Eigen::Index horizon = 0;
  LossTiming timing;
};

/// Writes bench.csv with columns T, forward_ms, backward_ms.
std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace distdf
