#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "distdf/data.hpp"
#include "distdf/loss.hpp"
#include "distdf/model.hpp"

namespace distdf {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  std::uint64_t step = 0;

  static AdamState zeros(Eigen::Index n) { return {Vector::Zero(n), Vector::Zero(n), 0}; }
};

/// One bias-corrected Adam update in place.
void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamConfig& cfg);

enum class SelectionMetric { loss, mse };

struct TrainConfig {
  LossConfig loss;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 10;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  ModelKind model_kind = ModelKind::linear;
  Eigen::Index hidden = 16;
  std::optional<double> init_scale;  // defaults to 1/√H
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Early-stopping criterion on the validation split: L_α or plain MSE.
  SelectionMetric select_on = SelectionMetric::loss;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_eps}; }
};

/// Learning-rate candidates for tuning.
inline const std::vector<double> kLearningRateGrid{1e-3, 5e-4, 1e-4, 5e-5};
/// α values of the sensitivity tables.
inline const std::vector<double> kAlphaGrid{0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_dist = 0.0;
  double train_mse = 0.0;
  double val_loss = 0.0;
  double val_dist = 0.0;
  double val_mse = 0.0;
  double seconds = 0.0;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;  // selection metric at best_epoch
  std::size_t stopped_epoch = 0;
  bool early_stopped = false;
};

/// Counts epochs without strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(std::size_t patience) : patience_(patience) {}
  /// Returns true when training should stop after this epoch.
  bool update(std::size_t epoch, double value);
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }
  bool improved() const { return improved_; }

 private:
  std::size_t patience_;
  std::size_t best_epoch_ = 0;
  std::size_t stale_ = 0;
  double best_ = 0.0;
  bool has_best_ = false;
  bool improved_ = false;
};

/// Per-batch objective for one variable: value, and the gradient on the
/// forecast when `want_grad` is set.
using BatchObjective =
    std::function<LossReport(const Matrix& history, const Matrix& label, const Matrix& forecast, bool want_grad)>;

BatchObjective distdf_objective(const LossConfig& cfg);
/// Plain MSE (the direct-forecast baseline); dist_term is reported as 0.
BatchObjective mse_objective();

/// Called after every optimizer step with the updated parameters.
using StepObserver = std::function<void(std::size_t epoch, std::size_t step, const Vector& params)>;

struct FitResult {
  Model model;
  TrainRecord record;
};

/// Splits into consecutive batches of `batch_size`; a trailing batch smaller
/// than `min_last` is merged into the previous one.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size,
                                                              std::size_t min_last = 2);

/// Trains on splits that are already standardized. Returns the parameters of
/// the epoch with the best validation criterion.
FitResult fit(const Splits& splits, Eigen::Index history, Eigen::Index horizon, const TrainConfig& cfg,
              const BatchObjective& objective = {}, const StepObserver& observer = {});

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  std::size_t windows = 0;  // forecast origins per variable
};

/// MSE and MAE over every dense window of every variable; the final partial
/// batch is included.
Metrics evaluate(const Model& model, const Series& split, Eigen::Index history, Eigen::Index horizon,
                 std::size_t batch_size = 256);

struct SweepRow {
  double alpha = 0.0;
  double mse = 0.0;
  double mae = 0.0;
  std::size_t best_epoch = 0;
};

/// One fit + test evaluation per α with every seed held fixed; rows sorted by α.
std::vector<SweepRow> alpha_sweep(const Splits& splits, Eigen::Index history, Eigen::Index horizon,
                                  const TrainConfig& base, const std::vector<double>& alphas);

struct LossTiming {
  double forward_ms = 0.0;   // value only
  double backward_ms = 0.0;  // value and gradient
};

/// Median wall-clock of distdf_value / distdf_loss summed over D variables on
/// random standard-normal inputs. One warm-up evaluation is discarded.
LossTiming time_loss(Eigen::Index batch, Eigen::Index history, Eigen::Index horizon, Eigen::Index variables,
                     std::size_t repeats, const LossConfig& cfg, std::uint64_t seed = 0);

}  // namespace distdf
