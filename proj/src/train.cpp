#include "distdf/train.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "distdf/error.hpp"
#include "distdf/rng.hpp"

namespace distdf {

void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError(fmt::format("adam_step: {} parameters, {} gradients, state of {}", params.size(),
                                     grads.size(), state.m.size()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    const double g = grads(i);
    state.m(i) = cfg.beta1 * state.m(i) + (1.0 - cfg.beta1) * g;
    state.v(i) = cfg.beta2 * state.v(i) + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m(i) / correction1;
    const double v_hat = state.v(i) / correction2;
    params(i) -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate: must be a finite value >= 0");
  }
  if (batch_size < 2) throw ConfigError("train.batch_size: covariance estimation needs at least 2 rows");
  if (max_epochs < 1) throw ConfigError("train.max_epochs: must be >= 1");
  if (patience < 1) throw ConfigError("train.patience: must be >= 1");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("train.adam_betas[0]: must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("train.adam_betas[1]: must lie in (0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps: must be positive");
  if (model_kind == ModelKind::mlp && hidden < 1) throw ConfigError("train.hidden: must be >= 1");
  if (init_scale && !(*init_scale >= 0.0)) throw ConfigError("train.init_scale: must be >= 0");
  if (loss.alpha > 0.0 && !has_gradient(loss.kind)) {
    throw ConfigError(fmt::format("train.discrepancy: '{}' is evaluation-only and cannot be trained with alpha > 0",
                                  to_string(loss.kind)));
  }
}

bool EarlyStopper::update(std::size_t epoch, double value) {
  improved_ = !has_best_ || value < best_;
  if (improved_) {
    has_best_ = true;
    best_ = value;
    best_epoch_ = epoch;
    stale_ = 0;
    return false;
  }
  ++stale_;
  return stale_ >= patience_;
}

BatchObjective distdf_objective(const LossConfig& cfg) {
  return [cfg](const Matrix& h, const Matrix& y, const Matrix& yhat, bool want_grad) {
    return want_grad ? distdf_loss(h, y, yhat, cfg) : distdf_value(h, y, yhat, cfg);
  };
}

BatchObjective mse_objective() {
  return [](const Matrix&, const Matrix& y, const Matrix& yhat, bool want_grad) {
    auto mse = mse_loss(y, yhat);
    LossReport r;
    r.total = mse.value;
    r.mse_term = mse.value;
    if (want_grad) r.grad_forecast = std::move(mse.grad);
    return r;
  };
}

std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch_size,
                                                              std::size_t min_last) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    out.emplace_back(begin, std::min(n, begin + batch_size));
  }
  if (out.size() > 1 && out.back().second - out.back().first < min_last) {
    const auto tail = out.back();
    out.pop_back();
    out.back().second = tail.second;
  }
  return out;
}

namespace {

struct Accumulator {
  double total = 0.0;
  double dist = 0.0;
  double mse = 0.0;
  double weight = 0.0;

  void add(const LossReport& r, double w) {
    total += w * r.total;
    dist += w * r.dist_term;
    mse += w * r.mse_term;
    weight += w;
  }
};

// Objective averaged over the variables for the rows `idx` of every window set.
// Gradients are accumulated into `grad` when it is non-null.
LossReport batch_objective(const Model& model, const std::vector<WindowBatch>& windows,
                           const std::vector<std::size_t>& idx, const BatchObjective& objective, Vector* grad) {
  const double inv_d = 1.0 / static_cast<double>(windows.size());
  LossReport mean;
  if (grad) grad->setZero(static_cast<Eigen::Index>(parameter_count(model)));
  for (const auto& w : windows) {
    const WindowBatch b = w.select(idx);
    const Matrix forecast = forward(model, b.history);
    const LossReport r = objective(b.history, b.label, forecast, grad != nullptr);
    mean.total += inv_d * r.total;
    mean.dist_term += inv_d * r.dist_term;
    mean.mse_term += inv_d * r.mse_term;
    if (grad) *grad += inv_d * flatten(backward(model, b.history, r.grad_forecast));
  }
  return mean;
}

Accumulator split_objective(const Model& model, const std::vector<WindowBatch>& windows, std::size_t batch_size,
                            const BatchObjective& objective) {
  Accumulator acc;
  const std::size_t n = static_cast<std::size_t>(windows.front().size());
  for (const auto& [begin, end] : batch_ranges(n, batch_size)) {
    std::vector<std::size_t> idx(end - begin);
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = begin + k;
    acc.add(batch_objective(model, windows, idx, objective, nullptr), static_cast<double>(idx.size()));
  }
  return acc;
}

}  // namespace

FitResult fit(const Splits& splits, Eigen::Index history, Eigen::Index horizon, const TrainConfig& cfg,
              const BatchObjective& objective_in, const StepObserver& observer) {
  cfg.validate();
  const BatchObjective objective = objective_in ? objective_in : distdf_objective(cfg.loss);
  const auto train_windows = make_windows(splits.train, history, horizon, 1);
  const auto val_windows = make_windows(splits.val, history, horizon, 1);
  const std::size_t n_train = static_cast<std::size_t>(train_windows.front().size());
  if (n_train < 2) throw InsufficientSamplesError("fit: training split yields fewer than 2 windows");
  if (val_windows.front().size() < 2) throw InsufficientSamplesError("fit: validation split yields fewer than 2 windows");

  const ModelShape shape{cfg.model_kind, history, horizon, cfg.model_kind == ModelKind::mlp ? cfg.hidden : 0};
  const double scale = cfg.init_scale ? *cfg.init_scale : 1.0 / std::sqrt(static_cast<double>(history));
  Model model = init_model(shape, cfg.seed, scale);
  Vector params = flatten(model);
  Vector best_params = params;
  AdamState adam = AdamState::zeros(params.size());
  const AdamConfig adam_cfg = cfg.adam();

  FitResult result;
  EarlyStopper stopper(cfg.patience);
  Vector grad;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    CounterRng shuffle_rng(cfg.seed, 0x5348554646ULL + epoch);
    const auto order = shuffle_rng.permutation(n_train);

    Accumulator train_acc;
    for (const auto& [begin, end] : batch_ranges(n_train, cfg.batch_size)) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const LossReport r = batch_objective(model, train_windows, idx, objective, &grad);
      train_acc.add(r, static_cast<double>(idx.size()));
      adam_step(params, grad, adam, adam_cfg);
      assign(model, params);
      ++step;
      if (observer) observer(epoch, step, params);
    }

    const Accumulator val_acc = split_objective(model, val_windows, cfg.batch_size, objective);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_acc.total / train_acc.weight;
    rec.train_dist = train_acc.dist / train_acc.weight;
    rec.train_mse = train_acc.mse / train_acc.weight;
    rec.val_loss = val_acc.total / val_acc.weight;
    rec.val_dist = val_acc.dist / val_acc.weight;
    rec.val_mse = val_acc.mse / val_acc.weight;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.record.epochs.push_back(rec);
    result.record.stopped_epoch = epoch;

    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw NumericalError(fmt::format("fit: non-finite loss at epoch {}", epoch));
    }
    const double criterion = cfg.select_on == SelectionMetric::loss ? rec.val_loss : rec.val_mse;
    const bool stop = stopper.update(epoch, criterion);
    if (stopper.improved()) best_params = params;
    if (stop) {
      result.record.early_stopped = true;
      break;
    }
  }
  result.record.best_epoch = stopper.best_epoch();
  result.record.best_val = stopper.best_value();
  assign(model, best_params);
  result.model = std::move(model);
  return result;
}

Metrics evaluate(const Model& model, const Series& split, Eigen::Index history, Eigen::Index horizon,
                 std::size_t batch_size) {
  if (batch_size < 1) throw ConfigError("evaluate: batch_size must be >= 1");
  if (window_count(split.length(), history, horizon, 1) == 0) {
    throw InsufficientSamplesError("evaluate: split is too short for a single window");
  }
  const auto windows = make_windows(split, history, horizon, 1);
  double sq = 0.0;
  double abs = 0.0;
  std::size_t count = 0;
  for (const auto& w : windows) {
    const auto n = static_cast<std::size_t>(w.size());
    for (const auto& [begin, end] : batch_ranges(n, batch_size, 1)) {
      const auto rows = static_cast<Eigen::Index>(end - begin);
      const Matrix forecast = forward(model, w.history.middleRows(static_cast<Eigen::Index>(begin), rows));
      const Matrix err = forecast - w.label.middleRows(static_cast<Eigen::Index>(begin), rows);
      sq += err.squaredNorm();
      abs += err.cwiseAbs().sum();
      count += static_cast<std::size_t>(err.size());
    }
  }
  Metrics m;
  m.mse = sq / static_cast<double>(count);
  m.mae = abs / static_cast<double>(count);
  m.windows = static_cast<std::size_t>(windows.front().size());
  return m;
}

std::vector<SweepRow> alpha_sweep(const Splits& splits, Eigen::Index history, Eigen::Index horizon,
                                  const TrainConfig& base, const std::vector<double>& alphas) {
  if (alphas.empty()) throw ConfigError("sweep.alphas: empty list");
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError(fmt::format("sweep.alphas: {} is outside [0, 1]", a));
  }
  std::vector<double> sorted = alphas;
  std::sort(sorted.begin(), sorted.end());
  std::vector<SweepRow> rows;
  for (double alpha : sorted) {
    TrainConfig cfg = base;
    cfg.loss.alpha = alpha;
    const FitResult fitted = fit(splits, history, horizon, cfg);
    const Metrics m = evaluate(fitted.model, splits.test, history, horizon);
    rows.push_back({alpha, m.mse, m.mae, fitted.record.best_epoch});
  }
  return rows;
}

LossTiming time_loss(Eigen::Index batch, Eigen::Index history, Eigen::Index horizon, Eigen::Index variables,
                     std::size_t repeats, const LossConfig& cfg, std::uint64_t seed) {
  if (repeats < 3) throw ConfigError("bench.repeats: at least 3 repetitions are required");
  if (batch < 2 || history < 0 || horizon < 1 || variables < 1) throw ConfigError("bench: invalid shape");
  CounterRng rng(seed);
  auto draw = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
  };
  struct Inputs {
    Matrix history, label, forecast;
  };
  std::vector<Inputs> inputs;
  for (Eigen::Index v = 0; v < variables; ++v) {
    inputs.push_back({draw(batch, history), draw(batch, horizon), draw(batch, horizon)});
  }

  auto time_once = [&](bool with_grad) {
    const auto start = std::chrono::steady_clock::now();
    double sink = 0.0;
    for (const auto& in : inputs) {
      const LossReport r = with_grad ? distdf_loss(in.history, in.label, in.forecast, cfg)
                                     : distdf_value(in.history, in.label, in.forecast, cfg);
      sink += r.total;
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!std::isfinite(sink)) throw NumericalError("time_loss: non-finite loss");
    return ms;
  };
  auto median_of = [&](bool with_grad) {
    time_once(with_grad);  // warm-up
    std::vector<double> samples;
    for (std::size_t k = 0; k < repeats; ++k) samples.push_back(time_once(with_grad));
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    return n % 2 == 1 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  };
  LossTiming t;
  t.forward_ms = median_of(false);
  t.backward_ms = median_of(true);
  return t;
}

}  // namespace distdf
