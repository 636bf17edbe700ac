#include "distdf/commands.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>

#include "distdf/error.hpp"
#include "distdf/io.hpp"
#include "distdf/model.hpp"

namespace distdf {

namespace {

using ojson = nlohmann::ordered_json;

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.output_dir) / name).string();
}

void write_json(const std::string& path, const ojson& j) { io::write_file_atomic(path, io::dump_json(j) + "\n"); }

Series select_columns(const Series& s, const std::vector<std::string>& columns) {
  if (columns.empty()) return s;
  Series out;
  out.timestamps = s.timestamps;
  out.values.resize(s.length(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto it = std::find(s.variable_names.begin(), s.variable_names.end(), columns[c]);
    if (it == s.variable_names.end()) {
      throw ConfigError(fmt::format("data.columns[{}]: no column named '{}'", c, columns[c]));
    }
    out.values.col(static_cast<Eigen::Index>(c)) = s.values.col(it - s.variable_names.begin());
    out.variable_names.push_back(columns[c]);
  }
  return out;
}

std::vector<WindowBatch> training_windows(const ExperimentConfig& cfg, const PreparedData& data) {
  return make_windows(data.splits.train, cfg.history, cfg.horizon, 1);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData d;
  if (cfg.data.source == DataSource::synthetic) {
    d.raw = generate_ar(cfg.data.ar);
  } else {
    d.raw = select_columns(load_csv(cfg.data.csv_path), cfg.data.columns);
  }
  Splits raw_splits;
  if (cfg.split.preset) {
    raw_splits = preset_split(d.raw, *find_preset(*cfg.split.preset), cfg.history);
  } else {
    raw_splits = chronological_split(d.raw, cfg.split.ratios, cfg.history + cfg.horizon);
  }
  if (cfg.data.standardize) {
    auto [scaler, parts] = standardize(raw_splits.train, {raw_splits.val, raw_splits.test});
    d.scaler = std::move(scaler);
    d.splits = {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
  } else {
    const auto vars = d.raw.variables();
    d.scaler = Scaler{Vector::Zero(vars), Vector::Ones(vars), {}};
    d.splits = std::move(raw_splits);
  }
  return d;
}

Series cmd_generate(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.data.source != DataSource::synthetic) {
    throw ConfigError("data.source: generate needs a synthetic source");
  }
  const Series series = generate_ar(cfg.data.ar);
  std::ostringstream csv;
  write_csv(csv, series);
  io::write_file_atomic(out_path(cfg, "manifest.json"), io::dump_json(to_json(cfg)) + "\n");
  io::write_file_atomic(out_path(cfg, "data.csv"), csv.str());
  log << fmt::format("generated {} steps x {} variables -> {}\n", series.length(), series.variables(),
                     out_path(cfg, "data.csv"));
  return series;
}

TrainSummary cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const PreparedData data = prepare_data(cfg);
  const FitResult fitted = fit(data.splits, cfg.history, cfg.horizon, cfg.train);
  const Metrics test = evaluate(fitted.model, data.splits.test, cfg.history, cfg.horizon);

  TrainSummary s{test.mse, test.mae, fitted.record.best_epoch, cfg.train.loss.alpha, fitted.record};

  std::string jsonl;
  for (const auto& e : fitted.record.epochs) {
    jsonl += io::dump_json(ojson{{"epoch", e.epoch},
                                 {"train_loss", e.train_loss},
                                 {"train_dist", e.train_dist},
                                 {"train_mse", e.train_mse},
                                 {"val_loss", e.val_loss},
                                 {"val_dist", e.val_dist},
                                 {"val_mse", e.val_mse},
                                 {"seconds", e.seconds}},
                           -1);
    jsonl += '\n';
  }
  std::ostringstream ckpt;
  write_checkpoint(ckpt, Checkpoint{fitted.model, cfg.train.seed});
  io::write_file_atomic(out_path(cfg, "checkpoint.txt"), ckpt.str());
  io::write_file_atomic(out_path(cfg, "epochs.jsonl"), jsonl);
  write_json(out_path(cfg, "summary.json"), ojson{{"test_mse", s.test_mse},
                                                  {"test_mae", s.test_mae},
                                                  {"best_epoch", s.best_epoch},
                                                  {"alpha", s.alpha},
                                                  {"discrepancy", std::string(to_string(cfg.train.loss.kind))},
                                                  {"best_val", fitted.record.best_val},
                                                  {"stopped_epoch", fitted.record.stopped_epoch},
                                                  {"early_stopped", fitted.record.early_stopped},
                                                  {"test_windows", test.windows},
                                                  {"seed", cfg.seed}});
  log << fmt::format("alpha={} best_epoch={} test_mse={} test_mae={}\n", io::format_number(s.alpha), s.best_epoch,
                     io::format_number(s.test_mse), io::format_number(s.test_mae));
  return s;
}

Metrics cmd_eval(const ExperimentConfig& cfg, const std::string& checkpoint_path, std::ostream& log) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const ModelShape shape = shape_of(ckpt.model);
  if (shape.history != cfg.history || shape.horizon != cfg.horizon) {
    throw DimensionError(fmt::format("checkpoint '{}' has H={} T={}, config has H={} T={}", checkpoint_path,
                                     shape.history, shape.horizon, cfg.history, cfg.horizon));
  }
  const PreparedData data = prepare_data(cfg);
  const Metrics m = evaluate(ckpt.model, data.splits.test, cfg.history, cfg.horizon);
  write_json(out_path(cfg, "metrics.json"), ojson{{"mse", m.mse}, {"mae", m.mae}, {"windows", m.windows}});
  log << fmt::format("mse={} mae={}\n", io::format_number(m.mse), io::format_number(m.mae));
  return m;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
  const PreparedData data = prepare_data(cfg);
  const auto rows = alpha_sweep(data.splits, cfg.history, cfg.horizon, cfg.train, cfg.sweep_alphas);
  std::string csv = "alpha,mse,mae,best_epoch\n";
  for (const auto& r : rows) {
    csv += fmt::format("{},{},{},{}\n", io::format_number(r.alpha), io::format_number(r.mse),
                       io::format_number(r.mae), r.best_epoch);
  }
  io::write_file_atomic(out_path(cfg, "sweep.csv"), csv);
  log << fmt::format("{:>8} | {:>8} | {:>8}\n", "alpha", "MSE", "MAE");
  for (const auto& r : rows) log << fmt::format("{:>8} | {:>8.4f} | {:>8.4f}\n", r.alpha, r.mse, r.mae);
  return rows;
}

AnalyzeSummary cmd_analyze(const ExperimentConfig& cfg, std::ostream& log) {
  const PreparedData data = prepare_data(cfg);
  const auto windows = training_windows(cfg, data);
  Eigen::Index n = 0;
  for (const auto& w : windows) n += w.size();
  Matrix x(n, cfg.history), y(n, cfg.horizon);
  Eigen::Index row = 0;
  for (const auto& w : windows) {
    x.middleRows(row, w.size()) = w.history;
    y.middleRows(row, w.size()) = w.label;
    row += w.size();
  }
  AnalyzeSummary s;
  s.partial = partial_correlation(x, y);
  s.threshold = cfg.analyze_threshold;
  s.exceedance = offdiag_exceedance(s.partial.matrix, s.threshold);

  std::string csv;
  for (Eigen::Index t = 0; t < cfg.horizon; ++t) csv += fmt::format("{}t{}", t ? "," : "", t + 1);
  csv += '\n';
  for (Eigen::Index a = 0; a < cfg.horizon; ++a) {
    for (Eigen::Index b = 0; b < cfg.horizon; ++b) {
      csv += (b ? "," : "") + io::format_number(s.partial.matrix(a, b));
    }
    csv += '\n';
  }
  io::write_file_atomic(out_path(cfg, "partial_correlation.csv"), csv);
  write_json(out_path(cfg, "analysis.json"), ojson{{"threshold", s.threshold},
                                                   {"exceedance", s.exceedance},
                                                   {"N", s.partial.sample_count},
                                                   {"H", cfg.history},
                                                   {"T", cfg.horizon},
                                                   {"degenerate_columns", s.partial.degenerate_columns}});
  log << fmt::format("N={} exceedance(|r|>{})={}\n", s.partial.sample_count, io::format_number(s.threshold),
                     io::format_number(s.exceedance));
  return s;
}

std::vector<PropertyResult> cmd_oracle(const ExperimentConfig& cfg, std::ostream& log) {
  const auto results = oracle::run_suite(cfg.oracle_suite, cfg.seed);
  ojson props = ojson::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    props.push_back(ojson{{"name", r.name},
                          {"passed", r.passed},
                          {"cases", r.cases},
                          {"worst", r.worst},
                          {"tolerance", r.tolerance},
                          {"detail", r.detail},
                          {"seconds", r.seconds}});
    log << fmt::format("{} {} worst={} tol={}\n", r.passed ? "PASS" : "FAIL", r.name, io::format_number(r.worst),
                       io::format_number(r.tolerance));
  }
  write_json(out_path(cfg, "oracle.json"),
             ojson{{"seed", cfg.seed}, {"suite", cfg.oracle_suite}, {"passed", all}, {"properties", props}});
  return results;
}

std::vector<BenchRow> cmd_bench(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  LossConfig loss = cfg.train.loss;
  loss.alpha = cfg.bench.alpha;
  std::vector<BenchRow> rows;
  std::string csv = "T,forward_ms,backward_ms\n";
  for (const Eigen::Index t : cfg.bench.horizons) {
    const LossTiming timing = time_loss(cfg.bench.batch, cfg.bench.history, t, cfg.bench.variables,
                                        cfg.bench.repeats, loss, cfg.seed);
    rows.push_back({t, timing});
    csv += fmt::format("{},{},{}\n", t, io::format_number(timing.forward_ms), io::format_number(timing.backward_ms));
    log << fmt::format("T={} forward={:.3f} ms backward={:.3f} ms\n", t, timing.forward_ms, timing.backward_ms);
  }
  io::write_file_atomic(out_path(cfg, "bench.csv"), csv);
  return rows;
}

}  // namespace distdf
