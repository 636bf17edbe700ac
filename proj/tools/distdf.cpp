#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "distdf/commands.hpp"
#include "distdf/error.hpp"

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

distdf::ExperimentConfig resolve(const Globals& g) {
  distdf::ExperimentConfig cfg = g.config_path.empty() ? distdf::ExperimentConfig{} : distdf::load_config(g.config_path);
  if (g.seed) cfg.apply_seed(*g.seed);
  if (g.out_dir) cfg.output_dir = *g.out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DistDF: forecasting with a joint-distribution loss"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  app.add_option("--seed", g.seed, "master seed (data generation, init, shuffling, oracles)");
  app.add_option("--out-dir", g.out_dir, "output directory");

  auto* generate = app.add_subcommand("generate", "write the synthetic AR dataset and its manifest");

  auto* train = app.add_subcommand("train", "fit a forecaster and write checkpoint, epoch log, summary");
  std::optional<double> alpha;
  std::optional<std::string> select_on;
  std::optional<std::string> discrepancy;
  train->add_option("--alpha", alpha, "override train.alpha");
  train->add_option("--discrepancy", discrepancy, "override train.discrepancy");
  train->add_option("--select-on", select_on, "early-stopping criterion: loss or mse")
      ->check(CLI::IsMember({"loss", "mse"}));

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  auto* sweep = app.add_subcommand("sweep", "one fit per alpha; writes sweep.csv");
  std::vector<double> alphas;
  sweep->add_option("--alphas", alphas, "override sweep.alphas");

  auto* analyze = app.add_subcommand("analyze", "partial correlation of label steps given the history");
  std::optional<double> threshold;
  analyze->add_option("--threshold", threshold, "override analyze.threshold");

  auto* oracle = app.add_subcommand("oracle", "run the property suites; nonzero exit on any failure");
  std::optional<std::string> suite;
  oracle->add_option("--suite", suite, "suite name or 'all'");

  auto* bench = app.add_subcommand("bench", "time the loss forward and backward passes");
  std::vector<long> horizons;
  bench->add_option("--horizons", horizons, "override bench.horizons");
  std::optional<std::size_t> repeats;
  bench->add_option("--repeats", repeats, "override bench.repeats");

  CLI11_PARSE(app, argc, argv);

  try {
    distdf::ExperimentConfig cfg = resolve(g);
    if (*generate) {
      distdf::cmd_generate(cfg, std::cout);
    } else if (*train) {
      if (alpha) cfg.train.loss.alpha = *alpha;
      if (discrepancy) cfg.train.loss.kind = distdf::parse_discrepancy_kind(*discrepancy);
      if (select_on) cfg.train.select_on = *select_on == "mse" ? distdf::SelectionMetric::mse : distdf::SelectionMetric::loss;
      cfg.validate();
      distdf::cmd_train(cfg, std::cout);
    } else if (*eval) {
      distdf::cmd_eval(cfg, checkpoint, std::cout);
    } else if (*sweep) {
      if (!alphas.empty()) cfg.sweep_alphas = alphas;
      cfg.validate();
      distdf::cmd_sweep(cfg, std::cout);
    } else if (*analyze) {
      if (threshold) cfg.analyze_threshold = *threshold;
      cfg.validate();
      distdf::cmd_analyze(cfg, std::cout);
    } else if (*oracle) {
      if (suite) cfg.oracle_suite = *suite;
      const auto results = distdf::cmd_oracle(cfg, std::cout);
      for (const auto& r : results) {
        if (!r.passed) return 1;
      }
    } else if (*bench) {
      if (!horizons.empty()) cfg.bench.horizons.assign(horizons.begin(), horizons.end());
      if (repeats) cfg.bench.repeats = *repeats;
      cfg.validate();
      distdf::cmd_bench(cfg, std::cout);
    }
  } catch (const distdf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
