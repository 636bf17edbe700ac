// Acceptance suite: one PASS/FAIL line per criterion 1–12.
// Exit status counts failures outside the --known-fail list; those are still
// printed as FAIL.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "distdf/commands.hpp"
#include "distdf/io.hpp"

using namespace distdf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs the named oracle properties, all of which must pass within `budget` seconds.
Outcome oracle_criterion(const std::vector<std::string>& names, double budget) {
  Outcome out{true, ""};
  double total = 0.0;
  for (const auto& name : names) {
    const auto res = oracle::run_suite(name, 0).front();
    total += res.seconds;
    out.passed = out.passed && res.passed;
    out.detail += fmt::format("{}: worst={:.3g} tol={:.3g} ({}) cases={}; ", res.name, res.worst, res.tolerance,
                              res.passed ? "ok" : "violated", res.cases);
  }
  const bool in_time = total < budget;
  out.passed = out.passed && in_time;
  out.detail += fmt::format("runtime {:.2f} s (limit {} s{})", total, budget, in_time ? "" : ", EXCEEDED");
  return out;
}

ExperimentConfig default_experiment(const fs::path& dir) {
  ExperimentConfig c;
  c.apply_seed(0);
  c.output_dir = dir.string();
  return c;
}

Outcome criterion8(const fs::path& root) {
  ExperimentConfig c = default_experiment(root / "c8");
  c.train.loss.alpha = 0.0;
  c.train.max_epochs = 10;
  c.train.patience = 10;  // run all 10 epochs
  const PreparedData data = prepare_data(c);
  std::vector<Vector> a, b;
  fit(data.splits, c.history, c.horizon, c.train, distdf_objective(c.train.loss),
      [&](std::size_t, std::size_t, const Vector& p) { a.push_back(p); });
  fit(data.splits, c.history, c.horizon, c.train, mse_objective(),
      [&](std::size_t, std::size_t, const Vector& p) { b.push_back(p); });
  std::size_t first_diff = a.size();
  if (a.size() == b.size()) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != b[i]) {
        first_diff = i;
        break;
      }
    }
  }
  const bool ok = a.size() == b.size() && first_diff == a.size() && !a.empty();
  return {ok, fmt::format("{} optimizer steps over 10 epochs, {}", a.size(),
                          ok ? "every parameter vector bit-identical"
                             : fmt::format("first divergence at step {}", first_diff))};
}

Outcome criterion9(const fs::path& root) {
  const ExperimentConfig c = default_experiment(root / "c9");
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream table;
  const auto rows = cmd_sweep(c, table);
  const double secs = seconds_since(t0);
  std::cout << table.str();
  double base = 0.0, best = 0.0, best_alpha = -1.0;
  for (const auto& r : rows) {
    if (r.alpha == 0.0) base = r.mse;
    if (r.alpha > 0.0 && r.alpha <= 0.5 && (best_alpha < 0 || r.mse < best)) {
      best = r.mse;
      best_alpha = r.alpha;
    }
  }
  const double margin = best - base;
  const bool ok = margin <= 0.0 && secs < 600.0;
  return {ok, fmt::format("alpha=0 MSE {:.17g}; best alpha in (0, 0.5] is {} with MSE {:.17g}; margin {:+.3e}; "
                          "sweep {:.1f} s (limit 600 s)",
                          base, best_alpha, best, margin, secs)};
}

Outcome criterion11(const fs::path& root) {
  ExperimentConfig c = default_experiment(root / "c11");
  c.bench.batch = 128;
  c.bench.variables = 21;
  c.bench.horizons = {96, 192, 336, 720};
  std::ostringstream log;
  const auto rows = cmd_bench(c, log);
  std::ifstream in(fs::path(c.output_dir) / "bench.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  std::string detail;
  for (const auto& r : rows) {
    detail += fmt::format("T={} fwd {:.2f} ms bwd {:.2f} ms; ", r.horizon, r.timing.forward_ms, r.timing.backward_ms);
  }
  const bool ok = rows.size() == 4 && lines == 5;
  return {ok, detail + fmt::format("bench.csv has {} data rows", lines == 0 ? 0 : lines - 1)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops wall-clock fields ("seconds" in JSON/JSONL, the timing columns of
// bench.csv) and the output_dir path recorded in the manifest.
std::string without_timing(const fs::path& p) {
  const std::string text = slurp(p);
  const auto name = p.filename().string();
  if (name == "bench.csv") {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.find(',')) + "\n";
    return out;
  }
  auto strip = [](nlohmann::ordered_json j) {
    std::function<void(nlohmann::ordered_json&)> rec = [&](nlohmann::ordered_json& v) {
      if (v.is_object()) {
        v.erase("seconds");
        v.erase("output_dir");
        for (auto& [k, child] : v.items()) rec(child);
      } else if (v.is_array()) {
        for (auto& child : v) rec(child);
      }
    };
    rec(j);
    return io::dump_json(j, -1);
  };
  if (p.extension() == ".jsonl") {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) out += strip(nlohmann::ordered_json::parse(line)) + "\n";
    return out;
  }
  if (p.extension() == ".json") return strip(nlohmann::ordered_json::parse(text));
  return text;
}

Outcome criterion12(const fs::path& root, const std::string& cli) {
  // Each command runs twice through the binary into separate directories.
  const std::vector<std::string> commands{"generate", "train --alpha 0.1", "sweep", "analyze", "oracle", "bench"};
  std::vector<std::string> mismatches;
  std::size_t compared = 0;
  for (const auto& cmd : commands) {
    const std::string sub = cmd.substr(0, cmd.find(' '));
    std::vector<fs::path> dirs;
    for (const char* run : {"a", "b"}) {
      const fs::path dir = root / "c12" / run / sub;
      fs::remove_all(dir);
      const std::string line = fmt::format("{} --seed 7 --out-dir {} {} > /dev/null 2>&1", cli, dir.string(), cmd);
      if (std::system(line.c_str()) != 0) return {false, fmt::format("'{}' exited nonzero", cmd)};
      dirs.push_back(dir);
    }
    if (sub == "train") {
      // eval of the freshly written checkpoint, twice.
      for (const auto& dir : dirs) {
        const std::string line = fmt::format("{} --seed 7 --out-dir {} eval --checkpoint {} > /dev/null 2>&1", cli,
                                             dir.string(), (dir / "checkpoint.txt").string());
        if (std::system(line.c_str()) != 0) return {false, "'eval' exited nonzero"};
      }
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const fs::path other = dirs[1] / entry.path().filename();
      ++compared;
      if (!fs::exists(other) || without_timing(entry.path()) != without_timing(other)) {
        mismatches.push_back(sub + "/" + entry.path().filename().string());
      }
    }
  }
  std::string detail = fmt::format("7 commands, {} output files compared", compared);
  if (!mismatches.empty()) detail += "; differing: " + fmt::format("{}", fmt::join(mismatches, ", "));
  return {mismatches.empty() && compared > 0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DistDF acceptance suite"};
  std::vector<int> known_fail;
  std::string work = (fs::temp_directory_path() / "distdf_acceptance").string();
  std::string cli = DISTDF_CLI_PATH;
  app.add_option("--known-fail", known_fail, "criteria reported but excluded from the exit status");
  app.add_option("--work-dir", work, "scratch directory for command outputs");
  app.add_option("--cli", cli, "path to the distdf binary");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> known(known_fail.begin(), known_fail.end());
  const fs::path root(work);
  fs::remove_all(root);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Bures-Wasserstein 1-D closed form", [] { return oracle_criterion({"bures_1d"}, 1.0); }},
      {"Gaussian vs empirical W2 convergence", [] { return oracle_criterion({"gaussian_vs_empirical"}, 60.0); }},
      {"joint bound on the conditional discrepancy",
       [] { return oracle_criterion({"conditional_bound", "conditional_equality_p1"}, 30.0); }},
      {"conditional alignment at zero joint discrepancy",
       [] { return oracle_criterion({"conditional_alignment"}, 10.0); }},
      {"autocorrelation bias", [] { return oracle_criterion({"autocorrelation_bias"}, 5.0); }},
      {"exact OT against brute force", [] { return oracle_criterion({"assignment_bruteforce"}, 60.0); }},
      {"loss gradient fidelity", [] { return oracle_criterion({"loss_gradients"}, 300.0); }},
      {"alpha=0 reproduces the MSE trajectory", [&] { return criterion8(root); }},
      {"end-to-end alpha sweep non-degradation", [&] { return criterion9(root); }},
      {"partial-correlation recovery", [] { return oracle_criterion({"partial_correlation_recovery"}, 30.0); }},
      {"timing harness", [&] { return criterion11(root); }},
      {"determinism of every command", [&] { return criterion12(root, cli); }},
  };

  int unexpected = 0, failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (!o.passed) {
      ++failed;
      if (!known.count(id)) ++unexpected;
    }
    std::cout << fmt::format("{} criterion {}: {} [{:.2f} s] {}{}\n", o.passed ? "PASS" : "FAIL", id,
                             criteria[i].first, secs, o.detail,
                             !o.passed && known.count(id) ? " (known failure)" : "")
              << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size());
  return unexpected == 0 ? 0 : 1;
}
