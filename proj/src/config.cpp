#include "distdf/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include "distdf/error.hpp"

namespace distdf {

namespace {

using json = nlohmann::json;

std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

std::uint64_t as_uint(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) throw ConfigError(path + ": must be >= 0");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw ConfigError(path + ": expected a non-negative integer");
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
  return j.get<bool>();
}

template <class T, class F>
std::vector<T> as_list(const json& j, const std::string& path, F&& element) {
  if (!j.is_array()) throw ConfigError(path + ": expected a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(element(j[i], fmt::format("{}[{}]", path, i)));
  return out;
}

// Reads the keys of one JSON object and rejects whatever was not consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError((path_.empty() ? "<root>" : path_) + ": expected an object");
  }

  template <class F>
  void read(const std::string& key, F&& apply) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end()) apply(*it, join_path(path_, key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(join_path(path_, key) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Eigen::Index as_index(const json& j, const std::string& path) {
  return static_cast<Eigen::Index>(as_uint(j, path));
}

void parse_data(const json& j, const std::string& path, DataConfig& d) {
  ObjectReader r(j, path);
  r.read("source", [&](const json& v, const std::string& p) {
    const std::string s = as_string(v, p);
    if (s == "synthetic") {
      d.source = DataSource::synthetic;
    } else if (s == "csv") {
      d.source = DataSource::csv;
    } else {
      throw ConfigError(p + ": expected 'synthetic' or 'csv', got '" + s + "'");
    }
  });
  r.read("ar", [&](const json& v, const std::string& p) {
    ObjectReader ar(v, p);
    ar.read("coefficients", [&](const json& x, const std::string& q) { d.ar.coefficients = as_list<double>(x, q, as_double); });
    ar.read("noise_std", [&](const json& x, const std::string& q) { d.ar.noise_std = as_double(x, q); });
    ar.read("length", [&](const json& x, const std::string& q) { d.ar.length = as_uint(x, q); });
    ar.read("variables", [&](const json& x, const std::string& q) { d.ar.variables = as_uint(x, q); });
    ar.finish();
  });
  r.read("path", [&](const json& v, const std::string& p) { d.csv_path = as_string(v, p); });
  r.read("columns", [&](const json& v, const std::string& p) { d.columns = as_list<std::string>(v, p, as_string); });
  r.read("standardize", [&](const json& v, const std::string& p) { d.standardize = as_bool(v, p); });
  r.finish();
}

void parse_train(const json& j, const std::string& path, TrainConfig& t) {
  ObjectReader r(j, path);
  r.read("alpha", [&](const json& v, const std::string& p) { t.loss.alpha = as_double(v, p); });
  r.read("discrepancy", [&](const json& v, const std::string& p) {
    try {
      t.loss.kind = parse_discrepancy_kind(as_string(v, p));
    } catch (const ConfigError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  });
  r.read("clamp_eps", [&](const json& v, const std::string& p) { t.loss.clamp_eps = as_double(v, p); });
  r.read("rbf_bandwidth", [&](const json& v, const std::string& p) {
    if (v.is_null()) {
      t.loss.rbf_bandwidth.reset();
    } else {
      t.loss.rbf_bandwidth = as_double(v, p);
    }
  });
  r.read("learning_rate", [&](const json& v, const std::string& p) { t.learning_rate = as_double(v, p); });
  r.read("batch_size", [&](const json& v, const std::string& p) { t.batch_size = as_uint(v, p); });
  r.read("max_epochs", [&](const json& v, const std::string& p) { t.max_epochs = as_uint(v, p); });
  r.read("patience", [&](const json& v, const std::string& p) { t.patience = as_uint(v, p); });
  r.read("model", [&](const json& v, const std::string& p) {
    try {
      t.model_kind = parse_model_kind(as_string(v, p));
    } catch (const ConfigError& e) {
      throw ConfigError(p + ": " + e.what());
    }
  });
  r.read("hidden", [&](const json& v, const std::string& p) { t.hidden = as_index(v, p); });
  r.read("init_scale", [&](const json& v, const std::string& p) {
    if (v.is_null()) {
      t.init_scale.reset();
    } else {
      t.init_scale = as_double(v, p);
    }
  });
  r.read("adam_betas", [&](const json& v, const std::string& p) {
    const auto betas = as_list<double>(v, p, as_double);
    if (betas.size() != 2) throw ConfigError(p + ": expected two values");
    t.beta1 = betas[0];
    t.beta2 = betas[1];
  });
  r.read("adam_eps", [&](const json& v, const std::string& p) { t.adam_eps = as_double(v, p); });
  r.read("select_on", [&](const json& v, const std::string& p) {
    const std::string s = as_string(v, p);
    if (s == "loss") {
      t.select_on = SelectionMetric::loss;
    } else if (s == "mse") {
      t.select_on = SelectionMetric::mse;
    } else {
      throw ConfigError(p + ": expected 'loss' or 'mse', got '" + s + "'");
    }
  });
  r.finish();
}

// Re-labels a ConfigError raised by a nested validator with the JSON field path.
void rebase(const std::function<void()>& check, const std::string& from, const std::string& to) {
  try {
    check();
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    if (msg.rfind(from, 0) == 0) msg = to + msg.substr(from.size());
    throw ConfigError(msg);
  }
}

}  // namespace

void ExperimentConfig::apply_seed(std::uint64_t s) {
  seed = s;
  data.ar.seed = s;
  train.seed = s;
}

void ExperimentConfig::validate() const {
  if (data.source == DataSource::synthetic) {
    rebase([&] { data.ar.validate(); }, "ar.", "data.ar.");
  } else if (data.csv_path.empty()) {
    throw ConfigError("data.path: required when data.source is 'csv'");
  }
  if (history < 1) throw ConfigError("history: must be >= 1");
  if (horizon < 1) throw ConfigError("horizon: must be >= 1");
  if (split.preset) {
    if (!find_preset(*split.preset)) throw ConfigError("split.preset: unknown preset '" + *split.preset + "'");
  } else {
    double sum = 0.0;
    for (double r : split.ratios) {
      if (!(r > 0.0)) throw ConfigError("split.ratios: every ratio must be positive");
      sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(fmt::format("split.ratios: sum to {}, not 1", sum));
  }
  rebase([&] { train.loss.validate(); }, "loss.", "train.");
  train.validate();
  if (sweep_alphas.empty()) throw ConfigError("sweep.alphas: empty list");
  for (std::size_t i = 0; i < sweep_alphas.size(); ++i) {
    if (!(sweep_alphas[i] >= 0.0 && sweep_alphas[i] <= 1.0)) {
      throw ConfigError(fmt::format("sweep.alphas[{}]: {} is outside [0, 1]", i, sweep_alphas[i]));
    }
  }
  if (!(analyze_threshold >= 0.0)) throw ConfigError("analyze.threshold: must be >= 0");
  if (bench.batch < 2) throw ConfigError("bench.batch: must be >= 2");
  if (bench.history < 0) throw ConfigError("bench.history: must be >= 0");
  if (bench.horizons.empty()) throw ConfigError("bench.horizons: empty list");
  for (std::size_t i = 0; i < bench.horizons.size(); ++i) {
    if (bench.horizons[i] < 1) throw ConfigError(fmt::format("bench.horizons[{}]: must be >= 1", i));
  }
  if (bench.variables < 1) throw ConfigError("bench.variables: must be >= 1");
  if (bench.repeats < 3) throw ConfigError("bench.repeats: at least 3 repetitions are required");
  if (!(bench.alpha >= 0.0 && bench.alpha <= 1.0)) throw ConfigError("bench.alpha: must lie in [0, 1]");
  if (bench.alpha > 0.0 && !has_gradient(train.loss.kind)) {
    throw ConfigError("bench.alpha: the configured discrepancy has no gradient to time");
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  ObjectReader r(j, "");
  r.read("seed", [&](const json& v, const std::string& p) { c.seed = as_uint(v, p); });
  r.read("data", [&](const json& v, const std::string& p) { parse_data(v, p, c.data); });
  r.read("history", [&](const json& v, const std::string& p) { c.history = as_index(v, p); });
  r.read("horizon", [&](const json& v, const std::string& p) { c.horizon = as_index(v, p); });
  r.read("split", [&](const json& v, const std::string& p) {
    ObjectReader s(v, p);
    s.read("ratios", [&](const json& x, const std::string& q) {
      const auto ratios = as_list<double>(x, q, as_double);
      if (ratios.size() != 3) throw ConfigError(q + ": expected three values (train, val, test)");
      c.split.ratios = {ratios[0], ratios[1], ratios[2]};
    });
    s.read("preset", [&](const json& x, const std::string& q) {
      if (x.is_null()) {
        c.split.preset.reset();
      } else {
        c.split.preset = as_string(x, q);
      }
    });
    s.finish();
  });
  r.read("train", [&](const json& v, const std::string& p) { parse_train(v, p, c.train); });
  r.read("sweep", [&](const json& v, const std::string& p) {
    ObjectReader s(v, p);
    s.read("alphas", [&](const json& x, const std::string& q) { c.sweep_alphas = as_list<double>(x, q, as_double); });
    s.finish();
  });
  r.read("analyze", [&](const json& v, const std::string& p) {
    ObjectReader s(v, p);
    s.read("threshold", [&](const json& x, const std::string& q) { c.analyze_threshold = as_double(x, q); });
    s.finish();
  });
  r.read("oracle", [&](const json& v, const std::string& p) {
    ObjectReader s(v, p);
    s.read("suite", [&](const json& x, const std::string& q) { c.oracle_suite = as_string(x, q); });
    s.finish();
  });
  r.read("bench", [&](const json& v, const std::string& p) {
    ObjectReader s(v, p);
    s.read("batch", [&](const json& x, const std::string& q) { c.bench.batch = as_index(x, q); });
    s.read("history", [&](const json& x, const std::string& q) { c.bench.history = as_index(x, q); });
    s.read("horizons", [&](const json& x, const std::string& q) {
      c.bench.horizons = as_list<Eigen::Index>(x, q, as_index);
    });
    s.read("variables", [&](const json& x, const std::string& q) { c.bench.variables = as_index(x, q); });
    s.read("repeats", [&](const json& x, const std::string& q) { c.bench.repeats = as_uint(x, q); });
    s.read("alpha", [&](const json& x, const std::string& q) { c.bench.alpha = as_double(x, q); });
    s.finish();
  });
  r.read("output_dir", [&](const json& v, const std::string& p) { c.output_dir = as_string(v, p); });
  r.finish();
  c.apply_seed(c.seed);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: {}", path, e.what()));
  }
  return parse_config(j);
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  using oj = nlohmann::ordered_json;
  oj data{{"source", c.data.source == DataSource::synthetic ? "synthetic" : "csv"}};
  if (c.data.source == DataSource::synthetic) {
    data["ar"] = oj{{"coefficients", c.data.ar.coefficients},
                    {"noise_std", c.data.ar.noise_std},
                    {"length", c.data.ar.length},
                    {"variables", c.data.ar.variables}};
  } else {
    data["path"] = c.data.csv_path;
    data["columns"] = c.data.columns;
  }
  data["standardize"] = c.data.standardize;

  oj split = oj::object();
  if (c.split.preset) {
    split["preset"] = *c.split.preset;
  } else {
    split["ratios"] = oj::array({c.split.ratios[0], c.split.ratios[1], c.split.ratios[2]});
  }

  const TrainConfig& t = c.train;
  oj train{{"alpha", t.loss.alpha},
           {"discrepancy", std::string(to_string(t.loss.kind))},
           {"clamp_eps", t.loss.clamp_eps},
           {"rbf_bandwidth", t.loss.rbf_bandwidth ? oj(*t.loss.rbf_bandwidth) : oj(nullptr)},
           {"learning_rate", t.learning_rate},
           {"batch_size", t.batch_size},
           {"max_epochs", t.max_epochs},
           {"patience", t.patience},
           {"model", std::string(to_string(t.model_kind))},
           {"hidden", t.hidden},
           {"init_scale", t.init_scale ? oj(*t.init_scale) : oj(nullptr)},
           {"adam_betas", oj::array({t.beta1, t.beta2})},
           {"adam_eps", t.adam_eps},
           {"select_on", t.select_on == SelectionMetric::loss ? "loss" : "mse"}};

  return oj{{"seed", c.seed},
            {"data", data},
            {"history", c.history},
            {"horizon", c.horizon},
            {"split", split},
            {"train", train},
            {"sweep", oj{{"alphas", c.sweep_alphas}}},
            {"analyze", oj{{"threshold", c.analyze_threshold}}},
            {"oracle", oj{{"suite", c.oracle_suite}}},
            {"bench", oj{{"batch", c.bench.batch},
                         {"history", c.bench.history},
                         {"horizons", c.bench.horizons},
                         {"variables", c.bench.variables},
                         {"repeats", c.bench.repeats},
                         {"alpha", c.bench.alpha}}},
            {"output_dir", c.output_dir}};
}

}  // namespace distdf
