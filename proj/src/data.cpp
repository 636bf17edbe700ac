#include "distdf/data.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "distdf/error.hpp"
#include "distdf/rng.hpp"

namespace distdf {

Series Series::slice(Eigen::Index begin, Eigen::Index end) const {
  if (begin < 0 || end > length() || begin > end) {
    throw DimensionError(fmt::format("Series::slice: [{}, {}) outside [0, {})", begin, end, length()));
  }
  Series out;
  out.values = values.middleRows(begin, end - begin);
  out.variable_names = variable_names;
  if (!timestamps.empty()) {
    out.timestamps.assign(timestamps.begin() + begin, timestamps.begin() + end);
  }
  return out;
}

double companion_spectral_radius(const std::vector<double>& coefficients) {
  const auto p = static_cast<Eigen::Index>(coefficients.size());
  if (p == 0) return 0.0;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index k = 0; k < p; ++k) companion(0, k) = coefficients[static_cast<std::size_t>(k)];
  for (Eigen::Index k = 1; k < p; ++k) companion(k, k - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

void ArSpec::validate() const {
  if (coefficients.empty()) throw ConfigError("ar.coefficients: need at least one coefficient");
  for (double c : coefficients) {
    if (!std::isfinite(c)) throw ConfigError("ar.coefficients: non-finite value");
  }
  if (!(noise_std > 0.0) || !std::isfinite(noise_std)) throw ConfigError("ar.noise_std: must be positive");
  if (length == 0) throw ConfigError("ar.length: must be positive");
  if (variables == 0) throw ConfigError("ar.variables: must be positive");
  const double radius = companion_spectral_radius(coefficients);
  if (!(radius < 1.0)) {
    throw ConfigError(fmt::format(
        "ar.coefficients: process is not stationary (companion spectral radius {:.6g} >= 1)", radius));
  }
}

Series generate_ar(const ArSpec& spec) {
  spec.validate();
  const std::size_t p = spec.coefficients.size();
  const std::size_t burn = 10 * p;
  const std::size_t total = burn + spec.length;
  Series out;
  out.values.resize(static_cast<Eigen::Index>(spec.length), static_cast<Eigen::Index>(spec.variables));
  for (std::size_t v = 0; v < spec.variables; ++v) {
    CounterRng rng(spec.seed, v);
    std::vector<double> s(total, 0.0);
    for (std::size_t t = 0; t < total; ++t) {
      double x = spec.noise_std * rng.normal();
      for (std::size_t k = 0; k < p && k < t; ++k) x += spec.coefficients[k] * s[t - 1 - k];
      s[t] = x;
    }
    for (std::size_t t = 0; t < spec.length; ++t) {
      out.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(v)) = s[burn + t];
    }
    out.variable_names.push_back("x" + std::to_string(v));
  }
  return out;
}

Matrix ar1_conditional_cov(double phi, double sigma, Eigen::Index horizon) {
  if (!(std::abs(phi) < 1.0)) throw InputError("ar1_conditional_cov: |phi| must be < 1");
  if (horizon < 1) throw InputError("ar1_conditional_cov: horizon must be >= 1");
  Matrix cov(horizon, horizon);
  const double var = sigma * sigma;
  for (Eigen::Index s = 1; s <= horizon; ++s) {
    for (Eigen::Index t = 1; t <= horizon; ++t) {
      const auto lag = static_cast<double>(std::abs(s - t));
      const auto m = static_cast<double>(std::min(s, t));
      // Σ_{k<m} φ^{2k} written as a finite sum so φ = 0 gives exactly σ²·I.
      double geometric = 0.0;
      double term = 1.0;
      for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(m); ++k) {
        geometric += term;
        term *= phi * phi;
      }
      cov(s - 1, t - 1) = var * std::pow(phi, lag) * geometric;
    }
  }
  return cov;
}

WindowBatch WindowBatch::select(const std::vector<std::size_t>& rows) const {
  WindowBatch out;
  out.variable_index = variable_index;
  out.history.resize(static_cast<Eigen::Index>(rows.size()), history.cols());
  out.label.resize(static_cast<Eigen::Index>(rows.size()), label.cols());
  out.offsets.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.history.row(static_cast<Eigen::Index>(i)) = history.row(r);
    out.label.row(static_cast<Eigen::Index>(i)) = label.row(r);
    out.offsets.push_back(offsets[rows[i]]);
  }
  return out;
}

Eigen::Index window_count(Eigen::Index total, Eigen::Index history, Eigen::Index horizon, Eigen::Index stride) {
  if (total < history + horizon) return 0;
  return (total - history - horizon) / stride + 1;
}

std::vector<WindowBatch> make_windows(const Series& series, Eigen::Index history, Eigen::Index horizon,
                                      Eigen::Index stride) {
  if (history < 1 || horizon < 1 || stride < 1) {
    throw InputError("make_windows: H, T and stride must all be >= 1");
  }
  const Eigen::Index count = window_count(series.length(), history, horizon, stride);
  if (count == 0) {
    throw InputError(fmt::format("make_windows: series of {} steps is shorter than H + T = {}", series.length(),
                                 history + horizon));
  }
  std::vector<WindowBatch> out;
  for (Eigen::Index v = 0; v < series.variables(); ++v) {
    WindowBatch b;
    b.variable_index = static_cast<std::size_t>(v);
    b.history.resize(count, history);
    b.label.resize(count, horizon);
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index offset = i * stride;
      b.offsets.push_back(offset);
      for (Eigen::Index k = 0; k < history; ++k) b.history(i, k) = series.values(offset + k, v);
      for (Eigen::Index k = 0; k < horizon; ++k) b.label(i, k) = series.values(offset + history + k, v);
    }
    out.push_back(std::move(b));
  }
  return out;
}

Splits chronological_split(const Series& series, const SplitRatios& ratios, Eigen::Index min_length) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ConfigError("split.ratios: every ratio must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError(fmt::format("split.ratios: sum to {}, not 1", sum));
  const auto n = static_cast<double>(series.length());
  const auto train = static_cast<Eigen::Index>(std::floor(n * ratios[0] + 1e-9));
  const auto val = static_cast<Eigen::Index>(std::floor(n * ratios[1] + 1e-9));
  const Eigen::Index test = series.length() - train - val;
  const std::array<std::pair<const char*, Eigen::Index>, 3> parts{{{"train", train}, {"val", val}, {"test", test}}};
  for (const auto& [name, len] : parts) {
    if (len < std::max<Eigen::Index>(min_length, 1)) {
      throw InputError(fmt::format("chronological_split: {} segment has {} steps, need at least {}", name, len,
                                   std::max<Eigen::Index>(min_length, 1)));
    }
  }
  return {series.slice(0, train), series.slice(train, train + val), series.slice(train + val, series.length())};
}

std::optional<SplitPreset> find_preset(const std::string& name) {
  constexpr Eigen::Index kHour = 30 * 24;
  if (name == "ett_hour") {
    return SplitPreset{name, {12 * kHour, 4 * kHour, 4 * kHour}, {8545, 2881, 2881}};
  }
  if (name == "ett_minute") {
    return SplitPreset{name, {12 * kHour * 4, 4 * kHour * 4, 4 * kHour * 4}, {34465, 11521, 11521}};
  }
  return std::nullopt;
}

Splits preset_split(const Series& series, const SplitPreset& preset, Eigen::Index lookback) {
  const Eigen::Index train_end = preset.steps[0];
  const Eigen::Index val_end = train_end + preset.steps[1];
  const Eigen::Index test_end = val_end + preset.steps[2];
  if (series.length() < test_end) {
    throw InputError(fmt::format("preset '{}' needs {} steps, series has {}", preset.name, test_end, series.length()));
  }
  if (lookback < 0 || lookback > train_end) throw InputError("preset_split: lookback out of range");
  return {series.slice(0, train_end), series.slice(train_end - lookback, val_end),
          series.slice(val_end - lookback, test_end)};
}

Series Scaler::transform(const Series& s) const {
  if (s.variables() != mean.size()) throw DimensionError("Scaler::transform: variable count mismatch");
  Series out = s;
  for (Eigen::Index v = 0; v < s.variables(); ++v) {
    out.values.col(v) = (s.values.col(v).array() - mean(v)) / scale(v);
  }
  return out;
}

Series Scaler::inverse(const Series& s) const {
  if (s.variables() != mean.size()) throw DimensionError("Scaler::inverse: variable count mismatch");
  Series out = s;
  for (Eigen::Index v = 0; v < s.variables(); ++v) {
    out.values.col(v) = s.values.col(v).array() * scale(v) + mean(v);
  }
  return out;
}

Scaler fit_scaler(const Series& train) {
  if (train.length() == 0) throw InsufficientSamplesError("standardize: empty training split");
  Scaler sc;
  const Eigen::Index d = train.variables();
  const auto n = static_cast<double>(train.length());
  sc.mean = Vector::Zero(d);
  sc.scale = Vector::Ones(d);
  for (Eigen::Index v = 0; v < d; ++v) {
    double s = 0.0;
    for (Eigen::Index t = 0; t < train.length(); ++t) s += train.values(t, v);
    const double mu = s / n;
    double ss = 0.0;
    for (Eigen::Index t = 0; t < train.length(); ++t) {
      const double c = train.values(t, v) - mu;
      ss += c * c;
    }
    const double sd = std::sqrt(ss / n);
    sc.mean(v) = mu;
    if (sd > 0.0) {
      sc.scale(v) = sd;
    } else {
      sc.constant_variables.push_back(static_cast<std::size_t>(v));
      std::cerr << "warning: variable " << v << " is constant on the training split; scale set to 1\n";
    }
  }
  return sc;
}

std::pair<Scaler, std::vector<Series>> standardize(const Series& train, const std::vector<Series>& others) {
  Scaler sc = fit_scaler(train);
  std::vector<Series> out;
  out.push_back(sc.transform(train));
  for (const auto& s : others) out.push_back(sc.transform(s));
  return {std::move(sc), std::move(out)};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Series read_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name + ": missing header row");
  auto header = split_fields(trim(line));
  for (auto& h : header) h = trim(h);
  const bool has_date = !header.empty() && lower(header[0]) == "date";
  const std::size_t first_value = has_date ? 1 : 0;
  if (header.size() <= first_value) throw ParseError(source_name + ": no numeric columns in header");

  Series out;
  out.variable_names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_value), header.end());
  std::vector<double> values;
  std::size_t row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(fmt::format("{}: row {} has {} fields, header has {}", source_name, row, fields.size(),
                                   header.size()));
    }
    if (has_date) out.timestamps.push_back(trim(fields[0]));
    for (std::size_t c = first_value; c < fields.size(); ++c) {
      const std::string cell = trim(fields[c]);
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (cell.empty() || end != cell.c_str() + cell.size() || !std::isfinite(x)) {
        throw ParseError(fmt::format("{}: row {}, column {} ('{}'): non-numeric value '{}'", source_name, row,
                                     c + 1, header[c], cell));
      }
      values.push_back(x);
    }
  }
  const auto d = static_cast<Eigen::Index>(out.variable_names.size());
  const auto t = static_cast<Eigen::Index>(values.size()) / d;
  out.values = Eigen::Map<const Matrix>(values.data(), t, d);
  return out;
}

Series load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file: " + path);
  return read_csv(in, path);
}

void write_csv(std::ostream& out, const Series& series) {
  const bool has_date = !series.timestamps.empty();
  if (has_date) out << "date";
  for (std::size_t v = 0; v < series.variable_names.size(); ++v) {
    if (has_date || v > 0) out << ',';
    out << series.variable_names[v];
  }
  out << '\n';
  for (Eigen::Index t = 0; t < series.length(); ++t) {
    if (has_date) out << series.timestamps[static_cast<std::size_t>(t)];
    for (Eigen::Index v = 0; v < series.variables(); ++v) {
      if (has_date || v > 0) out << ',';
      out << fmt::format("{:.17g}", series.values(t, v));
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const Series& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open CSV file for writing: " + path);
  write_csv(out, series);
  if (!out) throw InputError("failed writing CSV file: " + path);
}

}  // namespace distdf
