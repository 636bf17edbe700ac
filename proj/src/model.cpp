#include "distdf/model.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <type_traits>
#include <vector>

#include "distdf/error.hpp"
#include "distdf/rng.hpp"

namespace distdf {
namespace {

constexpr std::string_view kMagic = "distdf-checkpoint";
constexpr int kVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_history(const Matrix& history, Eigen::Index expected) {
  if (history.cols() != expected) {
    throw DimensionError("forward: history has " + std::to_string(history.cols()) +
                         " columns, model expects " + std::to_string(expected));
  }
}

// Visits every parameter block in declaration order.
template <class M, class F>
void for_each_block(M& model, F&& f) {
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearForecaster>) {
          f(m.weights.data(), m.weights.size());
          f(m.bias.data(), m.bias.size());
        } else {
          f(m.w1.data(), m.w1.size());
          f(m.b1.data(), m.b1.size());
          f(m.w2.data(), m.w2.size());
          f(m.b2.data(), m.b2.size());
        }
      },
      model);
}

Vector column_sums(const Matrix& m) {
  Vector s = Vector::Zero(m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) s += m.row(i).transpose();
  return s;
}

void write_block(std::ostream& out, std::string_view name, const double* data, Eigen::Index rows,
                 Eigen::Index cols) {
  out << fmt::format("param {} {} {}\n", name, rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (c > 0) out << ' ';
      out << fmt::format("{:.17g}", data[r * cols + c]);
    }
    out << '\n';
  }
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::istream& in) : in_(in) {}

  std::string expect_key(std::string_view key) {
    std::string line = next_line();
    std::istringstream ss(line);
    std::string k, value;
    ss >> k;
    std::getline(ss >> std::ws, value);
    if (k != key) fail("expected '" + std::string(key) + "', found '" + k + "'");
    return value;
  }

  long long expect_int(std::string_view key) {
    const std::string v = expect_key(key);
    try {
      std::size_t pos = 0;
      const long long x = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      fail("'" + std::string(key) + "' is not an integer");
    }
  }

  void read_block(std::string_view name, double* data, Eigen::Index rows, Eigen::Index cols) {
    std::istringstream header(expect_key("param"));
    std::string got;
    long long r = -1, c = -1;
    header >> got >> r >> c;
    if (got != name || r != rows || c != cols) {
      fail(fmt::format("expected parameter {} {}x{}, found {} {}x{}", name, rows, cols, got, r, c));
    }
    for (Eigen::Index i = 0; i < rows; ++i) {
      std::istringstream row(next_line());
      for (Eigen::Index j = 0; j < cols; ++j) {
        std::string token;
        if (!(row >> token)) fail(fmt::format("parameter {} row {} is short", name, i));
        char* end = nullptr;
        const double x = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || !std::isfinite(x)) {
          fail(fmt::format("parameter {} has a non-numeric value '{}'", name, token));
        }
        data[i * cols + j] = x;
      }
    }
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(fmt::format("checkpoint line {}: {}", line_no_, why));
  }

  std::string next_line() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file");
    ++line_no_;
    return line;
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

}  // namespace

std::string_view to_string(ModelKind kind) { return kind == ModelKind::linear ? "linear" : "mlp"; }

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::linear;
  if (name == "mlp") return ModelKind::mlp;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

ModelShape shape_of(const Model& model) {
  return std::visit(Overloaded{
                        [](const LinearForecaster& m) {
                          return ModelShape{ModelKind::linear, m.weights.rows(), m.weights.cols(), 0};
                        },
                        [](const MlpForecaster& m) {
                          return ModelShape{ModelKind::mlp, m.w1.rows(), m.w2.cols(), m.w1.cols()};
                        },
                    },
                    model);
}

Model init_model(const ModelShape& shape, std::uint64_t seed, double scale) {
  if (shape.history < 1 || shape.horizon < 1) throw ConfigError("model: history and horizon must be >= 1");
  if (!(scale >= 0.0)) throw ConfigError("model.init_scale: must be >= 0");
  Model model;
  if (shape.kind == ModelKind::linear) {
    model = LinearForecaster{Matrix(shape.history, shape.horizon), Vector(shape.horizon)};
  } else {
    if (shape.hidden < 1) throw ConfigError("model.hidden: must be >= 1 for mlp");
    model = MlpForecaster{Matrix(shape.history, shape.hidden), Vector(shape.hidden),
                          Matrix(shape.hidden, shape.horizon), Vector(shape.horizon)};
  }
  CounterRng rng(seed);
  for_each_block(model, [&](double* data, Eigen::Index n) {
    for (Eigen::Index k = 0; k < n; ++k) data[k] = scale == 0.0 ? 0.0 : rng.uniform(-scale, scale);
  });
  return model;
}

Matrix forward(const Model& model, const Matrix& history) {
  return std::visit(Overloaded{
                        [&](const LinearForecaster& m) -> Matrix {
                          check_history(history, m.weights.rows());
                          Matrix out = history * m.weights;
                          out.rowwise() += m.bias.transpose();
                          return out;
                        },
                        [&](const MlpForecaster& m) -> Matrix {
                          check_history(history, m.w1.rows());
                          Matrix hidden = history * m.w1;
                          hidden.rowwise() += m.b1.transpose();
                          hidden = hidden.array().tanh().matrix();
                          Matrix out = hidden * m.w2;
                          out.rowwise() += m.b2.transpose();
                          return out;
                        },
                    },
                    model);
}

ParameterGradients backward(const Model& model, const Matrix& history, const Matrix& grad_forecast) {
  const auto shape = shape_of(model);
  check_history(history, shape.history);
  if (grad_forecast.rows() != history.rows() || grad_forecast.cols() != shape.horizon) {
    throw DimensionError(fmt::format("backward: gradient is {}x{}, expected {}x{}", grad_forecast.rows(),
                                     grad_forecast.cols(), history.rows(), shape.horizon));
  }
  return std::visit(Overloaded{
                        [&](const LinearForecaster&) -> ParameterGradients {
                          return LinearForecaster{history.transpose() * grad_forecast, column_sums(grad_forecast)};
                        },
                        [&](const MlpForecaster& m) -> ParameterGradients {
                          Matrix hidden = history * m.w1;
                          hidden.rowwise() += m.b1.transpose();
                          hidden = hidden.array().tanh().matrix();
                          const Matrix grad_hidden = grad_forecast * m.w2.transpose();
                          const Matrix grad_pre =
                              (grad_hidden.array() * (1.0 - hidden.array().square())).matrix();
                          return MlpForecaster{history.transpose() * grad_pre, column_sums(grad_pre),
                                               hidden.transpose() * grad_forecast, column_sums(grad_forecast)};
                        },
                    },
                    model);
}

std::size_t parameter_count(const Model& model) {
  std::size_t n = 0;
  for_each_block(model, [&](const double*, Eigen::Index k) { n += static_cast<std::size_t>(k); });
  return n;
}

Vector flatten(const Model& model) {
  Vector flat(static_cast<Eigen::Index>(parameter_count(model)));
  Eigen::Index offset = 0;
  for_each_block(model, [&](const double* data, Eigen::Index k) {
    for (Eigen::Index i = 0; i < k; ++i) flat(offset + i) = data[i];
    offset += k;
  });
  return flat;
}

void assign(Model& model, const Vector& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count(model)) {
    throw DimensionError("assign: parameter vector has the wrong length");
  }
  Eigen::Index offset = 0;
  for_each_block(model, [&](double* data, Eigen::Index k) {
    for (Eigen::Index i = 0; i < k; ++i) data[i] = flat(offset + i);
    offset += k;
  });
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const auto shape = shape_of(ckpt.model);
  out << kMagic << " v" << kVersion << '\n';
  out << "kind " << to_string(shape.kind) << '\n';
  out << "history " << shape.history << '\n';
  out << "horizon " << shape.horizon << '\n';
  out << "hidden " << shape.hidden << '\n';
  out << "seed " << ckpt.seed << '\n';
  std::visit(Overloaded{
                 [&](const LinearForecaster& m) {
                   write_block(out, "weights", m.weights.data(), m.weights.rows(), m.weights.cols());
                   write_block(out, "bias", m.bias.data(), 1, m.bias.size());
                 },
                 [&](const MlpForecaster& m) {
                   write_block(out, "w1", m.w1.data(), m.w1.rows(), m.w1.cols());
                   write_block(out, "b1", m.b1.data(), 1, m.b1.size());
                   write_block(out, "w2", m.w2.data(), m.w2.rows(), m.w2.cols());
                   write_block(out, "b2", m.b2.data(), 1, m.b2.size());
                 },
             },
             ckpt.model);
  out << "end\n";
}

Checkpoint read_checkpoint(std::istream& in) {
  CheckpointReader reader(in);
  const std::string header = reader.next_line();
  if (header != fmt::format("{} v{}", kMagic, kVersion)) reader.fail("unrecognized header '" + header + "'");
  ModelShape shape;
  shape.kind = parse_model_kind(reader.expect_key("kind"));
  shape.history = reader.expect_int("history");
  shape.horizon = reader.expect_int("horizon");
  shape.hidden = reader.expect_int("hidden");
  const long long seed_value = reader.expect_int("seed");
  if (shape.history < 1 || shape.horizon < 1 || shape.hidden < 0) reader.fail("invalid model shape");

  Checkpoint ckpt;
  ckpt.seed = static_cast<std::uint64_t>(seed_value);
  if (shape.kind == ModelKind::linear) {
    LinearForecaster m{Matrix(shape.history, shape.horizon), Vector(shape.horizon)};
    reader.read_block("weights", m.weights.data(), shape.history, shape.horizon);
    reader.read_block("bias", m.bias.data(), 1, shape.horizon);
    ckpt.model = std::move(m);
  } else {
    if (shape.hidden < 1) reader.fail("mlp checkpoint needs hidden >= 1");
    MlpForecaster m{Matrix(shape.history, shape.hidden), Vector(shape.hidden), Matrix(shape.hidden, shape.horizon),
                    Vector(shape.horizon)};
    reader.read_block("w1", m.w1.data(), shape.history, shape.hidden);
    reader.read_block("b1", m.b1.data(), 1, shape.hidden);
    reader.read_block("w2", m.w2.data(), shape.hidden, shape.horizon);
    reader.read_block("b2", m.b2.data(), 1, shape.horizon);
    ckpt.model = std::move(m);
  }
  if (reader.next_line() != "end") reader.fail("missing 'end' marker");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path);
  write_checkpoint(out, ckpt);
  if (!out) throw InputError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  return read_checkpoint(in);
}

}  // namespace distdf
