#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>

#include "distdf/linalg.hpp"

namespace distdf {

/// Ŷ = X·W + 1·bᵀ.
struct LinearForecaster {
  Matrix weights;  // H×T
  Vector bias;     // T
};

/// Ŷ = tanh(X·W1 + b1)·W2 + b2.
struct MlpForecaster {
  Matrix w1;  // H×K
  Vector b1;  // K
  Matrix w2;  // K×T
  Vector b2;  // T
};

/// One parameter set applied to every variable (channel independence).
/// Gradients use the same type as the model they belong to.
using Model = std::variant<LinearForecaster, MlpForecaster>;
using ParameterGradients = Model;

enum class ModelKind { linear, mlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelShape {
  ModelKind kind = ModelKind::linear;
  Eigen::Index history = 0;
  Eigen::Index horizon = 0;
  Eigen::Index hidden = 0;  // MLP only
};

ModelShape shape_of(const Model& model);

/// Parameters drawn uniform(−scale, scale) from a seeded CounterRng, in
/// declaration order (row-major within each matrix).
Model init_model(const ModelShape& shape, std::uint64_t seed, double scale);

Matrix forward(const Model& model, const Matrix& history);

/// Parameter gradients given the upstream gradient on the forecast.
ParameterGradients backward(const Model& model, const Matrix& history, const Matrix& grad_forecast);

std::size_t parameter_count(const Model& model);
Vector flatten(const Model& model);
/// Overwrites every parameter from a flat vector produced by flatten().
void assign(Model& model, const Vector& flat);

/// Model plus the seed that initialized it.
struct Checkpoint {
  Model model;
  std::uint64_t seed = 0;
};

/// Versioned text container; doubles printed with 17 significant digits so
/// write → read → write is byte-identical.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace distdf
