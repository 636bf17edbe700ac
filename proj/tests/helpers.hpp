#pragma once

#include <cstdint>

#include "distdf/linalg.hpp"
#include "distdf/rng.hpp"

namespace testing {

using distdf::Matrix;
using distdf::Vector;

inline Matrix normal(distdf::CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

inline Matrix normal(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  distdf::CounterRng rng(seed, 77);
  return normal(rng, rows, cols);
}

inline Matrix random_spd(distdf::CounterRng& rng, Eigen::Index d, double ridge = 0.1) {
  const Matrix a = normal(rng, d, d);
  return a * a.transpose() + ridge * Matrix::Identity(d, d);
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// ‖g − fd‖∞ ≤ rtol · ‖fd‖∞
inline bool gradient_close(const Matrix& g, const Matrix& fd, double rtol) {
  return max_abs(g - fd) <= rtol * std::max(max_abs(fd), 1e-12);
}

}  // namespace testing
