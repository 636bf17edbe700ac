#pragma once

#include <cstddef>
#include <vector>

#include "distdf/linalg.hpp"

namespace distdf {

/// Weighted point cloud Σ aᵢ δ_{xᵢ}. Rows of `points` are support locations.
struct DiscreteDistribution {
  Matrix points;
  Vector weights;

  static DiscreteDistribution uniform(Matrix points);
  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  /// Throws InputError on negative weights or weights not summing to 1 (1e-12).
  void validate() const;
};

struct TransportPlan {
  Matrix plan;   // n×m coupling
  double value;  // ⟨D, P⟩
};

namespace ot {

/// Largest support handled by the general-weight simplex solver.
inline constexpr std::size_t kMaxGeneralSupport = 64;
/// Largest point cloud handled by the uniform-weight assignment path.
inline constexpr std::size_t kMaxAssignmentSize = 4096;

/// D_ij = ‖a_i − b_j‖_p^p.
Matrix ground_cost(const Matrix& a, const Matrix& b, int p);

/// Minimum-cost perfect matching on a square cost matrix via shortest
/// augmenting paths with dual potentials. Returns the column assigned to each row.
std::vector<std::size_t> solve_assignment(const Matrix& cost);

/// Exact transportation LP (network simplex on the bipartite graph).
TransportPlan solve_transport(const Matrix& cost, const Vector& source, const Vector& target);

}  // namespace ot

/// Exact Kantorovich problem with cost ‖x − y‖_p^p. Equal-size uniform inputs
/// are solved as an assignment problem; anything else by the simplex solver.
TransportPlan discrete_ot(const DiscreteDistribution& source, const DiscreteDistribution& target,
                          int p);

/// discrete_ot value between uniform-weight point clouds (W_p^p).
double empirical_wasserstein(const Matrix& samples_a, const Matrix& samples_b, int p);

}  // namespace distdf
