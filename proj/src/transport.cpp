#include "distdf/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include "distdf/error.hpp"

namespace distdf {

DiscreteDistribution DiscreteDistribution::uniform(Matrix points) {
  const auto n = points.rows();
  DiscreteDistribution d{std::move(points), Vector::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0)};
  return d;
}

void DiscreteDistribution::validate() const {
  if (points.rows() == 0) throw InputError("discrete distribution: empty support");
  if (weights.size() != points.rows()) {
    throw DimensionError("discrete distribution: " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(points.rows()) + " points");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) >= 0.0)) throw InputError("discrete distribution: negative weight");
    total += weights(i);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InputError("discrete distribution: weights sum to " + std::to_string(total) + ", not 1");
  }
  linalg::require_finite(points, "discrete distribution");
}

namespace ot {

Matrix ground_cost(const Matrix& a, const Matrix& b, int p) {
  if (p < 1) throw InputError("ground_cost: p must be >= 1");
  if (a.cols() != b.cols()) {
    throw DimensionError("ground_cost: point dimension " + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.cols()));
  }
  Matrix cost(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) {
        const double d = std::abs(a(i, k) - b(j, k));
        s += p == 1 ? d : (p == 2 ? d * d : std::pow(d, p));
      }
      cost(i, j) = s;
    }
  }
  return cost;
}

std::vector<std::size_t> solve_assignment(const Matrix& cost) {
  linalg::require_square(cost, "solve_assignment");
  linalg::require_finite(cost, "solve_assignment");
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n, 0.0), v(n, kInf);
  std::vector<std::size_t> col_of_row(n, kNone), row_of_col(n, kNone);
  auto c = [&](std::size_t i, std::size_t j) { return cost.data()[i * n + j]; };

  // Column reduction: v_j = min_i c_ij keeps every reduced cost ≥ 0 with u = 0,
  // and each column's argmin row can be matched at zero reduced cost.
  std::vector<std::size_t> argmin(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (c(i, j) < v[j]) {
        v[j] = c(i, j);
        argmin[j] = i;
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (col_of_row[argmin[j]] == kNone) {
      col_of_row[argmin[j]] = j;
      row_of_col[j] = argmin[j];
    }
  }

  std::vector<double> shortest(n);
  std::vector<std::size_t> path(n), remaining(n), scanned_cols, scanned_rows;
  scanned_cols.reserve(n);
  scanned_rows.reserve(n);
  for (std::size_t start = 0; start < n; ++start) {
    if (col_of_row[start] != kNone) continue;
    // Dijkstra over columns in reduced costs, one pass over the unscanned set per step.
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::iota(remaining.begin(), remaining.end(), std::size_t{0});
    std::size_t remaining_count = n;
    scanned_cols.clear();
    scanned_rows.clear();
    std::size_t row = start;
    std::size_t sink = kNone;
    double min_val = 0.0;
    while (sink == kNone) {
      scanned_rows.push_back(row);
      const double* crow = cost.data() + row * n;
      const double base = min_val - u[row];
      double lowest = kInf;
      std::size_t pick = kNone;
      for (std::size_t k = 0; k < remaining_count; ++k) {
        const std::size_t j = remaining[k];
        const double r = base + crow[j] - v[j];
        if (r < shortest[j]) {
          path[j] = row;
          shortest[j] = r;
        }
        if (shortest[j] < lowest || (shortest[j] == lowest && row_of_col[j] == kNone)) {
          lowest = shortest[j];
          pick = k;
        }
      }
      if (pick == kNone) throw NumericalError("solve_assignment: no augmenting path");
      min_val = lowest;
      const std::size_t j = remaining[pick];
      remaining[pick] = remaining[--remaining_count];
      if (row_of_col[j] == kNone) {
        sink = j;
      } else {
        scanned_cols.push_back(j);
        row = row_of_col[j];
      }
    }
    u[start] += min_val;
    for (std::size_t k = 1; k < scanned_rows.size(); ++k) {
      const std::size_t i = scanned_rows[k];
      u[i] += min_val - shortest[col_of_row[i]];
    }
    for (std::size_t j : scanned_cols) v[j] -= min_val - shortest[j];
    for (std::size_t j = sink;;) {
      const std::size_t i = path[j];
      row_of_col[j] = i;
      std::swap(col_of_row[i], j);
      if (i == start) break;
    }
  }
  return col_of_row;
}

namespace {

struct Cell {
  std::size_t row;
  std::size_t col;
  double flow;
};

// Spanning-tree basis of the transportation polytope: n + m − 1 cells.
class TransportSimplex {
 public:
  TransportSimplex(const Matrix& cost, const Vector& a, const Vector& b)
      : cost_(cost), n_(static_cast<std::size_t>(a.size())), m_(static_cast<std::size_t>(b.size())) {
    northwest_corner(a, b);
  }

  void run() {
    double scale = 1.0;
    for (Eigen::Index k = 0; k < cost_.size(); ++k) scale = std::max(scale, std::abs(cost_.data()[k]));
    const double tol = 1e-12 * scale;
    const std::size_t max_iter = 200 * (n_ + m_) * (n_ + m_) + 1000;
    std::size_t degenerate_run = 0;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      compute_potentials();
      // Dantzig pricing; after a run of degenerate pivots fall back to the
      // first improving cell in row-major order (Bland) to rule out cycling.
      const bool bland = degenerate_run > n_ + m_;
      std::size_t enter_r = n_, enter_c = m_;
      double best = -tol;
      for (std::size_t i = 0; i < n_ && !(bland && enter_r < n_); ++i) {
        for (std::size_t j = 0; j < m_; ++j) {
          if (in_basis(i, j)) continue;
          const double reduced = cost_(i, j) - u_[i] - v_[j];
          if (reduced < best) {
            best = reduced;
            enter_r = i;
            enter_c = j;
            if (bland) break;
          }
        }
      }
      if (enter_r == n_) return;
      const double theta = pivot(enter_r, enter_c);
      degenerate_run = theta > 0.0 ? 0 : degenerate_run + 1;
    }
    throw NumericalError("solve_transport: simplex iteration cap reached");
  }

  TransportPlan result() const {
    TransportPlan out{Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_)), 0.0};
    for (const auto& c : basis_) {
      out.plan(static_cast<Eigen::Index>(c.row), static_cast<Eigen::Index>(c.col)) = std::max(c.flow, 0.0);
    }
    for (Eigen::Index i = 0; i < out.plan.rows(); ++i) {
      for (Eigen::Index j = 0; j < out.plan.cols(); ++j) out.value += cost_(i, j) * out.plan(i, j);
    }
    return out;
  }

 private:
  void northwest_corner(const Vector& a, const Vector& b) {
    std::vector<double> ra(a.data(), a.data() + n_), rb(b.data(), b.data() + m_);
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(ra[i], rb[j]);
      basis_.push_back({i, j, x});
      ra[i] -= x;
      rb[j] -= x;
      if (i + 1 == n_ && j + 1 == m_) break;
      if (i + 1 == n_) {
        ++j;
      } else if (j + 1 == m_) {
        ++i;
      } else if (ra[i] <= rb[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  bool in_basis(std::size_t i, std::size_t j) const {
    return basis_index_[i * m_ + j] >= 0;
  }

  void rebuild_index() {
    basis_index_.assign(n_ * m_, -1);
    row_cells_.assign(n_, {});
    col_cells_.assign(m_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      basis_index_[basis_[k].row * m_ + basis_[k].col] = static_cast<long>(k);
      row_cells_[basis_[k].row].push_back(k);
      col_cells_[basis_[k].col].push_back(k);
    }
  }

  void compute_potentials() {
    rebuild_index();
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    std::vector<char> row_done(n_, 0), col_done(m_, 0);
    // Nodes 0..n-1 are rows, n..n+m-1 columns.
    std::vector<std::size_t> stack{0};
    row_done[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      if (node < n_) {
        for (std::size_t k : row_cells_[node]) {
          const auto& c = basis_[k];
          if (col_done[c.col]) continue;
          v_[c.col] = cost_(c.row, c.col) - u_[c.row];
          col_done[c.col] = 1;
          stack.push_back(n_ + c.col);
        }
      } else {
        const std::size_t col = node - n_;
        for (std::size_t k : col_cells_[col]) {
          const auto& c = basis_[k];
          if (row_done[c.row]) continue;
          u_[c.row] = cost_(c.row, c.col) - v_[c.col];
          row_done[c.row] = 1;
          stack.push_back(c.row);
        }
      }
    }
  }

  // Tree path from column node `enter_c` to row node `enter_r`, as basis cell indices.
  std::vector<std::size_t> tree_path(std::size_t enter_r, std::size_t enter_c) const {
    const std::size_t nodes = n_ + m_;
    const std::size_t none = static_cast<std::size_t>(-1);
    std::vector<std::size_t> parent_cell(nodes, none), parent_node(nodes, none);
    std::vector<char> seen(nodes, 0);
    std::vector<std::size_t> queue{n_ + enter_c};
    seen[n_ + enter_c] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      if (node == enter_r) break;
      const auto& cells = node < n_ ? row_cells_[node] : col_cells_[node - n_];
      for (std::size_t k : cells) {
        const std::size_t other = node < n_ ? n_ + basis_[k].col : basis_[k].row;
        if (seen[other]) continue;
        seen[other] = 1;
        parent_cell[other] = k;
        parent_node[other] = node;
        queue.push_back(other);
      }
    }
    if (!seen[enter_r]) throw NumericalError("solve_transport: basis is not a spanning tree");
    std::vector<std::size_t> path;
    for (std::size_t node = enter_r; node != n_ + enter_c; node = parent_node[node]) {
      path.push_back(parent_cell[node]);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  double pivot(std::size_t enter_r, std::size_t enter_c) {
    // The cycle is entering(+), then path cells from the entering column to
    // the entering row alternating −, +, −, ...
    const auto path = tree_path(enter_r, enter_c);
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = path.front();
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const auto& c = basis_[path[k]];
      const auto& l = basis_[leave];
      if (c.flow < theta || (c.flow == theta && std::tie(c.row, c.col) < std::tie(l.row, l.col))) {
        theta = c.flow;
        leave = path[k];
      }
    }
    theta = std::max(theta, 0.0);
    for (std::size_t k = 0; k < path.size(); ++k) {
      basis_[path[k]].flow += (k % 2 == 0) ? -theta : theta;
    }
    basis_[leave] = {enter_r, enter_c, theta};
    return theta;
  }

  const Matrix& cost_;
  std::size_t n_;
  std::size_t m_;
  std::vector<Cell> basis_;
  std::vector<long> basis_index_;
  std::vector<std::vector<std::size_t>> row_cells_, col_cells_;
  std::vector<double> u_, v_;
};

}  // namespace

TransportPlan solve_transport(const Matrix& cost, const Vector& source, const Vector& target) {
  if (cost.rows() != source.size() || cost.cols() != target.size()) {
    throw DimensionError("solve_transport: cost is " + std::to_string(cost.rows()) + "x" +
                         std::to_string(cost.cols()) + " but marginals have " +
                         std::to_string(source.size()) + " and " + std::to_string(target.size()) +
                         " entries");
  }
  TransportSimplex simplex(cost, source, target);
  simplex.run();
  return simplex.result();
}

}  // namespace ot

namespace {

bool is_uniform(const Vector& w) {
  const double expected = 1.0 / static_cast<double>(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (std::abs(w(i) - expected) > 1e-15) return false;
  }
  return true;
}

}  // namespace

TransportPlan discrete_ot(const DiscreteDistribution& source, const DiscreteDistribution& target,
                          int p) {
  source.validate();
  target.validate();
  const Matrix cost = ot::ground_cost(source.points, target.points, p);
  const std::size_t n = source.size();
  const std::size_t m = target.size();

  if (n == m && is_uniform(source.weights) && is_uniform(target.weights)) {
    if (n > ot::kMaxAssignmentSize) {
      throw InputError("discrete_ot: " + std::to_string(n) + " points exceeds the assignment limit " +
                       std::to_string(ot::kMaxAssignmentSize));
    }
    const auto assignment = ot::solve_assignment(cost);
    TransportPlan out{Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)), 0.0};
    const double mass = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.plan(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i])) = mass;
      out.value += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(assignment[i]));
    }
    out.value *= mass;
    return out;
  }

  if (n > ot::kMaxGeneralSupport || m > ot::kMaxGeneralSupport) {
    throw InputError("discrete_ot: general-weight solver is limited to " +
                     std::to_string(ot::kMaxGeneralSupport) + " support points per side");
  }
  return ot::solve_transport(cost, source.weights, target.weights);
}

double empirical_wasserstein(const Matrix& samples_a, const Matrix& samples_b, int p) {
  return discrete_ot(DiscreteDistribution::uniform(samples_a), DiscreteDistribution::uniform(samples_b), p)
      .value;
}

}  // namespace distdf
