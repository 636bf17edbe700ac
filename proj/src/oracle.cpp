#include "distdf/oracle.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>

#include "distdf/analysis.hpp"
#include "distdf/data.hpp"
#include "distdf/discrepancy.hpp"
#include "distdf/error.hpp"
#include "distdf/rng.hpp"
#include "distdf/transport.hpp"

namespace distdf::oracle {

namespace {

Matrix normal_matrix(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Vector random_weights(CounterRng& rng, std::size_t n) {
  Vector w(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform(0.1, 1.0);
  return w / w.sum();
}

// Times `body`, which fills everything but name/seconds.
PropertyResult timed(std::string name, const std::function<void(PropertyResult&)>& body) {
  PropertyResult r;
  r.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// A pair of discrete joints over (X, Y) and (X, Ŷ) sharing the X marginal.
struct JointPair {
  std::vector<double> x_values;
  Vector x_mass;
  std::vector<DiscreteDistribution> cond;      // Y | X = x
  std::vector<DiscreteDistribution> cond_hat;  // Ŷ | X = x
  DiscreteDistribution joint;
  DiscreteDistribution joint_hat;
};

DiscreteDistribution assemble_joint(const std::vector<double>& xs, const Vector& mass,
                                    const std::vector<DiscreteDistribution>& conds) {
  Eigen::Index rows = 0;
  for (const auto& c : conds) rows += c.points.rows();
  const Eigen::Index dy = conds.front().points.cols();
  DiscreteDistribution joint{Matrix(rows, dy + 1), Vector(rows)};
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < conds.size(); ++k) {
    for (Eigen::Index i = 0; i < conds[k].points.rows(); ++i, ++r) {
      joint.points(r, 0) = xs[k];
      joint.points.row(r).tail(dy) = conds[k].points.row(i);
      joint.weights(r) = mass(static_cast<Eigen::Index>(k)) * conds[k].weights(i);
    }
  }
  joint.weights /= joint.weights.sum();
  return joint;
}

// X values spaced 10 apart while Y lives in [0, 1]^dy: moving mass across X
// costs ≥ 10 per unit, more than any within-slice move (≤ dy ≤ 3), so optimal
// joint plans are block-diagonal.
JointPair separated_pair(CounterRng& rng) {
  JointPair jp;
  const std::size_t k = 1 + static_cast<std::size_t>(rng.below(4));
  const Eigen::Index dy = 1 + static_cast<Eigen::Index>(rng.below(3));
  jp.x_mass = random_weights(rng, k);
  for (std::size_t i = 0; i < k; ++i) {
    jp.x_values.push_back(10.0 * static_cast<double>(i + 1));
    for (auto* target : {&jp.cond, &jp.cond_hat}) {
      const auto n = static_cast<Eigen::Index>(1 + rng.below(5));
      Matrix pts(n, dy);
      for (Eigen::Index j = 0; j < pts.size(); ++j) pts.data()[j] = rng.uniform();
      target->push_back({pts, random_weights(rng, static_cast<std::size_t>(n))});
    }
  }
  jp.joint = assemble_joint(jp.x_values, jp.x_mass, jp.cond);
  jp.joint_hat = assemble_joint(jp.x_values, jp.x_mass, jp.cond_hat);
  return jp;
}

struct BoundSides {
  double lhs;  // Σ_x P(x) W_p(cond_x, cond'_x)
  double rhs;  // W_p(joint, joint')
};

BoundSides bound_sides(const JointPair& jp, int p) {
  const double inv_p = 1.0 / static_cast<double>(p);
  double lhs = 0.0;
  for (std::size_t k = 0; k < jp.cond.size(); ++k) {
    const double w = discrete_ot(jp.cond[k], jp.cond_hat[k], p).value;
    lhs += jp.x_mass(static_cast<Eigen::Index>(k)) * std::pow(std::max(w, 0.0), inv_p);
  }
  const double joint = discrete_ot(jp.joint, jp.joint_hat, p).value;
  return {lhs, std::pow(std::max(joint, 0.0), inv_p)};
}

DiscreteDistribution slice(const DiscreteDistribution& joint, double x) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < joint.points.rows(); ++i) {
    if (joint.points(i, 0) == x) rows.push_back(i);
  }
  const Eigen::Index dy = joint.points.cols() - 1;
  DiscreteDistribution out{Matrix(static_cast<Eigen::Index>(rows.size()), dy),
                           Vector(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.points.row(static_cast<Eigen::Index>(r)) = joint.points.row(rows[r]).tail(dy);
    out.weights(static_cast<Eigen::Index>(r)) = joint.weights(rows[r]);
  }
  out.weights /= out.weights.sum();
  return out;
}

Matrix random_spd(CounterRng& rng, Eigen::Index d) {
  const Matrix a = normal_matrix(rng, d, d);
  return a * a.transpose() / static_cast<double>(d) + 0.5 * Matrix::Identity(d, d);
}

Matrix sample_gaussian(CounterRng& rng, const Vector& mean, const Matrix& cov, Eigen::Index n) {
  const Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(cov)};
  const Eigen::MatrixXd lower = llt.matrixL();
  Matrix z = normal_matrix(rng, n, mean.size());
  Matrix out = z * lower.transpose();
  out.rowwise() += mean.transpose();
  return out;
}

}  // namespace

double brute_force_assignment(const Matrix& cost) {
  linalg::require_square(cost, "brute_force_assignment");
  const auto n = static_cast<std::size_t>(cost.rows());
  if (n > 8) throw InputError("brute_force_assignment: n > 8");
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return n == 0 ? 0.0 : best;
}

Matrix finite_difference(const Matrix& history, const Matrix& label, const Matrix& forecast,
                         const LossConfig& cfg, double step) {
  Matrix fd(forecast.rows(), forecast.cols());
  Matrix probe = forecast;
  for (Eigen::Index i = 0; i < forecast.rows(); ++i) {
    for (Eigen::Index j = 0; j < forecast.cols(); ++j) {
      const double keep = probe(i, j);
      probe(i, j) = keep + step;
      const double up = distdf_value(history, label, probe, cfg).total;
      probe(i, j) = keep - step;
      const double down = distdf_value(history, label, probe, cfg).total;
      probe(i, j) = keep;
      fd(i, j) = (up - down) / (2.0 * step);
    }
  }
  return fd;
}

double relative_gradient_error(const Matrix& grad, const Matrix& fd) {
  const double err = (grad - fd).cwiseAbs().maxCoeff();
  const double scale = fd.cwiseAbs().maxCoeff();
  return scale > 0.0 ? err / scale : err;
}

PropertyResult bures_1d(std::uint64_t seed, std::size_t cases) {
  return timed("bures_1d", [&](PropertyResult& r) {
    CounterRng rng(seed, 101);
    for (std::size_t c = 0; c < cases; ++c) {
      const double m1 = rng.uniform(-5, 5), m2 = rng.uniform(-5, 5);
      const double s1 = rng.uniform(0.01, 4), s2 = rng.uniform(0.01, 4);
      GaussianSummary a{Vector::Constant(1, m1), Matrix::Constant(1, 1, s1 * s1)};
      GaussianSummary b{Vector::Constant(1, m2), Matrix::Constant(1, 1, s2 * s2)};
      const double expected = (m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2);
      r.worst = std::max(r.worst, std::abs(bures_wasserstein(a, b) - expected));
    }
    r.cases = cases;
    r.tolerance = 1e-10;
    r.passed = r.worst <= r.tolerance;
    r.detail = "max |BW - ((m1-m2)^2 + (s1-s2)^2)|";
  });
}

PropertyResult gaussian_vs_empirical(std::uint64_t seed, std::size_t samples) {
  return timed("gaussian_vs_empirical", [&](PropertyResult& r) {
    const auto n = static_cast<Eigen::Index>(samples);
    std::vector<std::string> parts;
    for (Eigen::Index d = 1; d <= 3; ++d) {
      CounterRng rng(seed, 200 + static_cast<std::uint64_t>(d));
      GaussianSummary a{normal_matrix(rng, d, 1).col(0), random_spd(rng, d)};
      Vector shift = normal_matrix(rng, d, 1).col(0);
      shift *= 2.0 / std::max(shift.norm(), 1e-12);
      GaussianSummary b{a.mean + shift, random_spd(rng, d)};
      const double exact = bures_wasserstein(a, b);
      const Matrix xa = sample_gaussian(rng, a.mean, a.cov, n);
      const Matrix xb = sample_gaussian(rng, b.mean, b.cov, n);
      const double empirical = empirical_wasserstein(xa, xb, 2);
      const double rel = std::abs(empirical - exact) / exact;
      r.worst = std::max(r.worst, rel);
      parts.push_back(fmt::format("d={}: BW={:.6g} empirical={:.6g}", d, exact, empirical));
    }
    r.cases = 3;
    r.tolerance = 0.10;
    r.passed = r.worst <= r.tolerance;
    r.detail = fmt::format("max relative gap, N={}; {}", samples, fmt::join(parts, "; "));
  });
}

PropertyResult conditional_bound(std::uint64_t seed, std::size_t cases) {
  return timed("conditional_bound", [&](PropertyResult& r) {
    CounterRng rng(seed, 300);
    r.worst = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cases; ++c) {
      const JointPair jp = separated_pair(rng);
      for (int p : {1, 2}) {
        const BoundSides s = bound_sides(jp, p);
        r.worst = std::max(r.worst, s.lhs - s.rhs);
      }
    }
    r.cases = cases;
    r.tolerance = 1e-9;
    r.passed = r.worst <= r.tolerance;
    r.detail = "max (E_x W_p(conditionals) - W_p(joints)) over p in {1, 2}";
  });
}

PropertyResult conditional_equality(std::uint64_t seed, std::size_t cases) {
  return timed("conditional_equality_p1", [&](PropertyResult& r) {
    CounterRng rng(seed, 300);
    for (std::size_t c = 0; c < cases; ++c) {
      const BoundSides s = bound_sides(separated_pair(rng), 1);
      r.worst = std::max(r.worst, std::abs(s.lhs - s.rhs));
    }
    r.cases = cases;
    r.tolerance = 1e-9;
    r.passed = r.worst <= r.tolerance;
    r.detail = "max |E_x W_1(conditionals) - W_1(joints)|";
  });
}

PropertyResult conditional_alignment(std::uint64_t seed, std::size_t cases) {
  return timed("conditional_alignment", [&](PropertyResult& r) {
    CounterRng rng(seed, 400);
    double worst_joint = 0.0;
    for (std::size_t c = 0; c < cases; ++c) {
      const std::size_t k = 1 + static_cast<std::size_t>(rng.below(4));
      const Eigen::Index dy = 1 + static_cast<Eigen::Index>(rng.below(3));
      std::vector<double> xs;
      std::vector<DiscreteDistribution> conds;
      for (std::size_t i = 0; i < k; ++i) {
        xs.push_back(rng.uniform(-1, 1));
        const auto n = static_cast<Eigen::Index>(1 + rng.below(5));
        conds.push_back({normal_matrix(rng, n, dy), random_weights(rng, static_cast<std::size_t>(n))});
      }
      const DiscreteDistribution joint = assemble_joint(xs, random_weights(rng, k), conds);

      // Same law, different representation: rows shuffled and some atoms split in two.
      const auto order = rng.permutation(joint.size());
      std::vector<Eigen::Index> rows;
      std::vector<double> mass;
      for (std::size_t idx : order) {
        const auto i = static_cast<Eigen::Index>(idx);
        if (rng.below(2) == 0) {
          const double part = rng.uniform(0.2, 0.8);
          rows.insert(rows.end(), {i, i});
          mass.insert(mass.end(), {part * joint.weights(i), (1.0 - part) * joint.weights(i)});
        } else {
          rows.push_back(i);
          mass.push_back(joint.weights(i));
        }
      }
      DiscreteDistribution twin{Matrix(static_cast<Eigen::Index>(rows.size()), joint.points.cols()),
                                Vector(static_cast<Eigen::Index>(rows.size()))};
      for (std::size_t j = 0; j < rows.size(); ++j) {
        twin.points.row(static_cast<Eigen::Index>(j)) = joint.points.row(rows[j]);
        twin.weights(static_cast<Eigen::Index>(j)) = mass[j];
      }
      twin.weights /= twin.weights.sum();

      for (int p : {1, 2}) {
        worst_joint = std::max(worst_joint, discrete_ot(joint, twin, p).value);
        for (double x : xs) {
          r.worst = std::max(r.worst, discrete_ot(slice(joint, x), slice(twin, x), p).value);
        }
      }
    }
    r.cases = cases;
    r.tolerance = 1e-9;
    r.passed = worst_joint <= 1e-12 && r.worst <= r.tolerance;
    r.detail = fmt::format("max conditional W_p given joint W_p <= 1e-12 (max joint W_p {:.3g})", worst_joint);
  });
}

PropertyResult autocorrelation_bias_check(std::uint64_t seed, std::size_t cases) {
  return timed("autocorrelation_bias", [&](PropertyResult& r) {
    CounterRng rng(seed, 500);
    double worst_identity = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < cases; ++c) {
      const auto t = static_cast<Eigen::Index>(2 + rng.below(23));
      const Vector e = normal_matrix(rng, t, 1).col(0);
      worst_identity = std::max(worst_identity, std::abs(autocorrelation_bias(e, Matrix::Identity(t, t))));
      if (std::abs(autocorrelation_bias(e, ar1_conditional_cov(0.8, 1.0, t))) > 0.0) ++nonzero;
    }
    const double fraction = static_cast<double>(nonzero) / static_cast<double>(cases);
    r.cases = cases;
    r.worst = worst_identity;
    r.tolerance = 1e-12;
    r.passed = worst_identity <= r.tolerance && fraction >= 0.95;
    r.detail = fmt::format("max |bias| under identity; nonzero fraction under AR(1) phi=0.8: {:.4f} (need >= 0.95)",
                           fraction);
  });
}

PropertyResult assignment_bruteforce(std::uint64_t seed, std::size_t cases) {
  return timed("assignment_bruteforce", [&](PropertyResult& r) {
    CounterRng rng(seed, 600);
    for (std::size_t c = 0; c < cases; ++c) {
      const auto n = static_cast<Eigen::Index>(1 + rng.below(6));
      const auto d = static_cast<Eigen::Index>(1 + rng.below(3));
      const int p = 1 + static_cast<int>(rng.below(2));
      const Matrix a = normal_matrix(rng, n, d);
      const Matrix b = normal_matrix(rng, n, d);
      const double solved = discrete_ot(DiscreteDistribution::uniform(a), DiscreteDistribution::uniform(b), p).value;
      const double brute = brute_force_assignment(ot::ground_cost(a, b, p)) / static_cast<double>(n);
      r.worst = std::max(r.worst, std::abs(solved - brute));
    }
    r.cases = cases;
    r.tolerance = 1e-10;
    r.passed = r.worst <= r.tolerance;
    r.detail = "max |discrete_ot - min over permutations|";
  });
}

PropertyResult loss_gradients(std::uint64_t seed, std::size_t seeds_per_shape, double rtol) {
  return timed("loss_gradients", [&](PropertyResult& r) {
    const DiscrepancyKind kinds[] = {DiscrepancyKind::bures_wasserstein, DiscrepancyKind::mean_only,
                                     DiscrepancyKind::cov_only, DiscrepancyKind::mmd_linear, DiscrepancyKind::kl};
    std::size_t failures = 0;
    std::string first_failure;
    for (const auto kind : kinds) {
      for (Eigen::Index b : {4, 16}) {
        for (Eigen::Index h : {4, 8}) {
          for (Eigen::Index t : {2, 8}) {
            for (std::size_t s = 0; s < seeds_per_shape; ++s) {
              CounterRng rng(seed + s, 7000 + static_cast<std::uint64_t>(b * 100 + h * 10 + t));
              const Matrix hist = normal_matrix(rng, b, h);
              const Matrix label = normal_matrix(rng, b, t);
              const Matrix forecast = normal_matrix(rng, b, t);
              LossConfig cfg;
              cfg.kind = kind;
              cfg.alpha = 0.5;
              const LossReport rep = distdf_loss(hist, label, forecast, cfg);
              const double err =
                  relative_gradient_error(rep.grad_forecast, finite_difference(hist, label, forecast, cfg, 1e-5));
              r.worst = std::max(r.worst, err);
              ++r.cases;
              if (!(err <= rtol)) {
                if (failures++ == 0) {
                  first_failure = fmt::format("; first failure {} B={} H={} T={} seed={}", to_string(kind), b, h, t,
                                              seed + s);
                }
              }
            }
          }
        }
      }
    }
    r.tolerance = rtol;
    r.passed = failures == 0;
    r.detail = fmt::format("max ||g - fd||_inf / ||fd||_inf, step 1e-5, alpha 0.5; {} failures{}", failures,
                           first_failure);
  });
}

PropertyResult partial_correlation_recovery(std::uint64_t seed, Eigen::Index samples) {
  return timed("partial_correlation_recovery", [&](PropertyResult& r) {
    CounterRng rng(seed, 800);
    const Eigen::Index h = 8, t = 6;
    const Eigen::Index s1 = 1, s2 = 4;
    const double rho = 0.6;
    Matrix noise_cov = Matrix::Identity(t, t);
    noise_cov(s1, s2) = noise_cov(s2, s1) = rho;
    const Matrix x = normal_matrix(rng, samples, h);
    const Matrix a = normal_matrix(rng, h, t);
    const Matrix e = sample_gaussian(rng, Vector::Zero(t), noise_cov, samples);
    const Matrix y = x * a + e;
    const auto pc = partial_correlation(x, y);
    r.worst = std::abs(pc.matrix(s1, s2) - rho);
    r.cases = 1;
    r.tolerance = 0.05;
    r.passed = r.worst <= r.tolerance;
    r.detail = fmt::format("|recovered - 0.6| at N={}; recovered {:.6f}", samples, pc.matrix(s1, s2));
  });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"bures_1d",       "gaussian_vs_empirical", "conditional_bound",
                                              "conditional_equality_p1", "conditional_alignment",
                                              "autocorrelation_bias",    "assignment_bruteforce",
                                              "loss_gradients",          "partial_correlation_recovery"};
  return names;
}

std::vector<PropertyResult> run_suite(std::string_view selector, std::uint64_t seed) {
  const std::vector<std::function<PropertyResult()>> suites{
      [&] { return bures_1d(seed); },
      [&] { return gaussian_vs_empirical(seed); },
      [&] { return conditional_bound(seed); },
      [&] { return conditional_equality(seed); },
      [&] { return conditional_alignment(seed); },
      [&] { return autocorrelation_bias_check(seed); },
      [&] { return assignment_bruteforce(seed); },
      [&] { return loss_gradients(seed); },
      [&] { return partial_correlation_recovery(seed); },
  };
  const auto& names = suite_names();
  std::vector<PropertyResult> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (selector == "all" || selector == names[i]) out.push_back(suites[i]());
  }
  if (out.empty()) {
    throw ConfigError(fmt::format("oracle.suite: unknown suite '{}' (expected all or one of {})", selector,
                                  fmt::join(names, ", ")));
  }
  return out;
}

}  // namespace distdf::oracle
