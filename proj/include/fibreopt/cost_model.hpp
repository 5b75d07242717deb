#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fibreopt/linalg.hpp"
#include "fibreopt/torus.hpp"

namespace fibreopt {

/// A cost family f(x; theta) on T^k x T^m. Derivatives are taken along the
/// fibre (x) only; mixed_partial is d^2 f / dx dtheta (k x m) and may be
/// left empty, in which case it is approximated by finite differences.
/// Callbacks must be pure and reentrant.
struct ProblemDefinition {
  std::string name;
  std::map<std::string, double> parameters;
  BundleShape shape;
  std::function<double(const BundlePoint&)> value;
  std::function<Vector(const BundlePoint&)> fibre_grad;
  std::function<Matrix(const BundlePoint&)> fibre_hess;
  std::function<Matrix(const BundlePoint&)> mixed_partial;

  bool has_mixed_partial() const { return static_cast<bool>(mixed_partial); }
};

enum class BoundsSource { user_supplied, estimated };

inline const char* to_string(BoundsSource s) {
  return s == BoundsSource::user_supplied ? "user-supplied" : "estimated";
}

struct DerivativeBounds {
  double alpha = 0.0;  // Lipschitz constant of the fibre Hessian in x
  double beta = 0.0;   // bound on ||d^2 f / dx dtheta||
  BoundsSource source = BoundsSource::estimated;
};

struct EvaluationCounts {
  std::uint64_t value = 0;
  std::uint64_t grad = 0;
  std::uint64_t hess = 0;
  std::uint64_t mixed = 0;

  EvaluationCounts& operator+=(const EvaluationCounts& o) {
    value += o.value;
    grad += o.grad;
    hess += o.hess;
    mixed += o.mixed;
    return *this;
  }
};

/// Anything that looks like a ProblemDefinition to the numerical kernels.
template <class P>
concept CostFamily = requires(const P& p, const BundlePoint& q) {
  { p.shape } -> std::convertible_to<BundleShape>;
  { p.value(q) } -> std::convertible_to<double>;
  { p.fibre_grad(q) } -> std::convertible_to<Vector>;
  { p.fibre_hess(q) } -> std::convertible_to<Matrix>;
  { p.has_mixed_partial() } -> std::convertible_to<bool>;
};

/// Forwards to a ProblemDefinition and counts every callback invocation.
/// One instance per query; not meant to be shared between threads.
class CountingProblem {
 public:
  explicit CountingProblem(const ProblemDefinition& problem)
      : shape(problem.shape), problem_(&problem) {}

  BundleShape shape;

  double value(const BundlePoint& p) const {
    ++counts_.value;
    return problem_->value(p);
  }
  Vector fibre_grad(const BundlePoint& p) const {
    ++counts_.grad;
    return problem_->fibre_grad(p);
  }
  Matrix fibre_hess(const BundlePoint& p) const {
    ++counts_.hess;
    return problem_->fibre_hess(p);
  }
  Matrix mixed_partial(const BundlePoint& p) const {
    ++counts_.mixed;
    return problem_->mixed_partial(p);
  }
  bool has_mixed_partial() const { return problem_->has_mixed_partial(); }

  const EvaluationCounts& counts() const { return counts_; }
  const ProblemDefinition& definition() const { return *problem_; }

 private:
  const ProblemDefinition* problem_;
  mutable EvaluationCounts counts_;
};

/// Central-difference step used for every finite-difference derivative.
inline constexpr double kFdStep = 1e-5;
/// Safety factor applied to grid-estimated derivative bounds.
inline constexpr double kBoundSafetyFactor = 1.5;

/// d^2 f / dx dtheta from the callback, or central differences of the
/// fibre gradient in theta when the callback is absent.
template <CostFamily P>
Matrix mixed_partial_of(const P& problem, const BundlePoint& p) {
  if (problem.has_mixed_partial()) return problem.mixed_partial(p);
  const int k = problem.shape.fibre_dim;
  const int m = problem.shape.base_dim;
  Matrix out(k, m);
  std::vector<double> step(m, 0.0);
  for (int j = 0; j < m; ++j) {
    step.assign(m, 0.0);
    step[j] = kFdStep;
    const BundlePoint plus{p.x, p.theta.shifted(step)};
    step[j] = -kFdStep;
    const BundlePoint minus{p.x, p.theta.shifted(step)};
    out.col(j) = (problem.fibre_grad(plus) - problem.fibre_grad(minus)) / (2.0 * kFdStep);
  }
  return out;
}

/// Uniform double in [0, 1) built from the top 53 bits, so seeded streams
/// are identical across standard library implementations.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline AngleVec random_angles(std::mt19937_64& rng, int dim) {
  std::vector<double> v(dim);
  for (double& c : v) c = kTwoPi * uniform01(rng);
  return AngleVec(v);
}

struct FdReport {
  double max_grad_error = 0.0;
  double max_hess_error = 0.0;
  double max_hess_asymmetry = 0.0;
};

/// Compares the analytic fibre derivatives with central differences at
/// seeded pseudo-random points.
inline FdReport fd_check(const ProblemDefinition& problem, int samples, std::uint64_t seed) {
  FdReport report;
  std::mt19937_64 rng(seed);
  const int k = problem.shape.fibre_dim;
  const int m = problem.shape.base_dim;
  std::vector<double> step(k, 0.0);
  for (int s = 0; s < samples; ++s) {
    const BundlePoint p{random_angles(rng, k), random_angles(rng, m)};
    const Vector g = problem.fibre_grad(p);
    const Matrix h = problem.fibre_hess(p);
    report.max_hess_asymmetry =
        std::max(report.max_hess_asymmetry, (h - h.transpose()).cwiseAbs().maxCoeff());
    for (int i = 0; i < k; ++i) {
      step.assign(k, 0.0);
      step[i] = kFdStep;
      const BundlePoint plus{p.x.shifted(step), p.theta};
      step[i] = -kFdStep;
      const BundlePoint minus{p.x.shifted(step), p.theta};
      const double dg = (problem.value(plus) - problem.value(minus)) / (2.0 * kFdStep);
      report.max_grad_error = std::max(report.max_grad_error, std::abs(dg - g(i)));
      const Vector dh = (problem.fibre_grad(plus) - problem.fibre_grad(minus)) / (2.0 * kFdStep);
      report.max_hess_error =
          std::max(report.max_hess_error, (dh - h.col(i)).cwiseAbs().maxCoeff());
    }
  }
  return report;
}

namespace detail {

// Visits every node of the uniform grid with `per_dim` points along each
// of `dims` coordinates, in lexicographic order.
template <class Fn>
void for_each_grid_node(int dims, int per_dim, Fn&& fn) {
  std::vector<int> idx(dims, 0);
  std::vector<double> coords(dims, 0.0);
  const double h = kTwoPi / per_dim;
  while (true) {
    for (int d = 0; d < dims; ++d) coords[d] = h * idx[d];
    fn(idx, coords);
    int d = dims - 1;
    while (d >= 0 && ++idx[d] == per_dim) {
      idx[d] = 0;
      --d;
    }
    if (d < 0) break;
  }
}

inline std::size_t grid_flat_index(const std::vector<int>& idx, int per_dim) {
  std::size_t flat = 0;
  for (int i : idx) flat = flat * per_dim + static_cast<std::size_t>(i);
  return flat;
}

inline BundlePoint split_point(const std::vector<double>& coords, const BundleShape& shape) {
  std::vector<double> x(coords.begin(), coords.begin() + shape.fibre_dim);
  std::vector<double> th(coords.begin() + shape.fibre_dim, coords.end());
  return BundlePoint{AngleVec(x), AngleVec(th)};
}

}  // namespace detail

/// Largest difference quotient ||H_a - H_b|| / ||a - b|| over grid-neighbour
/// pairs along fibre directions, without the safety factor.
inline double estimate_alpha_raw(const ProblemDefinition& problem, int grid_per_dim) {
  if (grid_per_dim < 8) {
    throw Error(ErrorKind::invalid_config, "alpha estimation grid must have at least 8 points per dim");
  }
  const int k = problem.shape.fibre_dim;
  const int dims = k + problem.shape.base_dim;
  std::vector<Matrix> hess;
  detail::for_each_grid_node(dims, grid_per_dim, [&](const std::vector<int>&, const std::vector<double>& c) {
    hess.push_back(problem.fibre_hess(detail::split_point(c, problem.shape)));
  });
  const double h = kTwoPi / grid_per_dim;
  double best = 0.0;
  detail::for_each_grid_node(dims, grid_per_dim, [&](const std::vector<int>& idx, const std::vector<double>&) {
    const std::size_t here = detail::grid_flat_index(idx, grid_per_dim);
    std::vector<int> nb(idx);
    for (int i = 0; i < k; ++i) {
      nb[i] = (idx[i] + 1) % grid_per_dim;
      const std::size_t there = detail::grid_flat_index(nb, grid_per_dim);
      best = std::max(best, operator_norm(hess[here] - hess[there]) / h);
      nb[i] = idx[i];
    }
  });
  return best;
}

inline double estimate_alpha(const ProblemDefinition& problem, int grid_per_dim) {
  return kBoundSafetyFactor * estimate_alpha_raw(problem, grid_per_dim);
}

/// Grid maximum of ||d^2 f / dx dtheta|| times the safety factor.
inline double estimate_beta(const ProblemDefinition& problem, int grid_per_dim) {
  if (grid_per_dim < 8) {
    throw Error(ErrorKind::invalid_config, "beta estimation grid must have at least 8 points per dim");
  }
  const int dims = problem.shape.fibre_dim + problem.shape.base_dim;
  double best = 0.0;
  detail::for_each_grid_node(dims, grid_per_dim, [&](const std::vector<int>&, const std::vector<double>& c) {
    best = std::max(best, operator_norm(mixed_partial_of(problem, detail::split_point(c, problem.shape))));
  });
  return kBoundSafetyFactor * best;
}

inline DerivativeBounds estimate_bounds(const ProblemDefinition& problem, int grid_per_dim) {
  return DerivativeBounds{estimate_alpha(problem, grid_per_dim), estimate_beta(problem, grid_per_dim),
                          BoundsSource::estimated};
}

}  // namespace fibreopt
