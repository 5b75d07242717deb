#pragma once

// Brute-force ground truth for a single fibre. It shares only newton_polish
// with the main pipeline; seeding and selection are independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/newton.hpp"
#include "fibreopt/table.hpp"
#include "fibreopt/torus.hpp"

namespace fibreopt {

/// Default dense-grid resolution per fibre dimension.
inline int default_oracle_grid(int fibre_dim) {
  if (fibre_dim <= 1) return 1 << 14;
  if (fibre_dim == 2) return 1 << 7;
  return 1 << 5;
}

struct OracleCriticalPoint {
  AngleVec x;
  int index = 0;
};

struct OracleResult {
  std::vector<AngleVec> minimizers;
  double min_value = 0.0;
  std::vector<OracleCriticalPoint> critical_points;  // polished local minima
  std::uint64_t evaluations = 0;                     // value evaluations
  EvaluationCounts counts;
};

namespace detail {

// Neighbours of a flat grid index along each coordinate, with wraparound.
inline std::vector<std::size_t> grid_neighbours(std::size_t flat, int dims, int n) {
  std::vector<int> idx(dims);
  std::size_t rem = flat;
  for (int d = dims - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(rem % n);
    rem /= n;
  }
  std::vector<std::size_t> out;
  for (int d = 0; d < dims; ++d) {
    for (int s : {-1, 1}) {
      std::vector<int> nb(idx);
      nb[d] = (idx[d] + s + n) % n;
      out.push_back(grid_flat_index(nb, n));
    }
  }
  return out;
}

inline std::vector<double> grid_coords(std::size_t flat, int dims, int n) {
  std::vector<double> c(dims);
  for (int d = dims - 1; d >= 0; --d) {
    c[d] = kTwoPi * static_cast<double>(flat % n) / n;
    flat /= n;
  }
  return c;
}

inline bool near_any(const std::vector<AngleVec>& pts, const AngleVec& x, double radius) {
  return std::any_of(pts.begin(), pts.end(), [&](const AngleVec& p) { return geodesic_distance(p, x) < radius; });
}

}  // namespace detail

/// Dense scan of the fibre over theta, then Newton polish from every grid
/// local minimum. Returns all minimizers within value_tol of the best.
/// The grid must have at least 256 points per dimension for k = 1; for
/// k >= 2 the per-dimension floor is 32.
inline OracleResult oracle_fibre_minimum(const ProblemDefinition& problem, const AngleVec& theta, int grid_per_dim,
                                         double value_tol = 1e-7, double tol = 1e-12) {
  const int k = problem.shape.fibre_dim;
  if (grid_per_dim < (k == 1 ? 256 : 32)) throw Error(ErrorKind::invalid_config, "oracle grid too coarse");
  CountingProblem counted(problem);
  std::size_t total = 1;
  for (int d = 0; d < k; ++d) total *= static_cast<std::size_t>(grid_per_dim);

  std::vector<double> vals(total);
  for (std::size_t i = 0; i < total; ++i) {
    vals[i] = counted.value(BundlePoint{AngleVec(detail::grid_coords(i, k, grid_per_dim)), theta});
  }

  std::vector<AngleVec> polished;
  std::vector<double> polished_vals;
  for (std::size_t i = 0; i < total; ++i) {
    bool local_min = true;
    for (std::size_t nb : detail::grid_neighbours(i, k, grid_per_dim)) {
      if (vals[nb] < vals[i]) {
        local_min = false;
        break;
      }
    }
    if (!local_min) continue;
    const BundlePoint seed{AngleVec(detail::grid_coords(i, k, grid_per_dim)), theta};
    NewtonReport rep;
    try {
      rep = newton_polish(counted, seed, tol, 100);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_critical_point) throw;
      continue;
    }
    if (!rep.converged) {
      // Polish could not reach the tight tolerance; fall back to the grid node.
      if (!detail::near_any(polished, seed.x, 1e-8)) {
        polished.push_back(seed.x);
        polished_vals.push_back(vals[i]);
      }
      continue;
    }
    const Matrix h = counted.fibre_hess(rep.final_point);
    if (analyze_hessian(h).negative != 0) continue;
    if (detail::near_any(polished, rep.final_point.x, 1e-8)) continue;
    polished.push_back(rep.final_point.x);
    polished_vals.push_back(counted.value(rep.final_point));
  }

  OracleResult out;
  if (polished.empty()) {
    const std::size_t best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    polished.emplace_back(detail::grid_coords(best, k, grid_per_dim));
    polished_vals.push_back(vals[best]);
  }
  out.min_value = *std::min_element(polished_vals.begin(), polished_vals.end());
  for (std::size_t i = 0; i < polished.size(); ++i) {
    out.critical_points.push_back({polished[i], 0});
    if (polished_vals[i] <= out.min_value + value_tol) out.minimizers.push_back(polished[i]);
  }
  std::sort(out.minimizers.begin(), out.minimizers.end());
  out.counts = counted.counts();
  out.evaluations = out.counts.value;
  return out;
}

/// All fibre-wise critical points over theta. In one dimension seeds come
/// from sign changes of the derivative between grid nodes (bracketed by
/// bisection); in higher dimensions from grid local minima of ||grad||.
inline std::vector<OracleCriticalPoint> oracle_critical_points(const ProblemDefinition& problem, const AngleVec& theta,
                                                               int grid_per_dim, double tol = 1e-12) {
  const int k = problem.shape.fibre_dim;
  if (grid_per_dim < (k == 1 ? 256 : 32)) throw Error(ErrorKind::invalid_config, "oracle grid too coarse");
  std::size_t total = 1;
  for (int d = 0; d < k; ++d) total *= static_cast<std::size_t>(grid_per_dim);

  std::vector<AngleVec> seeds;
  if (k == 1) {
    auto grad_at = [&](double x) { return problem.fibre_grad(BundlePoint{AngleVec{x}, theta})(0); };
    const double h = kTwoPi / grid_per_dim;
    std::vector<double> g(total);
    for (std::size_t i = 0; i < total; ++i) g[i] = grad_at(h * static_cast<double>(i));
    for (std::size_t i = 0; i < total; ++i) {
      const double ga = g[i];
      const double gb = g[(i + 1) % total];
      if (ga == 0.0) {
        seeds.emplace_back(AngleVec{h * static_cast<double>(i)});
        continue;
      }
      if (gb == 0.0 || (ga < 0.0) == (gb < 0.0)) continue;
      // Unwrapped bracket [lo, lo + h].
      double lo = h * static_cast<double>(i);
      double hi = lo + h;
      double glo = ga;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = grad_at(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      seeds.emplace_back(AngleVec{0.5 * (lo + hi)});
    }
  } else {
    std::vector<double> gn(total);
    for (std::size_t i = 0; i < total; ++i) {
      gn[i] = problem.fibre_grad(BundlePoint{AngleVec(detail::grid_coords(i, k, grid_per_dim)), theta}).squaredNorm();
    }
    for (std::size_t i = 0; i < total; ++i) {
      bool local_min = true;
      for (std::size_t nb : detail::grid_neighbours(i, k, grid_per_dim)) {
        if (gn[nb] < gn[i]) {
          local_min = false;
          break;
        }
      }
      if (local_min) seeds.emplace_back(detail::grid_coords(i, k, grid_per_dim));
    }
  }

  std::vector<OracleCriticalPoint> out;
  std::vector<AngleVec> xs;
  for (const auto& s : seeds) {
    NewtonReport rep;
    try {
      rep = newton_polish(problem, BundlePoint{s, theta}, tol, 100);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_critical_point) throw;
      throw Error(ErrorKind::degenerate_critical_point, "oracle hit a singular Hessian near x = " + format_angles(s));
    }
    AngleVec x = rep.final_point.x;
    if (!rep.converged) {
      // Bisection already pinned the root to machine precision in 1-D.
      if (k != 1 || problem.fibre_grad(BundlePoint{s, theta}).norm() > 1e-9) continue;
      x = s;
    }
    if (detail::near_any(xs, x, 1e-8)) continue;
    const Matrix h = problem.fibre_hess(BundlePoint{x, theta});
    if (analyze_hessian(h).singular()) {
      throw Error(ErrorKind::degenerate_critical_point, "oracle found a degenerate critical point at x = " +
                                                            format_angles(x));
    }
    xs.push_back(x);
    out.push_back({x, classify_index(h)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  return out;
}

}  // namespace fibreopt
