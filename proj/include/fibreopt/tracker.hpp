#pragma once

// Certified path lifting: follows a fibre-wise critical point while the
// parameter moves along a straight path on the base torus.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/newton.hpp"
#include "fibreopt/table.hpp"
#include "fibreopt/torus.hpp"

namespace fibreopt {

struct TrackOptions {
  double tol = 1e-9;
  int max_newton_iter = 50;
  // First-order predictor -H^{-1} (d^2f/dx dtheta) dtheta instead of the
  // previous point.
  bool euler_predictor = false;
  // Halvings spent looking for a certified step before an uncertified but
  // converged step is accepted.
  int max_uncertified_halvings = 12;
  // Tracking fails once a step falls below this fraction of the path.
  double min_step_fraction = 1e-9;
};

struct PathSample {
  double t = 0.0;
  AngleVec x;
  bool certified = true;
  // Observed: every corrector iterate at least halved its distance to the
  // converged point.
  bool halving_held = true;
};

struct LiftedPath {
  int component_id = -1;
  int start_anchor = -1;
  AngleVec start_x;
  int morse_index = 0;
  std::vector<PathSample> samples;
  int rejected_steps = 0;

  const AngleVec& end_x() const { return samples.back().x; }
  bool all_certified() const {
    return std::all_of(samples.begin(), samples.end(), [](const PathSample& s) { return s.certified; });
  }
  bool all_halving() const {
    return std::all_of(samples.begin(), samples.end(), [](const PathSample& s) { return s.halving_held; });
  }
};

/// Parameter distance over which the critical point provably moves by at
/// most rho/2, using ||dx*/dtheta|| <= ||H^{-1}|| beta.
inline double step_size_bound(const CertifiedRadius& rho, double hess_inv_norm, double beta) {
  if (!(hess_inv_norm > 0.0) || !std::isfinite(hess_inv_norm) || !(beta >= 0.0) || !std::isfinite(beta) ||
      std::isnan(rho.rho)) {
    throw Error(ErrorKind::invalid_input, "step_size_bound: invalid inputs");
  }
  constexpr double cap = kPi / 2.0;
  if (beta == 0.0 || rho.infinite()) return cap;
  return std::min(cap, (rho.rho / 2.0) / (hess_inv_norm * beta));
}

template <CostFamily P>
LiftedPath track_point(const P& problem, const CriticalPointRecord& start, const ParameterPath& path,
                       const DerivativeBounds& bounds, const TrackOptions& opts = {}) {
  LiftedPath lifted;
  lifted.component_id = start.component_id;
  lifted.start_anchor = start.anchor_index;
  lifted.start_x = start.x;
  lifted.morse_index = start.index;

  BundlePoint here{start.x, path.start()};
  if (!here.matches(problem.shape) || path.dim() != static_cast<std::size_t>(problem.shape.base_dim)) {
    throw Error(ErrorKind::invalid_input, "track_point: dimension mismatch");
  }
  const double g0 = problem.fibre_grad(here).norm();
  if (!(g0 <= opts.tol)) {
    throw Error(ErrorKind::tracking_failed, "start point is not a fibre-wise critical point (gradient norm " +
                                                std::to_string(g0) + ")");
  }
  lifted.samples.push_back({0.0, start.x, true, true});
  const double length = path.length();
  if (length == 0.0) return lifted;

  Matrix h_here = problem.fibre_hess(here);
  HessianSpectrum spec_here = analyze_hessian(h_here);
  if (spec_here.singular()) {
    throw Error(ErrorKind::degenerate_critical_point, "start point is a degenerate critical point");
  }

  double t = 0.0;
  while (t < 1.0) {
    const CertifiedRadius rho_here = certified_radius_nd(spec_here.inverse_norm(), bounds.alpha);
    double dt = std::min(1.0 - t, step_size_bound(rho_here, spec_here.inverse_norm(), bounds.beta) / length);
    int uncertified_halvings = 0;

    while (true) {
      if (dt < opts.min_step_fraction) {
        throw Error(ErrorKind::tracking_failed,
                    "step size underflow at t = " + std::to_string(t) + " on a path of length " +
                        std::to_string(length));
      }
      const double t_next = (dt >= 1.0 - t) ? 1.0 : t + dt;
      const AngleVec theta_next = path.point_at(t_next);

      AngleVec predicted = here.x;
      if (opts.euler_predictor) {
        Vector dtheta(path.dim());
        for (std::size_t j = 0; j < path.dim(); ++j) dtheta(static_cast<Eigen::Index>(j)) = (t_next - t) * path.delta()[j];
        const Vector dx = -h_here.ldlt().solve(mixed_partial_of(problem, here) * dtheta);
        predicted = here.x.shifted(to_std(dx));
      }

      NewtonReport report;
      Matrix h_next;
      HessianSpectrum spec_next;
      int index_next = -1;
      bool ok = false;
      try {
        report = newton_polish(problem, BundlePoint{predicted, theta_next}, opts.tol, opts.max_newton_iter);
        if (report.converged) {
          h_next = problem.fibre_hess(report.final_point);
          spec_next = analyze_hessian(h_next);
          if (!spec_next.singular()) {
            index_next = spec_next.negative;
            ok = true;
          }
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::degenerate_critical_point) throw;
      }
      if (!ok) {
        dt /= 2.0;
        ++lifted.rejected_steps;
        continue;
      }

      // The corrector started at `predicted`; it was an approximate critical
      // point if it lies inside the certified ball around the converged point
      // or passes the averaged-Hessian test there.
      const Vector disp = report.iterates.front() - report.iterates.back();
      const double dist = disp.norm();
      const CertifiedRadius rho_next = certified_radius_nd(spec_next.inverse_norm(), bounds.alpha);
      bool certified = dist <= rho_next.clamped();
      if (!certified && dist < kPi) {
        const AngleVec& centre = report.final_point.x;
        const Matrix h_bar = averaged_hessian([&](double s) {
          return problem.fibre_hess(BundlePoint{centre.shifted(to_std(s * disp)), theta_next});
        });
        const Matrix h_pred = problem.fibre_hess(BundlePoint{predicted, theta_next});
        if (!analyze_hessian(h_pred).singular()) {
          certified = averaged_hessian_test(h_pred, h_bar).passes;
        }
      }

      if (index_next != lifted.morse_index) {
        if (certified) {
          throw Error(ErrorKind::inconsistency, "Morse index changed along a certified step at t = " +
                                                    std::to_string(t_next));
        }
        dt /= 2.0;
        ++lifted.rejected_steps;
        continue;
      }
      if (!certified && uncertified_halvings < opts.max_uncertified_halvings) {
        ++uncertified_halvings;
        dt /= 2.0;
        ++lifted.rejected_steps;
        continue;
      }

      t = t_next;
      here = report.final_point;
      h_here = h_next;
      spec_here = spec_next;
      lifted.samples.push_back({t, here.x, certified, report.halving_held()});
      break;
    }
  }
  return lifted;
}

}  // namespace fibreopt

namespace fibreopt {

/// Index of the anchor closest to theta in toroidal distance; ties go to
/// the smaller index.
inline std::size_t nearest_anchor(const std::vector<AngleVec>& anchors, const AngleVec& theta) {
  if (anchors.empty()) throw Error(ErrorKind::invalid_input, "no anchors");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double d = geodesic_distance(anchors[i], theta);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

/// Straight geodesic from the anchor to theta.
inline ParameterPath plan_path(const AngleVec& anchor_theta, const AngleVec& theta) {
  return ParameterPath(anchor_theta, geodesic_delta(anchor_theta, theta));
}

/// Tracks a critical point `loops` times around the generator loop of base
/// dimension `dim`, returning the lift.
template <CostFamily P>
LiftedPath track_loop(const P& problem, const CriticalPointRecord& start, const AngleVec& theta, int dim,
                      int loops, const DerivativeBounds& bounds, const TrackOptions& opts = {}) {
  std::vector<double> delta(theta.size(), 0.0);
  delta.at(static_cast<std::size_t>(dim)) = kTwoPi * loops;
  return track_point(problem, start, ParameterPath(theta, delta), bounds, opts);
}

}  // namespace fibreopt
