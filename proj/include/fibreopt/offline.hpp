#pragma once

// Everything computed ahead of time: critical points on anchor fibres,
// their grouping into critical circles, and the region map.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/newton.hpp"
#include "fibreopt/table.hpp"
#include "fibreopt/torus.hpp"
#include "fibreopt/tracker.hpp"

namespace fibreopt {

/// Uniform product grid {2 pi j / per_dim} over the base, lexicographic.
inline std::vector<AngleVec> select_anchors(const BundleShape& shape, int per_dim) {
  if (per_dim < 2) throw Error(ErrorKind::invalid_config, "anchors per dimension must be at least 2");
  std::vector<AngleVec> anchors;
  detail::for_each_grid_node(shape.base_dim, per_dim, [&](const std::vector<int>&, const std::vector<double>& c) {
    anchors.emplace_back(c);
  });
  return anchors;
}

struct FibreCriticalPoint {
  AngleVec x;
  int index = 0;
  double f_value = 0.0;
  double hess_inv_norm = 0.0;
};

namespace detail {

// A few Newton steps past convergence, kept only while the gradient keeps
// shrinking, so that duplicates found from different seeds coincide.
template <CostFamily P>
BundlePoint refine_converged(const P& problem, BundlePoint point, double grad_norm) {
  for (int i = 0; i < 3 && grad_norm > 0.0; ++i) {
    try {
      const BundlePoint next = newton_step(problem, point);
      const double gn = problem.fibre_grad(next).norm();
      if (!(gn < grad_norm)) break;
      point = next;
      grad_norm = gn;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_critical_point) throw;
      break;
    }
  }
  return point;
}

}  // namespace detail

/// Newton polish from every fibre grid node, deduplicated and classified.
template <CostFamily P>
std::vector<FibreCriticalPoint> enumerate_fibre_critical_points(const P& problem, const AngleVec& theta,
                                                                int fibre_grid_per_dim, double tol,
                                                                int max_iter = 50) {
  if (fibre_grid_per_dim < 1 || !(tol > 0.0)) {
    throw Error(ErrorKind::invalid_config, "enumerate: invalid grid or tolerance");
  }
  const int k = problem.shape.fibre_dim;
  std::vector<AngleVec> found;
  detail::for_each_grid_node(k, fibre_grid_per_dim, [&](const std::vector<int>&, const std::vector<double>& c) {
    NewtonReport rep;
    try {
      rep = newton_polish(problem, BundlePoint{AngleVec(c), theta}, tol, max_iter);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::degenerate_critical_point) throw;
      return;
    }
    if (!rep.converged) return;
    const BundlePoint refined = detail::refine_converged(problem, rep.final_point, rep.final_grad_norm);
    const double dedup_radius = 10.0 * tol;
    for (const auto& f : found) {
      if (geodesic_distance(f, refined.x) < dedup_radius) return;
    }
    found.push_back(refined.x);
  });

  std::vector<FibreCriticalPoint> out;
  for (const auto& x : found) {
    const BundlePoint p{x, theta};
    const Matrix h = problem.fibre_hess(p);
    const HessianSpectrum spec = analyze_hessian(h);
    if (spec.singular()) {
      throw Error(ErrorKind::degenerate_critical_point,
                  "degenerate fibre-wise critical point at x = " + format_angles(x) + "; the family is not fibre-wise Morse");
    }
    out.push_back({x, classify_index(h), problem.value(p), spec.inverse_norm()});
  }
  const double spacing = kTwoPi / fibre_grid_per_dim;
  for (std::size_t i = 0; i < found.size(); ++i) {
    for (std::size_t j = i + 1; j < found.size(); ++j) {
      if (geodesic_distance(found[i], found[j]) < spacing) {
        throw Error(ErrorKind::resolution_too_coarse,
                    "distinct critical points closer than the fibre grid spacing; refine the fibre grid");
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });

  // A Morse function on the k-torus has sum (-1)^index equal to the Euler
  // characteristic, 0. On a circle minima and maxima also alternate. Either
  // failing means the seeds missed some critical points.
  bool missed = false;
  if (k == 1) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].index == out[(i + 1) % out.size()].index) missed = true;
    }
  } else {
    int euler = 0;
    for (const auto& c : out) euler += (c.index % 2 == 0) ? 1 : -1;
    missed = euler != 0;
  }
  if (missed) {
    throw Error(ErrorKind::resolution_too_coarse,
                "critical points on the fibre do not account for the torus topology; refine the fibre grid");
  }
  return out;
}

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

inline std::vector<std::vector<std::size_t>> group_by_anchor(const std::vector<CriticalPointRecord>& records,
                                                             std::size_t num_anchors) {
  std::vector<std::vector<std::size_t>> by_anchor(num_anchors);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const int a = records[i].anchor_index;
    if (a < 0 || static_cast<std::size_t>(a) >= num_anchors) {
      throw Error(ErrorKind::inconsistency, "record refers to a missing anchor");
    }
    by_anchor[static_cast<std::size_t>(a)].push_back(i);
  }
  return by_anchor;
}

}  // namespace detail

/// Follows every anchor record to the neighbouring anchor along each base
/// direction (wrapping around the torus) and groups records joined by a lift
/// into components. Writes component ids into `records`.
template <CostFamily P>
TopologySummary trace_components(const P& problem, const std::vector<AngleVec>& anchors, int anchors_per_dim,
                                 std::vector<CriticalPointRecord>& records, const DerivativeBounds& bounds,
                                 const TrackOptions& opts = {}) {
  const int m = problem.shape.base_dim;
  const auto by_anchor = detail::group_by_anchor(records, anchors.size());
  detail::DisjointSets sets(records.size());
  const double match_tol = std::max(1e-6, 1e3 * opts.tol);
  const double step = kTwoPi / anchors_per_dim;

  detail::for_each_grid_node(m, anchors_per_dim, [&](const std::vector<int>& idx, const std::vector<double>&) {
    const std::size_t a = detail::grid_flat_index(idx, anchors_per_dim);
    for (int d = 0; d < m; ++d) {
      std::vector<int> nb_idx(idx);
      nb_idx[d] = (idx[d] + 1) % anchors_per_dim;
      const std::size_t nb = detail::grid_flat_index(nb_idx, anchors_per_dim);
      std::vector<double> delta(m, 0.0);
      delta[d] = step;
      const ParameterPath path(anchors[a], delta);
      std::vector<bool> hit(by_anchor[nb].size(), false);
      for (std::size_t r : by_anchor[a]) {
        const LiftedPath lifted = track_point(problem, records[r], path, bounds, opts);
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < by_anchor[nb].size(); ++j) {
          const double dist = geodesic_distance(records[by_anchor[nb][j]].x, lifted.end_x());
          if (dist < best_d) {
            best_d = dist;
            best = j;
          }
        }
        if (!(best_d <= match_tol)) {
          throw Error(ErrorKind::tracking_failed, "tracked critical point from anchor " + std::to_string(a) +
                                                      " matches no record on anchor " + std::to_string(nb));
        }
        if (hit[best]) {
          throw Error(ErrorKind::inconsistency, "two critical points tracked onto the same record between anchors " +
                                                    std::to_string(a) + " and " + std::to_string(nb));
        }
        hit[best] = true;
        const std::size_t target = by_anchor[nb][best];
        if (records[target].index != records[r].index) {
          throw Error(ErrorKind::inconsistency, "Morse index changes along a tracked component");
        }
        sets.unite(r, target);
      }
    }
  });

  std::vector<int> root_to_id(records.size(), -1);
  TopologySummary topo;
  for (std::size_t r : by_anchor.at(0)) {
    const std::size_t root = sets.find(r);
    if (root_to_id[root] < 0) {
      root_to_id[root] = topo.num_components();
      topo.components.push_back({topo.num_components(), 0, records[r].is_min(), records[r].index});
    }
  }
  for (std::size_t r = 0; r < records.size(); ++r) {
    const int id = root_to_id[sets.find(r)];
    if (id < 0) throw Error(ErrorKind::inconsistency, "component does not meet the first anchor fibre");
    records[r].component_id = id;
    if (records[r].index != topo.components[id].morse_index) {
      throw Error(ErrorKind::inconsistency, "Morse index is not constant on a component");
    }
  }
  for (std::size_t a = 0; a < by_anchor.size(); ++a) {
    std::vector<int> count(topo.components.size(), 0);
    for (std::size_t r : by_anchor[a]) ++count[records[r].component_id];
    for (auto& c : topo.components) {
      if (a == 0) {
        c.b = count[c.id];
      } else if (count[c.id] != c.b) {
        throw Error(ErrorKind::inconsistency, "component meets anchor fibres a varying number of times");
      }
    }
  }
  return topo;
}

/// Components among the min-components at `anchor` whose tracked value at
/// theta lies within value_tol of the best.
template <CostFamily P>
std::vector<int> best_min_components(const P& problem, const std::vector<AngleVec>& anchors,
                                     const std::vector<CriticalPointRecord>& records, const AngleVec& theta,
                                     const DerivativeBounds& bounds, double value_tol, const TrackOptions& opts) {
  const std::size_t a = nearest_anchor(anchors, theta);
  const ParameterPath path = plan_path(anchors[a], theta);
  std::vector<std::pair<double, int>> vals;
  for (const auto& rec : records) {
    if (rec.anchor_index != static_cast<int>(a) || !rec.is_min()) continue;
    const LiftedPath lifted = track_point(problem, rec, path, bounds, opts);
    vals.emplace_back(problem.value(BundlePoint{lifted.end_x(), theta}), rec.component_id);
  }
  if (vals.empty()) throw Error(ErrorKind::inconsistency, "no fibre-wise minima recorded at anchor");
  double best = vals.front().first;
  for (const auto& v : vals) best = std::min(best, v.first);
  std::set<int> ids;
  for (const auto& [f, id] : vals) {
    if (f <= best + value_tol) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

/// Samples each cell at its centre and corners; a cell lists every
/// min-component that was (near-)optimal at any of those samples.
template <CostFamily P>
RegionMap build_region_map(const P& problem, const std::vector<AngleVec>& anchors,
                           const std::vector<CriticalPointRecord>& records, const DerivativeBounds& bounds,
                           int region_grid_per_dim, double value_tol, const TrackOptions& opts = {}) {
  if (region_grid_per_dim < 1) throw Error(ErrorKind::invalid_config, "region grid must be positive");
  const int m = problem.shape.base_dim;
  const int n = region_grid_per_dim;
  const double h = kTwoPi / n;

  std::vector<std::vector<int>> at_node;
  detail::for_each_grid_node(m, n, [&](const std::vector<int>&, const std::vector<double>& c) {
    at_node.push_back(best_min_components(problem, anchors, records, AngleVec(c), bounds, value_tol, opts));
  });

  RegionMap map;
  map.grid_per_dim = n;
  map.base_dim = m;
  detail::for_each_grid_node(m, n, [&](const std::vector<int>& idx, const std::vector<double>& c) {
    std::vector<double> centre(c);
    for (double& v : centre) v += 0.5 * h;
    std::set<int> ids;
    for (int id : best_min_components(problem, anchors, records, AngleVec(centre), bounds, value_tol, opts)) {
      ids.insert(id);
    }
    for (int corner = 0; corner < (1 << m); ++corner) {
      std::vector<int> ci(idx);
      for (int d = 0; d < m; ++d) {
        if (corner & (1 << d)) ci[d] = (ci[d] + 1) % n;
      }
      for (int id : at_node[detail::grid_flat_index(ci, n)]) ids.insert(id);
    }
    map.cells.emplace_back(ids.begin(), ids.end());
  });
  return map;
}

inline TrackOptions track_options_for(const TableConfig& config) {
  TrackOptions opts;
  opts.tol = config.tol;
  opts.max_newton_iter = config.max_newton_iter;
  return opts;
}

/// Builds the full lookup table for `problem`.
inline PrecomputedTable build_table(const ProblemDefinition& problem, const TableConfig& config) {
  config.validate();
  if (config.alpha.has_value() != config.beta.has_value()) {
    throw Error(ErrorKind::invalid_config, "alpha and beta must be supplied together");
  }
  PrecomputedTable table;
  table.problem_name = problem.name;
  table.problem_parameters = problem.parameters;
  table.shape = problem.shape;
  table.config = config;
  if (config.alpha) {
    table.bounds = {*config.alpha, *config.beta, BoundsSource::user_supplied};
  } else {
    table.bounds = estimate_bounds(problem, config.bounds_grid_per_dim);
  }
  table.anchors = select_anchors(problem.shape, config.anchors_per_dim);

  std::size_t per_anchor = 0;
  for (std::size_t a = 0; a < table.anchors.size(); ++a) {
    const auto pts = enumerate_fibre_critical_points(problem, table.anchors[a], config.fibre_grid_per_dim,
                                                     config.tol, config.max_newton_iter);
    if (a == 0) {
      per_anchor = pts.size();
      if (per_anchor == 0) throw Error(ErrorKind::inconsistency, "no critical points found on the first anchor fibre");
    } else if (pts.size() != per_anchor) {
      throw Error(ErrorKind::inconsistency, "anchor fibres carry different numbers of critical points (" +
                                                std::to_string(per_anchor) + " vs " + std::to_string(pts.size()) + ")");
    }
    for (const auto& p : pts) {
      table.records.push_back({static_cast<int>(a), p.x, p.index, -1, p.f_value, p.hess_inv_norm});
    }
  }

  const TrackOptions opts = track_options_for(config);
  table.topology = trace_components(problem, table.anchors, config.anchors_per_dim, table.records, table.bounds, opts);
  table.regions = build_region_map(problem, table.anchors, table.records, table.bounds, config.region_grid_per_dim,
                                   config.value_tol, opts);
  return table;
}

}  // namespace fibreopt
