#pragma once

// Online query: nearest anchor, straight path, track the stored fibre-wise
// minima, keep the best.

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/offline.hpp"
#include "fibreopt/table.hpp"
#include "fibreopt/tracker.hpp"

namespace fibreopt {

enum class QueryMode { track_all_minima, region_guided };

inline const char* to_string(QueryMode mode) {
  return mode == QueryMode::track_all_minima ? "track-all-minima" : "region-guided";
}

inline QueryMode parse_query_mode(const std::string& s) {
  if (s == "track-all-minima" || s == "track-all") return QueryMode::track_all_minima;
  if (s == "region-guided") return QueryMode::region_guided;
  throw Error(ErrorKind::invalid_config, "unknown query mode '" + s + "'");
}

struct SolveResult {
  AngleVec theta;
  std::vector<BundlePoint> minimizers;
  std::vector<int> minimizer_components;
  double f_value = 0.0;
  std::vector<LiftedPath> tracked;
  EvaluationCounts evaluations;
  bool all_steps_certified = true;
  std::size_t anchor_index = 0;

  std::size_t steps() const {
    std::size_t n = 0;
    for (const auto& p : tracked) n += p.samples.size() - 1;
    return n;
  }
};

inline std::size_t nearest_anchor(const PrecomputedTable& table, const AngleVec& theta) {
  return nearest_anchor(table.anchors, theta);
}

inline ParameterPath plan_path(const PrecomputedTable& table, const AngleVec& anchor_theta, const AngleVec& theta) {
  if (anchor_theta.size() != theta.size() || theta.size() != static_cast<std::size_t>(table.shape.base_dim)) {
    throw Error(ErrorKind::invalid_input, "plan_path: dimension mismatch");
  }
  return plan_path(anchor_theta, theta);
}

inline SolveResult query(const PrecomputedTable& table, const ProblemDefinition& problem, const AngleVec& theta,
                         QueryMode mode, const TrackOptions& base_opts) {
  if (!table.matches(problem)) {
    throw Error(ErrorKind::table_mismatch, "table was built for '" + table.problem_name +
                                               "', not for problem '" + problem.name + "'");
  }
  if (theta.size() != static_cast<std::size_t>(table.shape.base_dim)) {
    throw Error(ErrorKind::invalid_input, "theta has the wrong dimension");
  }
  CountingProblem counted(problem);
  SolveResult result;
  result.theta = theta;
  result.anchor_index = nearest_anchor(table, theta);
  const ParameterPath path = plan_path(table, table.anchors[result.anchor_index], theta);

  std::set<int> wanted;
  if (mode == QueryMode::region_guided) {
    const auto& listed = table.regions.components_at(theta);
    wanted.insert(listed.begin(), listed.end());
  }

  std::vector<double> values;
  for (std::size_t r : table.records_at(static_cast<int>(result.anchor_index))) {
    const CriticalPointRecord& rec = table.records[r];
    if (!rec.is_min()) continue;
    if (mode == QueryMode::region_guided && !wanted.contains(rec.component_id)) continue;
    LiftedPath lifted = track_point(counted, rec, path, table.bounds, base_opts);
    values.push_back(counted.value(BundlePoint{lifted.end_x(), theta}));
    result.all_steps_certified = result.all_steps_certified && lifted.all_certified();
    result.tracked.push_back(std::move(lifted));
  }
  if (result.tracked.empty()) {
    throw Error(ErrorKind::inconsistency, "no fibre-wise minimum to track from anchor " +
                                              std::to_string(result.anchor_index));
  }

  const double best = *std::min_element(values.begin(), values.end());
  const double value_tol = table.config.value_tol;
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return result.tracked[a].end_x() < result.tracked[b].end_x(); });
  for (std::size_t i : order) {
    if (values[i] > best + value_tol) continue;
    const AngleVec& x = result.tracked[i].end_x();
    const bool dup = std::any_of(result.minimizers.begin(), result.minimizers.end(), [&](const BundlePoint& p) {
      return geodesic_distance(p.x, x) < 10.0 * base_opts.tol;
    });
    if (dup) continue;
    result.minimizers.push_back(BundlePoint{x, theta});
    result.minimizer_components.push_back(result.tracked[i].component_id);
  }
  result.f_value = best;
  result.evaluations = counted.counts();
  return result;
}

inline SolveResult query(const PrecomputedTable& table, const ProblemDefinition& problem, const AngleVec& theta,
                         QueryMode mode = QueryMode::track_all_minima) {
  return query(table, problem, theta, mode, track_options_for(table.config));
}

struct StreamItem {
  std::optional<SolveResult> result;
  std::optional<Error> error;

  bool ok() const { return result.has_value(); }
};

/// Independent queries, one per theta; failures are reported per item.
inline std::vector<StreamItem> query_stream(const PrecomputedTable& table, const ProblemDefinition& problem,
                                            const std::vector<AngleVec>& thetas,
                                            QueryMode mode = QueryMode::track_all_minima) {
  std::vector<StreamItem> out;
  out.reserve(thetas.size());
  for (const auto& theta : thetas) {
    StreamItem item;
    try {
      item.result = query(table, problem, theta, mode);
    } catch (const Error& e) {
      item.error = e;
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace fibreopt
