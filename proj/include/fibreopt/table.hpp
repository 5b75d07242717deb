#pragma once

// Data model of the precomputed lookup table: critical points on anchor
// fibres, their grouping into critical circles, and the region map.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/linalg.hpp"
#include "fibreopt/torus.hpp"

namespace fibreopt {

inline constexpr int kTableFormatVersion = 1;

struct CriticalPointRecord {
  int anchor_index = 0;
  AngleVec x;
  int index = 0;  // number of negative Hessian eigenvalues
  int component_id = -1;
  double f_value = 0.0;
  double hess_inv_norm = 0.0;

  bool is_min() const { return index == 0; }
};

struct ComponentInfo {
  int id = 0;
  int b = 0;  // intersections with each fibre
  bool is_min = false;
  int morse_index = 0;
};

struct TopologySummary {
  std::vector<ComponentInfo> components;

  int num_components() const { return static_cast<int>(components.size()); }
  int num_min_components() const {
    int n = 0;
    for (const auto& c : components) n += c.is_min ? 1 : 0;
    return n;
  }
  int points_per_fibre() const {
    int n = 0;
    for (const auto& c : components) n += c.b;
    return n;
  }
};

/// Uniform grid of cells over the parameter torus. Each cell lists the
/// min-components that can host the global minimum somewhere inside it.
struct RegionMap {
  int grid_per_dim = 0;
  int base_dim = 1;
  std::vector<std::vector<int>> cells;  // lexicographic over base dims

  std::size_t cell_of(const AngleVec& theta) const {
    std::size_t flat = 0;
    const double h = kTwoPi / grid_per_dim;
    for (std::size_t d = 0; d < theta.size(); ++d) {
      int j = static_cast<int>(std::floor(theta[d] / h));
      j = std::clamp(j, 0, grid_per_dim - 1);
      flat = flat * grid_per_dim + static_cast<std::size_t>(j);
    }
    return flat;
  }

  const std::vector<int>& components_at(const AngleVec& theta) const { return cells.at(cell_of(theta)); }

  /// Number of connected groups of cells (torus adjacency) that list the
  /// same single component. Cells listing several components are seams
  /// between zones and are not counted.
  int zone_count() const {
    const std::size_t n = cells.size();
    std::vector<int> label(n, -1);
    int zones = 0;
    std::vector<std::size_t> stack;
    std::vector<int> idx(base_dim);
    for (std::size_t start = 0; start < n; ++start) {
      if (label[start] >= 0 || cells[start].size() != 1) continue;
      const int comp = cells[start][0];
      label[start] = zones;
      stack.assign(1, start);
      while (!stack.empty()) {
        const std::size_t cur = stack.back();
        stack.pop_back();
        std::size_t rem = cur;
        for (int d = base_dim - 1; d >= 0; --d) {
          idx[d] = static_cast<int>(rem % grid_per_dim);
          rem /= grid_per_dim;
        }
        for (int d = 0; d < base_dim; ++d) {
          for (int step : {-1, 1}) {
            std::vector<int> nb(idx);
            nb[d] = (idx[d] + step + grid_per_dim) % grid_per_dim;
            std::size_t flat = 0;
            for (int v : nb) flat = flat * grid_per_dim + static_cast<std::size_t>(v);
            if (label[flat] < 0 && cells[flat].size() == 1 && cells[flat][0] == comp) {
              label[flat] = zones;
              stack.push_back(flat);
            }
          }
        }
      }
      ++zones;
    }
    return zones;
  }
};

struct TableConfig {
  int anchors_per_dim = 16;
  int fibre_grid_per_dim = 64;
  int region_grid_per_dim = 64;
  int bounds_grid_per_dim = 64;
  double tol = 1e-9;
  double value_tol = 1e-7;
  int max_newton_iter = 50;
  std::uint64_t seed = 0;
  // When set, these replace the grid estimates of the derivative bounds.
  std::optional<double> alpha;
  std::optional<double> beta;

  void validate() const {
    auto bad = [](const std::string& msg) { throw Error(ErrorKind::invalid_config, msg); };
    if (anchors_per_dim < 2) bad("anchors_per_dim must be at least 2");
    if (fibre_grid_per_dim < 4) bad("fibre_grid_per_dim must be at least 4");
    if (region_grid_per_dim < 1) bad("region_grid_per_dim must be at least 1");
    if (bounds_grid_per_dim < 8) bad("bounds_grid_per_dim must be at least 8");
    if (!(tol > 0.0 && tol <= 1e-3)) bad("tol must lie in (0, 1e-3]");
    if (!(value_tol > 0.0 && value_tol < 1.0)) bad("value_tol must lie in (0, 1)");
    if (max_newton_iter < 1) bad("max_newton_iter must be positive");
    if (alpha && !(*alpha >= 0.0 && std::isfinite(*alpha))) bad("alpha must be finite and nonnegative");
    if (beta && !(*beta >= 0.0 && std::isfinite(*beta))) bad("beta must be finite and nonnegative");
  }
};

struct PrecomputedTable {
  int format_version = kTableFormatVersion;
  std::string problem_name;
  std::map<std::string, double> problem_parameters;
  BundleShape shape;
  std::vector<AngleVec> anchors;
  std::vector<CriticalPointRecord> records;  // grouped by anchor, sorted by x
  TopologySummary topology;
  RegionMap regions;
  DerivativeBounds bounds;
  TableConfig config;

  std::vector<std::size_t> records_at(int anchor) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (records[i].anchor_index == anchor) out.push_back(i);
    }
    return out;
  }

  const ComponentInfo& component(int id) const {
    for (const auto& c : topology.components) {
      if (c.id == id) return c;
    }
    throw Error(ErrorKind::inconsistency, "unknown component id " + std::to_string(id));
  }

  bool matches(const ProblemDefinition& problem) const {
    return problem.name == problem_name && problem.parameters == problem_parameters &&
           problem.shape == shape;
  }
};

/// Count of negative eigenvalues of a symmetric Hessian.
inline int classify_index(const Matrix& hessian) {
  const Vector ev = symmetric_eigenvalues(hessian);
  const double scale = ev.cwiseAbs().maxCoeff();
  int negative = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= 1e-9 * scale || ev(i) == 0.0) {
      throw Error(ErrorKind::degenerate_critical_point, "Hessian has a near-zero eigenvalue");
    }
    if (ev(i) < 0.0) ++negative;
  }
  return negative;
}

}  // namespace fibreopt
