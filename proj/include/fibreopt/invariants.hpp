#pragma once

// Property checks that tie a built table back to brute-force ground truth.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/offline.hpp"
#include "fibreopt/oracle.hpp"
#include "fibreopt/query.hpp"
#include "fibreopt/table.hpp"

namespace fibreopt {

struct InvariantResult {
  std::string name;
  bool passed = true;
  std::vector<std::string> counterexamples;
  std::string detail;
};

struct InvariantReport {
  std::vector<InvariantResult> results;

  bool all_passed() const {
    for (const auto& r : results) {
      if (!r.passed) return false;
    }
    return true;
  }
  const InvariantResult* find(const std::string& name) const {
    for (const auto& r : results) {
      if (r.name == name) return &r;
    }
    return nullptr;
  }
};

struct InvariantOptions {
  int oracle_samples = 500;    // theta samples for oracle agreement and region soundness
  int count_samples = 200;     // theta samples for the constant-count check
  int fd_samples = 100;
  int oracle_grid = 0;         // 0 selects default_oracle_grid(k)
  double f_tol = 1e-8;
  double x_tol = 1e-6;
  double mode_tol = 1e-10;
  double monodromy_tol = 1e-8;
  std::size_t max_counterexamples = 5;
};

namespace detail {

inline void fail(InvariantResult& r, const std::string& what, std::size_t cap) {
  r.passed = false;
  if (r.counterexamples.size() < cap) r.counterexamples.push_back(what);
}

inline std::string theta_label(const AngleVec& theta) { return "theta=" + format_angles(theta, 17); }

}  // namespace detail

/// Runs every invariant against `table` using seeded parameter samples.
/// Deterministic for a given seed. Failures become report entries.
inline InvariantReport run_invariant_suite(const ProblemDefinition& problem, const PrecomputedTable& table,
                                           std::uint64_t seed, const InvariantOptions& opt = {}) {
  InvariantReport report;
  const std::size_t cap = opt.max_counterexamples;
  const int k = problem.shape.fibre_dim;
  const int m = problem.shape.base_dim;
  const int oracle_grid = opt.oracle_grid > 0 ? opt.oracle_grid : default_oracle_grid(k);
  const TrackOptions track = track_options_for(table.config);
  char buf[256];

  {
    InvariantResult r{"derivative-hygiene"};
    const FdReport fd = fd_check(problem, opt.fd_samples, seed);
    std::snprintf(buf, sizeof buf, "max gradient error %.3e, max Hessian error %.3e, asymmetry %.3e",
                  fd.max_grad_error, fd.max_hess_error, fd.max_hess_asymmetry);
    r.detail = buf;
    if (!(fd.max_grad_error <= 1e-5 && fd.max_hess_error <= 1e-4 && fd.max_hess_asymmetry <= 1e-10)) {
      detail::fail(r, buf, cap);
    }
    report.results.push_back(r);
  }

  {
    InvariantResult r{"periodicity"};
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const AngleVec x = random_angles(rng, k);
      const AngleVec th = random_angles(rng, m);
      const int i = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
      const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(m));
      // Points are canonicalised on construction, so this compares f across the wrap.
      std::vector<double> xs(x.coords()), ts(th.coords());
      xs[i] += kTwoPi;
      ts[j] += kTwoPi;
      const double f0 = problem.value(BundlePoint{x, th});
      const double f1 = problem.value(BundlePoint{AngleVec(xs), AngleVec(ts)});
      worst = std::max(worst, std::abs(f0 - f1));
    }
    std::snprintf(buf, sizeof buf, "max deviation %.3e", worst);
    r.detail = buf;
    if (!(worst <= 1e-12)) detail::fail(r, buf, cap);
    report.results.push_back(r);
  }

  const std::size_t per_anchor = table.records_at(0).size();
  {
    InvariantResult r{"constant-count"};
    std::mt19937_64 rng(seed + 1);
    for (int s = 0; s < opt.count_samples; ++s) {
      const AngleVec th = random_angles(rng, m);
      try {
        const auto pts = enumerate_fibre_critical_points(problem, th, table.config.fibre_grid_per_dim,
                                                         table.config.tol, table.config.max_newton_iter);
        if (pts.size() != per_anchor) {
          detail::fail(r, detail::theta_label(th) + ": " + std::to_string(pts.size()) + " critical points, table has " +
                              std::to_string(per_anchor), cap);
        }
      } catch (const Error& e) {
        detail::fail(r, detail::theta_label(th) + ": " + e.what(), cap);
      }
    }
    r.detail = std::to_string(per_anchor) + " critical points per fibre";
    report.results.push_back(r);
  }

  {
    InvariantResult r{"index-constancy"};
    for (std::size_t i = 0; i < table.records.size(); ++i) {
      const auto& rec = table.records[i];
      int expected = -1;
      for (const auto& c : table.topology.components) {
        if (c.id == rec.component_id) expected = c.morse_index;
      }
      if (rec.index != expected) {
        detail::fail(r, "record " + std::to_string(i) + " (anchor " + std::to_string(rec.anchor_index) + ", " +
                            detail::theta_label(table.anchors[rec.anchor_index]) + ") has index " +
                            std::to_string(rec.index) + " but component " + std::to_string(rec.component_id) +
                            " has index " + std::to_string(expected), cap);
      }
    }
    report.results.push_back(r);
  }

  {
    InvariantResult r{"monodromy-closure"};
    for (const auto& comp : table.topology.components) {
      for (std::size_t idx : table.records_at(0)) {
        const auto& rec = table.records[idx];
        if (rec.component_id != comp.id) continue;
        for (int d = 0; d < m; ++d) {
          try {
            const LiftedPath lifted = track_loop(problem, rec, table.anchors[0], d, comp.b, table.bounds, track);
            const double dist = geodesic_distance(lifted.end_x(), rec.x);
            if (!(dist <= opt.monodromy_tol)) {
              std::snprintf(buf, sizeof buf, "component %d, base dim %d: %d loops end %.3e from the start", comp.id,
                            d, comp.b, dist);
              detail::fail(r, buf, cap);
            }
          } catch (const Error& e) {
            detail::fail(r, "component " + std::to_string(comp.id) + ": " + e.what(), cap);
          }
        }
        break;
      }
    }
    report.results.push_back(r);
  }

  InvariantResult soundness{"region-soundness"};
  InvariantResult agreement{"oracle-agreement"};
  InvariantResult modes{"mode-consistency"};
  InvariantResult halving{"certified-halving"};
  std::mt19937_64 rng(seed + 2);
  double worst_f = 0.0;
  double worst_x = 0.0;
  for (int s = 0; s < opt.oracle_samples; ++s) {
    const AngleVec th = random_angles(rng, m);
    const std::string label = detail::theta_label(th);
    const OracleResult oracle = oracle_fibre_minimum(problem, th, oracle_grid, table.config.value_tol);
    SolveResult all;
    try {
      all = query(table, problem, th, QueryMode::track_all_minima, track);
    } catch (const Error& e) {
      detail::fail(agreement, label + ": track-all query failed: " + e.what(), cap);
      continue;
    }

    if (all.all_steps_certified) {
      for (const auto& p : all.tracked) {
        if (!p.all_halving()) detail::fail(halving, label + ": certified corrector run did not halve", cap);
      }
    }

    const double df = std::abs(all.f_value - oracle.min_value);
    worst_f = std::max(worst_f, df);
    if (!(df <= opt.f_tol)) {
      std::snprintf(buf, sizeof buf, ": |f - oracle f| = %.3e", df);
      detail::fail(agreement, label + buf, cap);
    }
    for (const auto& ox : oracle.minimizers) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& mz : all.minimizers) best = std::min(best, geodesic_distance(mz.x, ox));
      worst_x = std::max(worst_x, best);
      if (!(best <= opt.x_tol)) {
        std::snprintf(buf, sizeof buf, ": oracle minimizer %s missed by %.3e", format_angles(ox).c_str(), best);
        detail::fail(agreement, label + buf, cap);
      }
    }

    const auto& listed = table.regions.components_at(th);
    for (const auto& ox : oracle.minimizers) {
      int comp = -1;
      for (const auto& p : all.tracked) {
        if (geodesic_distance(p.end_x(), ox) <= opt.x_tol) comp = p.component_id;
      }
      if (comp < 0 || std::find(listed.begin(), listed.end(), comp) == listed.end()) {
        detail::fail(soundness, label + ": global minimizer on component " + std::to_string(comp) +
                                    " is not listed by its region cell", cap);
      }
    }

    try {
      const SolveResult guided = query(table, problem, th, QueryMode::region_guided, track);
      const double dm = std::abs(guided.f_value - all.f_value);
      if (!(dm <= opt.mode_tol)) {
        std::snprintf(buf, sizeof buf, ": region-guided f differs by %.3e", dm);
        detail::fail(modes, label + buf, cap);
      }
    } catch (const Error& e) {
      detail::fail(modes, label + ": region-guided query failed: " + e.what(), cap);
    }
  }
  std::snprintf(buf, sizeof buf, "%d samples, worst |df| %.3e, worst minimizer distance %.3e", opt.oracle_samples,
                worst_f, worst_x);
  agreement.detail = buf;
  report.results.push_back(soundness);
  report.results.push_back(agreement);
  report.results.push_back(modes);
  report.results.push_back(halving);
  return report;
}

}  // namespace fibreopt
