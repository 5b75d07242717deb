#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "fibreopt/catalog.hpp"
#include "fibreopt/invariants.hpp"
#include "fibreopt/offline.hpp"
#include "fibreopt/oracle.hpp"
#include "test_support.hpp"

using namespace fibreopt;

namespace {

PrecomputedTable small_table(const ProblemDefinition& p) {
  TableConfig c;
  c.anchors_per_dim = 16;
  c.fibre_grid_per_dim = 32;
  c.region_grid_per_dim = 32;
  c.bounds_grid_per_dim = 32;
  return build_table(p, c);
}

InvariantOptions quick_options() {
  InvariantOptions o;
  o.oracle_samples = 100;
  o.count_samples = 50;
  o.oracle_grid = 4096;
  return o;
}

}  // namespace

TEST(OracleMinimum, TranslationExample) {
  const auto p = make_catalog_problem("translation");
  const OracleResult r = oracle_fibre_minimum(p, AngleVec{0.7}, 4096);
  ASSERT_EQ(r.minimizers.size(), 1u);
  EXPECT_LT(geodesic_distance(r.minimizers[0], AngleVec{0.7}), kTwoPi / 4096);
  EXPECT_NEAR(r.min_value, -1.0, 1e-15);
  EXPECT_GE(r.evaluations, 4096u);
}

TEST(OracleMinimum, WindingTie) {
  const auto p = make_catalog_problem("winding");
  const OracleResult r = oracle_fibre_minimum(p, AngleVec{0.0}, 1 << 14);
  ASSERT_EQ(r.minimizers.size(), 2u);
  EXPECT_NEAR(r.minimizers[0][0], kPi / 2, 1e-10);
  EXPECT_NEAR(r.minimizers[1][0], 3 * kPi / 2, 1e-10);
  EXPECT_NEAR(r.min_value, -1.0, 1e-15);
}

TEST(OracleMinimum, TwoHarmonicReference) {
  const auto p = make_catalog_problem("two-harmonic");
  const OracleResult r = oracle_fibre_minimum(p, AngleVec{1.3}, 1 << 14);
  ASSERT_EQ(r.minimizers.size(), 1u);
  EXPECT_NEAR(r.minimizers[0][0], 1.4194901161799848524, 1e-12);
  EXPECT_NEAR(r.min_value, -1.1837817874688485496, 1e-14);
}

TEST(OracleMinimum, RejectsCoarseGrid) { EXPECT_THROW(oracle_fibre_minimum(make_catalog_problem("translation"), AngleVec{0.0}, 64), Error); }

TEST(OracleMinimum, TwoDimensionalFibre) {
  const auto p = fixtures::coupled_pair_family();
  const OracleResult r = oracle_fibre_minimum(p, AngleVec{1.0, 5.0}, default_oracle_grid(2));
  ASSERT_EQ(r.minimizers.size(), 1u);
  EXPECT_LT(geodesic_distance(r.minimizers[0], AngleVec{1.0, 5.0}), 1e-9);
  EXPECT_NEAR(r.min_value, -1.5, 1e-14);
}

TEST(OracleCriticalPoints, Examples) {
  for (double th : {0.0, 1.0, 4.0}) {
    EXPECT_EQ(oracle_critical_points(make_catalog_problem("translation"), AngleVec{th}, 1024).size(), 2u);
    EXPECT_EQ(oracle_critical_points(make_catalog_problem("winding"), AngleVec{th}, 1024).size(), 4u);
  }
  const auto cw = oracle_critical_points(make_catalog_problem("competing-wells"), AngleVec{1.0}, 1 << 14);
  ASSERT_EQ(cw.size(), 4u);
  EXPECT_NEAR(cw[0].x[0], 0.0, 1e-12);
  EXPECT_EQ(cw[0].index, 0);
  EXPECT_NEAR(cw[1].x[0], 1.5032070889382889354, 1e-12);
  EXPECT_EQ(cw[1].index, 1);
  EXPECT_NEAR(cw[2].x[0], kPi, 1e-12);
  EXPECT_EQ(cw[2].index, 0);
  EXPECT_NEAR(cw[3].x[0], 4.7799782182412975415, 1e-12);
  EXPECT_EQ(cw[3].index, 1);
}

TEST(OracleCriticalPoints, CoupledPairIndices) {
  const auto pts = oracle_critical_points(fixtures::coupled_pair_family(), AngleVec{0.0, 0.0}, 64);
  ASSERT_EQ(pts.size(), 4u);
  std::vector<int> idx;
  for (const auto& c : pts) idx.push_back(c.index);
  EXPECT_EQ(idx, (std::vector<int>{0, 1, 1, 2}));
}

TEST(OracleCriticalPoints, DegenerateFamily) {
  try {
    oracle_critical_points(fixtures::cubic_sine_family(), AngleVec{0.0}, 1024);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_critical_point);
  }
}

TEST(OracleProperties, GridSaturation) {
  std::mt19937_64 rng(31);
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    for (int i = 0; i < 10; ++i) {
      const AngleVec th = random_angles(rng, 1);
      const double a = oracle_fibre_minimum(p, th, 1 << 13).min_value;
      const double b = oracle_fibre_minimum(p, th, 1 << 14).min_value;
      EXPECT_LE(std::abs(a - b), 1e-10) << e.name;
    }
  }
}

TEST(OracleProperties, CountIsGridStable) {
  std::mt19937_64 rng(37);
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    for (int i = 0; i < 10; ++i) {
      const AngleVec th = random_angles(rng, 1);
      const std::size_t base = oracle_critical_points(p, th, 1 << 10).size();
      for (int g : {1 << 11, 1 << 12, 1 << 14}) EXPECT_EQ(oracle_critical_points(p, th, g).size(), base) << e.name;
    }
  }
}

TEST(InvariantSuite, TranslationPasses) {
  const auto p = make_catalog_problem("translation");
  const InvariantReport rep = run_invariant_suite(p, small_table(p), 1, quick_options());
  for (const auto& r : rep.results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << (r.counterexamples.empty() ? r.detail : r.counterexamples[0]);
  }
  EXPECT_EQ(rep.results.size(), 9u);
}

TEST(InvariantSuite, CompetingWellsPasses) {
  const auto p = make_catalog_problem("competing-wells");
  const InvariantReport rep = run_invariant_suite(p, small_table(p), 2, quick_options());
  for (const auto& r : rep.results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << (r.counterexamples.empty() ? r.detail : r.counterexamples[0]);
  }
}

TEST(InvariantSuite, IsDeterministic) {
  const auto p = make_catalog_problem("two-harmonic");
  const auto t = small_table(p);
  const auto a = run_invariant_suite(p, t, 9, quick_options());
  const auto b = run_invariant_suite(p, t, 9, quick_options());
  ASSERT_EQ(a.results.size(), b.results.size());
  for (std::size_t i = 0; i < a.results.size(); ++i) {
    EXPECT_EQ(a.results[i].detail, b.results[i].detail);
    EXPECT_EQ(a.results[i].passed, b.results[i].passed);
  }
}

TEST(InvariantSuite, CorruptedComponentIdIsReported) {
  const auto p = make_catalog_problem("competing-wells");
  PrecomputedTable t = small_table(p);
  int max_component = -1;
  for (const auto& c : t.topology.components) {
    if (!c.is_min) max_component = c.id;
  }
  ASSERT_GE(max_component, 0);
  for (std::size_t r : t.records_at(3)) {
    if (t.records[r].is_min()) {
      t.records[r].component_id = max_component;
      break;
    }
  }
  const InvariantReport rep = run_invariant_suite(p, t, 3, quick_options());
  EXPECT_FALSE(rep.all_passed());
  const InvariantResult* idx = rep.find("index-constancy");
  ASSERT_NE(idx, nullptr);
  ASSERT_FALSE(idx->passed);
  ASSERT_EQ(idx->counterexamples.size(), 1u);
  char expected[64];
  std::snprintf(expected, sizeof expected, "theta=%.17g", t.anchors[3][0]);
  EXPECT_NE(idx->counterexamples[0].find(expected), std::string::npos) << idx->counterexamples[0];
}
