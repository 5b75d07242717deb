#include <gtest/gtest.h>

#include <cmath>

#include "fibreopt/catalog.hpp"
#include "fibreopt/oracle.hpp"
#include "test_support.hpp"

using namespace fibreopt;

TEST(FdCheck, TranslationGradient) {
  const FdReport r = fd_check(make_catalog_problem("translation"), 100, 1);
  EXPECT_LE(r.max_grad_error, 1e-6);
  EXPECT_LE(r.max_hess_error, 1e-4);
}

TEST(FdCheck, ConstantFamilyIsExact) {
  const FdReport r = fd_check(fixtures::constant_family(), 100, 2);
  EXPECT_EQ(r.max_grad_error, 0.0);
  EXPECT_EQ(r.max_hess_error, 0.0);
}

TEST(FdCheck, WindingHessian) {
  const FdReport r = fd_check(make_catalog_problem("winding"), 100, 3);
  EXPECT_LE(r.max_hess_error, 1e-4);
}

TEST(FdCheck, AllCatalogFamiliesAreClean) {
  for (const auto& e : catalog()) {
    const FdReport r = fd_check(e.make({}), 100, 4);
    EXPECT_LE(r.max_grad_error, 1e-5) << e.name;
    EXPECT_LE(r.max_hess_error, 1e-4) << e.name;
    EXPECT_LE(r.max_hess_asymmetry, 1e-10) << e.name;
  }
  const FdReport r = fd_check(fixtures::coupled_pair_family(), 100, 4);
  EXPECT_LE(r.max_grad_error, 1e-5);
  EXPECT_LE(r.max_hess_error, 1e-4);
  EXPECT_LE(r.max_hess_asymmetry, 1e-10);
}

TEST(FdCheck, DetectsWrongDerivative) {
  ProblemDefinition p = make_catalog_problem("translation");
  p.fibre_grad = [](const BundlePoint& q) { return Vector::Constant(1, 1.01 * std::sin(q.x[0] - q.theta[0])).eval(); };
  EXPECT_GT(fd_check(p, 100, 5).max_grad_error, 1e-3);
}

TEST(FdCheck, Reproducible) {
  const auto p = make_catalog_problem("two-harmonic");
  EXPECT_EQ(fd_check(p, 50, 9).max_grad_error, fd_check(p, 50, 9).max_grad_error);
}

TEST(EstimateAlpha, Translation) {
  // True Lipschitz constant of cos(x - t) in x is 1.
  const double a = estimate_alpha(make_catalog_problem("translation"), 64);
  EXPECT_GE(a, 1.0 * 0.95);
  EXPECT_LE(a, 1.5 * 1.05);
}

TEST(EstimateAlpha, ConstantIsZero) { EXPECT_EQ(estimate_alpha(fixtures::constant_family(), 16), 0.0); }

TEST(EstimateAlpha, Winding) {
  // h''' = 8 sin(2x - t)
  const double a = estimate_alpha(make_catalog_problem("winding"), 64);
  EXPECT_GE(a, 8.0 * 0.95);
  EXPECT_LE(a, 12.0 * 1.05);
  EXPECT_NEAR(a, 12.0, 0.6);
}

TEST(EstimateAlpha, RejectsCoarseGrid) {
  try {
    estimate_alpha(make_catalog_problem("translation"), 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_config);
  }
}

TEST(EstimateAlpha, MonotoneUnderGridRefinement) {
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    double prev = 0.0;
    for (int g : {8, 16, 32, 64, 128}) {
      const double a = estimate_alpha_raw(p, g);
      EXPECT_GE(a, prev - 1e-9) << e.name << " grid " << g;
      prev = a;
    }
  }
}

TEST(EstimateBeta, MatchesClosedFormBounds) {
  // sup |d^2 f / dx dt|: translation 1, winding 2, competing-wells 0.5
  EXPECT_NEAR(estimate_beta(make_catalog_problem("translation"), 64), 1.5, 1e-12);
  EXPECT_NEAR(estimate_beta(make_catalog_problem("winding"), 64), 3.0, 1e-12);
  EXPECT_NEAR(estimate_beta(make_catalog_problem("competing-wells"), 64), 0.75, 1e-12);
}

TEST(MixedPartial, FiniteDifferenceFallbackMatchesCallback) {
  const auto with = make_catalog_problem("competing-wells");
  ProblemDefinition without = with;
  without.mixed_partial = nullptr;
  ASSERT_FALSE(without.has_mixed_partial());
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const BundlePoint q{random_angles(rng, 1), random_angles(rng, 1)};
    EXPECT_NEAR(mixed_partial_of(with, q)(0, 0), mixed_partial_of(without, q)(0, 0), 1e-8);
  }
}

TEST(Periodicity, CatalogValuesAgreeAcrossTheWrap) {
  std::mt19937_64 rng(12);
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    for (int i = 0; i < 100; ++i) {
      const double x = kTwoPi * uniform01(rng);
      const double t = kTwoPi * uniform01(rng);
      // Evaluate the raw closed form through a point whose coordinates were
      // shifted by full turns before canonicalisation.
      const double f0 = p.value(BundlePoint{AngleVec{x}, AngleVec{t}});
      const double f1 = p.value(BundlePoint{AngleVec{x + kTwoPi}, AngleVec{t - kTwoPi}});
      EXPECT_LE(std::abs(f0 - f1), 1e-12) << e.name;
    }
  }
}

TEST(Catalog, FibreHessianNonsingularAtOracleCriticalPoints) {
  std::mt19937_64 rng(21);
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    for (int i = 0; i < 10; ++i) {
      const AngleVec th = random_angles(rng, 1);
      for (const auto& cp : oracle_critical_points(p, th, 1 << 12)) {
        EXPECT_FALSE(analyze_hessian(p.fibre_hess(BundlePoint{cp.x, th})).singular()) << e.name;
      }
    }
  }
}

TEST(Catalog, ListsFourFamilies) {
  ASSERT_EQ(catalog().size(), 4u);
  EXPECT_EQ(catalog()[0].name, "translation");
  EXPECT_EQ(catalog()[3].name, "two-harmonic");
}

TEST(Catalog, ParameterHandling) {
  EXPECT_EQ(make_catalog_problem("competing-wells").parameters.at("coupling"), 0.5);
  EXPECT_EQ(make_catalog_problem("competing-wells", {{"coupling", 1.0}}).parameters.at("coupling"), 1.0);
  EXPECT_THROW(make_catalog_problem("competing-wells", {{"bogus", 1.0}}), Error);
  EXPECT_THROW(make_catalog_problem("competing-wells", {{"coupling", 5.0}}), Error);
  EXPECT_THROW(make_catalog_problem("no-such-problem"), Error);
}

TEST(CountingProblem, CountsEachCallback) {
  const auto p = make_catalog_problem("translation");
  CountingProblem c(p);
  const BundlePoint q{AngleVec{0.3}, AngleVec{0.1}};
  c.value(q);
  c.value(q);
  c.fibre_grad(q);
  c.fibre_hess(q);
  mixed_partial_of(c, q);
  EXPECT_EQ(c.counts().value, 2u);
  EXPECT_EQ(c.counts().grad, 1u);
  EXPECT_EQ(c.counts().hess, 1u);
  EXPECT_EQ(c.counts().mixed, 1u);
}
