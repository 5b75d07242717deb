#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fibreopt/catalog.hpp"
#include "fibreopt/newton.hpp"
#include "fibreopt/oracle.hpp"
#include "test_support.hpp"

using namespace fibreopt;

namespace {

// h(x) = x^2 + x^3 in chart coordinates, critical point at the origin.
double cubic_d1(double x) { return 2.0 * x + 3.0 * x * x; }
double cubic_d2(double x) { return 2.0 + 6.0 * x; }

double cubic_newton(double x) {
  const Vector dx = newton_displacement(Vector::Constant(1, cubic_d1(x)), Matrix::Constant(1, 1, cubic_d2(x)));
  return x + dx(0);
}

// Composite Simpson rule with 10^4 panels: independent of the Gauss-Legendre
// rule inside the library.
double simpson_average_cubic_hessian(double x) {
  const int n = 10000;
  double acc = cubic_d2(0.0) + cubic_d2(x);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * cubic_d2(x * i / n);
  return acc / (3.0 * n);
}

}  // namespace

TEST(NewtonStep, CubicChart) {
  EXPECT_NEAR(cubic_newton(0.1), 0.03 / 2.6, 1e-16);
  EXPECT_NEAR(cubic_newton(0.1), 0.011538461538461538, 1e-17);
}

TEST(NewtonStep, QuadraticIsExactInOneStep) {
  for (double x : {-3.0, -0.5, 0.25, 7.0}) {
    const Vector dx = newton_displacement(Vector::Constant(1, 2.0 * x), Matrix::Constant(1, 1, 2.0));
    EXPECT_EQ(x + dx(0), 0.0);
  }
}

TEST(NewtonStep, FixedPointAtCriticalPoint) {
  const auto p = make_catalog_problem("translation");
  const BundlePoint q{AngleVec{1.0}, AngleVec{1.0}};
  const BundlePoint next = newton_step(p, q);
  EXPECT_EQ(next.x, q.x);
  EXPECT_EQ(next.theta, q.theta);
}

TEST(NewtonStep, WrapsAndKeepsBase) {
  const auto p = make_catalog_problem("translation");
  const BundlePoint next = newton_step(p, BundlePoint{AngleVec{0.1}, AngleVec{6.2}});
  EXPECT_GE(next.x[0], 0.0);
  EXPECT_LT(next.x[0], kTwoPi);
  EXPECT_EQ(next.theta[0], 6.2);
}

TEST(NewtonStep, SingularHessianIsDegenerate) {
  const auto p = make_catalog_problem("translation");
  try {
    newton_step(p, BundlePoint{AngleVec{kPi / 2}, AngleVec{0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_critical_point);
  }
}

TEST(NewtonPolish, TranslationConvergesQuickly) {
  const auto p = make_catalog_problem("translation");
  const NewtonReport r = newton_polish(p, BundlePoint{AngleVec{1.3}, AngleVec{1.0}}, 1e-10, 50);
  ASSERT_TRUE(r.converged);
  EXPECT_LE(r.iterations(), 6);
  EXPECT_NEAR(r.final_point.x[0], 1.0, 1e-10);
  EXPECT_LE(r.final_grad_norm, 1e-10);
  EXPECT_TRUE(r.halving_held());
}

TEST(NewtonPolish, ZeroIterationsAtExactMinimum) {
  const auto p = make_catalog_problem("translation");
  const NewtonReport r = newton_polish(p, BundlePoint{AngleVec{0.5}, AngleVec{0.5}}, 1e-10, 50);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations(), 0);
}

TEST(NewtonPolish, CompetingWellsFindsMinimumAtPi) {
  const auto p = make_catalog_problem("competing-wells");
  const NewtonReport r = newton_polish(p, BundlePoint{AngleVec{kPi + 0.2}, AngleVec{0.0}}, 1e-10, 50);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.final_point.x[0], kPi, 1e-10);
  const auto oracle = oracle_fibre_minimum(p, AngleVec{0.0}, 1 << 14);
  ASSERT_EQ(oracle.minimizers.size(), 1u);
  EXPECT_NEAR(oracle.minimizers[0][0], kPi, 1e-9);
}

TEST(NewtonPolish, NonFiniteProblemIsReported) {
  ProblemDefinition p = make_catalog_problem("translation");
  p.fibre_grad = [](const BundlePoint&) { return Vector::Constant(1, NAN).eval(); };
  try {
    newton_polish(p, BundlePoint{AngleVec{0.3}, AngleVec{0.0}}, 1e-10, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_problem);
  }
}

TEST(NewtonPolish, ReportsNonConvergence) {
  const auto p = make_catalog_problem("translation");
  const NewtonReport r = newton_polish(p, BundlePoint{AngleVec{1.3}, AngleVec{1.0}}, 1e-10, 1);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations(), 1);
}

TEST(CertifiedRadius1d, Examples) {
  EXPECT_DOUBLE_EQ(certified_radius_1d(2.0, 6.0).rho, 1.0 / 6.0);
  EXPECT_TRUE(certified_radius_1d(2.0, 0.0).infinite());
  EXPECT_EQ(certified_radius_1d(4.0, 1.0).rho, 2.0);
  EXPECT_EQ(certified_radius_1d(4.0, 1.0).method, RadiusMethod::third_derivative_1d);
}

TEST(CertifiedRadius1d, RejectsDegenerate) {
  try {
    certified_radius_1d(0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::degenerate_critical_point);
  }
}

TEST(CertifiedRadiusNd, Examples) {
  EXPECT_DOUBLE_EQ(certified_radius_nd(0.5, 6.0).rho, 1.0 / 6.0);
  EXPECT_EQ(certified_radius_nd(1.0, 1.0).rho, 0.5);
  EXPECT_TRUE(certified_radius_nd(3.7, 0.0).infinite());
  EXPECT_EQ(certified_radius_nd(3.7, 0.0).clamped(), kPi);
}

TEST(CertifiedRadiusNd, RejectsNonPositiveNorm) {
  try {
    certified_radius_nd(0.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_input);
  }
}

TEST(CertifiedRadius, OneDimensionalAgreesWithGeneral) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 1000; ++i) {
    const double h2 = 0.01 + 10.0 * uniform01(rng);
    const double alpha = 10.0 * uniform01(rng);
    EXPECT_DOUBLE_EQ(certified_radius_1d(h2, alpha).rho, certified_radius_nd(1.0 / h2, alpha).rho);
  }
}

TEST(AveragedHessianTest, Examples) {
  const Matrix a = Matrix::Constant(1, 1, 3.0);
  const NormTest same = averaged_hessian_test(a, a);
  EXPECT_TRUE(same.passes);
  EXPECT_EQ(same.value, 0.0);

  // Hbar_x = 2 + 3x for the cubic.
  const NormTest in = averaged_hessian_test(Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 2.5));
  EXPECT_TRUE(in.passes);
  EXPECT_NEAR(in.value, 1.0 / 6.0, 1e-15);

  const NormTest out = averaged_hessian_test(Matrix::Constant(1, 1, 0.8), Matrix::Constant(1, 1, 1.4));
  EXPECT_FALSE(out.passes);
  EXPECT_NEAR(out.value, 0.75, 1e-15);
}

TEST(AveragedHessianTest, SingularIsDegenerate) {
  EXPECT_THROW(averaged_hessian_test(Matrix::Zero(2, 2), Matrix::Identity(2, 2)), Error);
}

TEST(AveragedHessian, GaussLegendreMatchesClosedForm) {
  for (double x : {-0.2, 1.0 / 6.0, 0.4}) {
    const Matrix hb = averaged_hessian([&](double s) { return Matrix::Constant(1, 1, cubic_d2(s * x)); });
    EXPECT_NEAR(hb(0, 0), 2.0 + 3.0 * x, 1e-14);
    EXPECT_NEAR(hb(0, 0), simpson_average_cubic_hessian(x), 1e-12);
  }
}

TEST(AveragedHessianTest, PassingImpliesHalvingStep) {
  std::mt19937_64 rng(23);
  int passed = 0;
  for (int i = 0; i < 2000; ++i) {
    const double x = 0.6 * (uniform01(rng) - 0.5);
    if (std::abs(1.0 + 3.0 * x) < 1e-3) continue;
    const NormTest t = averaged_hessian_test(Matrix::Constant(1, 1, cubic_d2(x)),
                                             Matrix::Constant(1, 1, simpson_average_cubic_hessian(x)));
    if (!t.passes) continue;
    ++passed;
    EXPECT_LE(std::abs(cubic_newton(x)), 0.5 * std::abs(x) + 1e-15) << x;
  }
  EXPECT_GT(passed, 500);
}

TEST(HessianPerturbationBound, Examples) {
  EXPECT_NEAR(hessian_perturbation_bound(0.5, 1.0, 0.4), 0.4, 1e-15);
  EXPECT_EQ(hessian_perturbation_bound(2.0, 0.0, 0.0), 0.0);
  EXPECT_NEAR(hessian_perturbation_bound(1.0, 0.9999, 0.1), 1000.0, 1e-6);
}

TEST(HessianPerturbationBound, InapplicableBeyondMargin) {
  try {
    hessian_perturbation_bound(1.0, 1.0, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::bound_inapplicable);
  }
}

TEST(HessianPerturbationBound, DominatesTrueNormOnCubic) {
  // H0 = 2; ||Hx - H0|| = 6|x|; ||Hbar - Hx|| = 3|x|.
  for (double x : {-0.15, -0.05, 0.02, 0.1, 0.15}) {
    const double bound = hessian_perturbation_bound(0.5, 6.0 * std::abs(x), 3.0 * std::abs(x));
    const double actual = averaged_hessian_test(Matrix::Constant(1, 1, cubic_d2(x)),
                                                Matrix::Constant(1, 1, 2.0 + 3.0 * x)).value;
    EXPECT_GE(bound, actual - 1e-15) << x;
  }
}

TEST(NewtonDerivativeTest, Examples) {
  // At x = -(3 - sqrt 6)/9 the exact value of |h' h''' / h''^2| is 1/4;
  // see the cubic derivation in test CubicThreshold below.
  const double xb = -(3.0 - std::sqrt(6.0)) / 9.0;
  const NormTest b = newton_derivative_test_1d(cubic_d1(xb), cubic_d2(xb), 6.0);
  EXPECT_NEAR(b.value, 0.25, 1e-14);
  EXPECT_TRUE(b.passes);

  const NormTest zero = newton_derivative_test_1d(0.0, 2.0, 6.0);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_TRUE(zero.passes);

  const NormTest mid = newton_derivative_test_1d(cubic_d1(0.1), cubic_d2(0.1), 6.0);
  EXPECT_NEAR(mid.value, 0.23 * 6.0 / (2.6 * 2.6), 1e-15);
  EXPECT_NEAR(mid.value, 0.20414201183431951, 1e-15);
  EXPECT_TRUE(mid.passes);
}

TEST(NewtonDerivativeTest, CubicThreshold) {
  // 6x(2+3x)/(2+6x)^2 = -1/2 for x < 0  <=>  18x^2 + 12x + 1 = 0,
  // root x = -(2 - sqrt 2)/6. For x > 0 the magnitude stays below 1/2.
  const double xb = -(2.0 - std::sqrt(2.0)) / 6.0;
  EXPECT_NEAR(newton_derivative_test_1d(cubic_d1(xb), cubic_d2(xb), 6.0).value, 0.5, 1e-13);
  for (double x = 0.0; x < 5.0; x += 0.01) {
    EXPECT_TRUE(newton_derivative_test_1d(cubic_d1(x), cubic_d2(x), 6.0).passes) << x;
  }
}

TEST(NewtonDerivativeTest, RejectsZeroCurvature) {
  EXPECT_THROW(newton_derivative_test_1d(1.0, 0.0, 1.0), Error);
}

TEST(HalvingContract, CubicStartsInsideCertifiedRadius) {
  std::mt19937_64 rng(2024);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    double x = (2.0 * uniform01(rng) - 1.0) / 6.0;
    for (int k = 0; k < 8 && x != 0.0; ++k) {
      const double next = cubic_newton(x);
      if (std::abs(next) > 0.5 * std::abs(x) * (1.0 + 1e-12)) ++violations;
      x = next;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(HalvingContract, CatalogCriticalPointsWithEstimatedAlpha) {
  std::mt19937_64 rng(99);
  for (const auto& e : catalog()) {
    const auto p = e.make({});
    const double alpha = estimate_alpha(p, 64);
    for (int trial = 0; trial < 3; ++trial) {
      const AngleVec th = random_angles(rng, 1);
      for (const auto& cp : oracle_critical_points(p, th, 1 << 14)) {
        const BundlePoint star{cp.x, th};
        const double hinv = analyze_hessian(p.fibre_hess(star)).inverse_norm();
        const double rho = certified_radius_nd(hinv, alpha).clamped();
        for (int s = 0; s < 100; ++s) {
          const double offset = rho * (2.0 * uniform01(rng) - 1.0);
          const NewtonReport r = newton_polish(p, BundlePoint{cp.x.shifted(std::vector<double>{offset}), th}, 1e-13, 60);
          ASSERT_TRUE(r.converged) << e.name;
          // distances measured to the oracle point in the same chart
          const double base = r.iterates.front()(0) - offset;
          for (std::size_t k = 0; k + 1 < r.iterates.size(); ++k) {
            const double dk = std::abs(r.iterates[k](0) - base);
            const double dn = std::abs(r.iterates[k + 1](0) - base);
            EXPECT_LE(dn, 0.5 * dk + 1e-12) << e.name << " offset " << offset;
          }
        }
      }
    }
  }
}
