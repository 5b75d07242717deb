#pragma once

// Newton iteration on a fibre, plus the radius tests that certify a start
// point as an approximate critical point (Newton iterates at least halve
// their distance to the critical point at every step).

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "fibreopt/cost_model.hpp"
#include "fibreopt/linalg.hpp"

namespace fibreopt {

/// Newton displacement -H^{-1} g in chart coordinates.
inline Vector newton_displacement(const Vector& grad, const Matrix& hess) {
  const HessianSpectrum spec = analyze_hessian(hess);
  if (spec.singular()) {
    throw Error(ErrorKind::degenerate_critical_point, "fibre Hessian is singular (condition number above 1e12)");
  }
  if (hess.rows() == 1) return Vector::Constant(1, -grad(0) / hess(0, 0));
  return -hess.ldlt().solve(grad);
}

inline std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector to_eigen(const AngleVec& a) {
  Vector v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i];
  return v;
}

template <CostFamily P>
BundlePoint newton_step(const P& problem, const BundlePoint& point) {
  const Vector g = problem.fibre_grad(point);
  const Matrix h = problem.fibre_hess(point);
  if (!all_finite(g) || !all_finite(h)) {
    throw Error(ErrorKind::invalid_problem, "non-finite derivative");
  }
  const Vector dx = newton_displacement(g, h);
  return BundlePoint{point.x.shifted(to_std(dx)), point.theta};
}

struct NewtonReport {
  // Unwrapped chart coordinates, starting with the initial point.
  std::vector<Vector> iterates;
  bool converged = false;
  double final_grad_norm = std::numeric_limits<double>::infinity();
  BundlePoint final_point;

  int iterations() const { return static_cast<int>(iterates.size()) - 1; }

  /// True when every iterate at least halved its distance to the last one.
  /// `slack` absorbs round-off once the distance reaches machine scale.
  bool halving_held(double slack = 1e-13) const {
    if (iterates.size() < 2) return true;
    const Vector& star = iterates.back();
    for (std::size_t i = 0; i + 1 < iterates.size(); ++i) {
      const double now = (iterates[i] - star).norm();
      const double next = (iterates[i + 1] - star).norm();
      if (next > 0.5 * now + slack) return false;
    }
    return true;
  }
};

template <CostFamily P>
NewtonReport newton_polish(const P& problem, const BundlePoint& start, double tol, int max_iter) {
  NewtonReport report;
  Vector x = to_eigen(start.x);
  BundlePoint point = start;
  report.iterates.push_back(x);
  for (int iter = 0;; ++iter) {
    const Vector g = problem.fibre_grad(point);
    if (!all_finite(g)) throw Error(ErrorKind::invalid_problem, "non-finite fibre gradient");
    report.final_grad_norm = g.norm();
    if (report.final_grad_norm <= tol) {
      report.converged = true;
      break;
    }
    if (iter >= max_iter) break;
    const Matrix h = problem.fibre_hess(point);
    if (!all_finite(h)) throw Error(ErrorKind::invalid_problem, "non-finite fibre Hessian");
    const Vector dx = newton_displacement(g, h);
    if (!all_finite(dx)) throw Error(ErrorKind::invalid_problem, "non-finite Newton step");
    x += dx;
    point.x = AngleVec(to_std(x));
    report.iterates.push_back(x);
  }
  report.final_point = point;
  return report;
}

enum class RadiusMethod { third_derivative_1d, hessian_lipschitz_nd, newton_derivative_1d };

struct CertifiedRadius {
  double rho = std::numeric_limits<double>::infinity();
  RadiusMethod method = RadiusMethod::hessian_lipschitz_nd;

  bool infinite() const { return std::isinf(rho); }
  /// Charts on the torus are valid on geodesic balls of radius pi.
  double clamped(double chart_radius = kPi) const { return std::min(rho, chart_radius); }
};

/// rho = |h''(0)| / (2 alpha) for a scalar critical point.
inline CertifiedRadius certified_radius_1d(double h2_mag, double alpha) {
  if (!(h2_mag > 0.0)) {
    throw Error(ErrorKind::degenerate_critical_point, "second derivative must be nonzero at the critical point");
  }
  if (!(alpha >= 0.0)) throw Error(ErrorKind::invalid_input, "alpha must be nonnegative");
  const double rho = alpha == 0.0 ? std::numeric_limits<double>::infinity() : h2_mag / (2.0 * alpha);
  return {rho, RadiusMethod::third_derivative_1d};
}

/// rho = 1 / (2 alpha ||H0^{-1}||) for a critical point in any dimension.
inline CertifiedRadius certified_radius_nd(double h0_inv_norm, double alpha) {
  if (!(h0_inv_norm > 0.0)) throw Error(ErrorKind::invalid_input, "||H0^{-1}|| must be positive");
  if (!(alpha >= 0.0)) throw Error(ErrorKind::invalid_input, "alpha must be nonnegative");
  const double rho = alpha == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / (2.0 * alpha * h0_inv_norm);
  return {rho, RadiusMethod::hessian_lipschitz_nd};
}

struct NormTest {
  bool passes = false;
  double value = 0.0;
};

/// ||H_x^{-1} Hbar_x - I|| <= 1/2 certifies x (chart centred on the
/// critical point) as an approximate critical point.
inline NormTest averaged_hessian_test(const Matrix& h_x, const Matrix& h_bar) {
  if (h_x.rows() != h_x.cols() || h_bar.rows() != h_x.rows() || h_bar.cols() != h_x.cols()) {
    throw Error(ErrorKind::invalid_input, "averaged_hessian_test: shape mismatch");
  }
  if (analyze_hessian(h_x).singular()) {
    throw Error(ErrorKind::degenerate_critical_point, "H_x is singular");
  }
  const Matrix m = h_x.partialPivLu().solve(h_bar) - Matrix::Identity(h_x.rows(), h_x.cols());
  const double v = operator_norm(m);
  return {v <= 0.5, v};
}

/// Hbar = integral over s in [0,1] of hess_at(s), by 8-point Gauss-Legendre.
template <class HessAt>
Matrix averaged_hessian(HessAt&& hess_at) {
  static constexpr std::array<double, 8> nodes = {
      -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
      0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> weights = {
      0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
      0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  Matrix acc;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    Matrix h = hess_at(0.5 * (nodes[i] + 1.0));
    if (i == 0) acc = Matrix::Zero(h.rows(), h.cols());
    acc += 0.5 * weights[i] * h;
  }
  return acc;
}

/// Upper bound on ||H_x^{-1} Hbar_x - I|| from perturbation sizes:
/// ||Hbar - H_x|| / (||H0^{-1}||^{-1} - ||H_x - H0||).
inline double hessian_perturbation_bound(double h0_inv_norm, double dh_norm, double dbar_norm) {
  if (!(h0_inv_norm > 0.0)) throw Error(ErrorKind::invalid_input, "||H0^{-1}|| must be positive");
  if (!(dh_norm >= 0.0) || !(dbar_norm >= 0.0)) {
    throw Error(ErrorKind::invalid_input, "perturbation norms must be nonnegative");
  }
  const double margin = 1.0 / h0_inv_norm - dh_norm;
  if (!(margin > 0.0)) {
    throw Error(ErrorKind::bound_inapplicable, "||H_x - H0|| must be below ||H0^{-1}||^{-1}");
  }
  return dbar_norm / margin;
}

/// Derivative of the scalar Newton map, |h' h''' / h''^2|; at most 1/2
/// certifies x.
inline NormTest newton_derivative_test_1d(double h1, double h2, double h3) {
  if (h2 == 0.0) throw Error(ErrorKind::degenerate_critical_point, "h'' vanishes");
  const double v = std::abs(h1 * h3 / (h2 * h2));
  return {v <= 0.5, v};
}

}  // namespace fibreopt
