#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fibreopt/error.hpp"

namespace fibreopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Condition numbers above this mark a Hessian as singular.
inline constexpr double kMaxConditionNumber = 1e12;

/// Operator (spectral) norm: largest singular value.
inline double operator_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline Vector symmetric_eigenvalues(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Spectral facts about a symmetric Hessian that the Newton kernel and the
/// index classifier both need.
struct HessianSpectrum {
  double max_abs = 0.0;
  double min_abs = 0.0;
  int negative = 0;

  /// Curvature is measured against unit scale so that a 1x1 Hessian near
  /// zero still registers as ill-conditioned.
  double condition() const {
    if (min_abs == 0.0) return std::numeric_limits<double>::infinity();
    return std::max(max_abs, 1.0) / min_abs;
  }
  double inverse_norm() const {
    return min_abs == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / min_abs;
  }
  bool singular() const { return !(condition() <= kMaxConditionNumber); }
};

inline HessianSpectrum analyze_hessian(const Matrix& h) {
  HessianSpectrum s;
  const Vector ev = symmetric_eigenvalues(h);
  s.max_abs = ev.cwiseAbs().maxCoeff();
  s.min_abs = ev.cwiseAbs().minCoeff();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) ++s.negative;
  }
  return s;
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace fibreopt
