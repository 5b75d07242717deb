#pragma once

// Angle arithmetic on the flat torus and points of the trivial bundle
// T^k x T^m. Angles are kept canonical in [0, 2pi); parameter paths carry
// an unwrapped displacement so that tracking never sees a branch jump.

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fibreopt/error.hpp"

namespace fibreopt {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPi = std::numbers::pi;

/// Reduce one angle into [0, 2pi).
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) {
    throw Error(ErrorKind::invalid_input, "non-finite angle");
  }
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round back up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// A vector of canonical angles. Dimension is fixed at construction.
class AngleVec {
 public:
  AngleVec() = default;
  explicit AngleVec(std::span<const double> raw) : coords_(raw.begin(), raw.end()) {
    for (double& c : coords_) c = wrap_angle(c);
  }
  AngleVec(std::initializer_list<double> raw) : coords_(raw) {
    for (double& c : coords_) c = wrap_angle(c);
  }
  explicit AngleVec(const std::vector<double>& raw)
      : AngleVec(std::span<const double>(raw.data(), raw.size())) {}

  static AngleVec zeros(std::size_t dim) { return AngleVec(std::vector<double>(dim, 0.0)); }

  std::size_t size() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const noexcept { return coords_; }
  auto begin() const noexcept { return coords_.begin(); }
  auto end() const noexcept { return coords_.end(); }

  /// wrap(this + displacement)
  AngleVec shifted(std::span<const double> displacement) const {
    require_dim(displacement.size());
    std::vector<double> out(coords_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += displacement[i];
    return AngleVec(out);
  }

  bool operator==(const AngleVec&) const = default;
  auto operator<=>(const AngleVec&) const = default;

 private:
  void require_dim(std::size_t n) const {
    if (n != coords_.size()) {
      throw Error(ErrorKind::invalid_input, "angle vector dimension mismatch");
    }
  }

  std::vector<double> coords_;
};

inline AngleVec wrap(std::span<const double> angles) { return AngleVec(angles); }
inline AngleVec wrap(const std::vector<double>& angles) { return AngleVec(angles); }

struct BundleShape {
  int fibre_dim = 1;
  int base_dim = 1;

  BundleShape() = default;
  BundleShape(int k, int m) : fibre_dim(k), base_dim(m) {
    if (k < 1 || m < 1) {
      throw Error(ErrorKind::invalid_input, "bundle dimensions must be positive");
    }
  }

  bool operator==(const BundleShape&) const = default;
};

struct BundlePoint {
  AngleVec x;      // fibre coordinates, dim k
  AngleVec theta;  // base coordinates, dim m

  bool matches(const BundleShape& shape) const {
    return x.size() == static_cast<std::size_t>(shape.fibre_dim) &&
           theta.size() == static_cast<std::size_t>(shape.base_dim);
  }
};

/// Minimal-length displacement d with wrap(from + d) = to; each d_i in
/// (-pi, pi], antipodal ties resolve to +pi.
inline std::vector<double> geodesic_delta(const AngleVec& from, const AngleVec& to) {
  if (from.size() != to.size()) {
    throw Error(ErrorKind::invalid_input, "geodesic_delta: dimension mismatch");
  }
  std::vector<double> d(from.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double di = to[i] - from[i];
    if (di > kPi) di -= kTwoPi;
    if (di <= -kPi) di += kTwoPi;
    d[i] = di;
  }
  return d;
}

inline double euclidean_norm(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline double geodesic_distance(const AngleVec& a, const AngleVec& b) {
  const auto d = geodesic_delta(a, b);
  return euclidean_norm(d);
}

/// Straight path in the universal cover of the base torus.
class ParameterPath {
 public:
  ParameterPath(AngleVec start, std::vector<double> delta)
      : start_(std::move(start)), delta_(std::move(delta)) {
    if (delta_.size() != start_.size()) {
      throw Error(ErrorKind::invalid_input, "path delta dimension mismatch");
    }
    for (double d : delta_) {
      if (!std::isfinite(d)) throw Error(ErrorKind::invalid_input, "non-finite path delta");
    }
    length_ = euclidean_norm(delta_);
  }

  const AngleVec& start() const noexcept { return start_; }
  const std::vector<double>& delta() const noexcept { return delta_; }
  double length() const noexcept { return length_; }
  std::size_t dim() const noexcept { return start_.size(); }

  AngleVec point_at(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) {
      throw Error(ErrorKind::invalid_input, "path parameter outside [0, 1]");
    }
    std::vector<double> out(start_.coords());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t * delta_[i];
    return AngleVec(out);
  }

 private:
  AngleVec start_;
  std::vector<double> delta_;
  double length_ = 0.0;
};

inline AngleVec path_point(const ParameterPath& path, double t) { return path.point_at(t); }

inline std::string format_angles(const AngleVec& v, int precision = 10) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v[i]);
    if (i) out += ',';
    out += buf;
  }
  return out;
}

}  // namespace fibreopt
