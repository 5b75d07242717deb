#pragma once

// Built-in cost families, all with one fibre angle x and one parameter
// angle theta.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fibreopt/cost_model.hpp"

namespace fibreopt {

struct CatalogEntry {
  std::string name;
  std::string formula;
  std::string notes;
  std::map<std::string, double> default_parameters;
  std::function<ProblemDefinition(const std::map<std::string, double>&)> make;
};

namespace detail {

inline Vector scalar_vec(double v) { return Vector::Constant(1, v); }
inline Matrix scalar_mat(double v) { return Matrix::Constant(1, 1, v); }

inline std::map<std::string, double> merge_parameters(const std::string& name,
                                                      const std::map<std::string, double>& defaults,
                                                      const std::map<std::string, double>& given) {
  std::map<std::string, double> out(defaults);
  for (const auto& [key, val] : given) {
    if (!defaults.contains(key)) {
      throw Error(ErrorKind::invalid_config, "problem '" + name + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(val)) {
      throw Error(ErrorKind::invalid_config, "parameter '" + key + "' must be finite");
    }
    out[key] = val;
  }
  return out;
}

inline ProblemDefinition make_translation(const std::map<std::string, double>& given) {
  ProblemDefinition p;
  p.name = "translation";
  p.parameters = merge_parameters(p.name, {}, given);
  p.shape = BundleShape(1, 1);
  p.value = [](const BundlePoint& q) { return -std::cos(q.x[0] - q.theta[0]); };
  p.fibre_grad = [](const BundlePoint& q) { return scalar_vec(std::sin(q.x[0] - q.theta[0])); };
  p.fibre_hess = [](const BundlePoint& q) { return scalar_mat(std::cos(q.x[0] - q.theta[0])); };
  p.mixed_partial = [](const BundlePoint& q) { return scalar_mat(-std::cos(q.x[0] - q.theta[0])); };
  return p;
}

inline ProblemDefinition make_winding(const std::map<std::string, double>& given) {
  ProblemDefinition p;
  p.name = "winding";
  p.parameters = merge_parameters(p.name, {}, given);
  p.shape = BundleShape(1, 1);
  p.value = [](const BundlePoint& q) { return std::cos(2.0 * q.x[0] - q.theta[0]); };
  p.fibre_grad = [](const BundlePoint& q) { return scalar_vec(-2.0 * std::sin(2.0 * q.x[0] - q.theta[0])); };
  p.fibre_hess = [](const BundlePoint& q) { return scalar_mat(-4.0 * std::cos(2.0 * q.x[0] - q.theta[0])); };
  p.mixed_partial = [](const BundlePoint& q) { return scalar_mat(2.0 * std::cos(2.0 * q.x[0] - q.theta[0])); };
  return p;
}

inline ProblemDefinition make_competing_wells(const std::map<std::string, double>& given) {
  ProblemDefinition p;
  p.name = "competing-wells";
  p.parameters = merge_parameters(p.name, {{"coupling", 0.5}}, given);
  const double c = p.parameters.at("coupling");
  if (!(std::abs(c) < 4.0)) {
    throw Error(ErrorKind::invalid_config, "competing-wells coupling must satisfy |c| < 4");
  }
  p.shape = BundleShape(1, 1);
  p.value = [c](const BundlePoint& q) {
    return -std::cos(2.0 * q.x[0]) + c * std::cos(q.theta[0]) * std::cos(q.x[0]);
  };
  p.fibre_grad = [c](const BundlePoint& q) {
    return scalar_vec(2.0 * std::sin(2.0 * q.x[0]) - c * std::cos(q.theta[0]) * std::sin(q.x[0]));
  };
  p.fibre_hess = [c](const BundlePoint& q) {
    return scalar_mat(4.0 * std::cos(2.0 * q.x[0]) - c * std::cos(q.theta[0]) * std::cos(q.x[0]));
  };
  p.mixed_partial = [c](const BundlePoint& q) {
    return scalar_mat(c * std::sin(q.theta[0]) * std::sin(q.x[0]));
  };
  return p;
}

inline ProblemDefinition make_two_harmonic(const std::map<std::string, double>& given) {
  ProblemDefinition p;
  p.name = "two-harmonic";
  p.parameters = merge_parameters(p.name, {{"harmonic", 0.2}}, given);
  const double a = p.parameters.at("harmonic");
  if (!(std::abs(a) < 0.25)) {
    throw Error(ErrorKind::invalid_config, "two-harmonic harmonic weight must satisfy |a| < 0.25");
  }
  p.shape = BundleShape(1, 1);
  p.value = [a](const BundlePoint& q) {
    return -std::cos(q.x[0] - q.theta[0]) + a * std::cos(2.0 * q.x[0]);
  };
  p.fibre_grad = [a](const BundlePoint& q) {
    return scalar_vec(std::sin(q.x[0] - q.theta[0]) - 2.0 * a * std::sin(2.0 * q.x[0]));
  };
  p.fibre_hess = [a](const BundlePoint& q) {
    return scalar_mat(std::cos(q.x[0] - q.theta[0]) - 4.0 * a * std::cos(2.0 * q.x[0]));
  };
  p.mixed_partial = [](const BundlePoint& q) { return scalar_mat(-std::cos(q.x[0] - q.theta[0])); };
  return p;
}

}  // namespace detail

inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"translation", "f(x;t) = -cos(x - t)",
       "minimum x = t, maximum x = t + pi; 2 critical circles, b = 1 each", {}, detail::make_translation},
      {"winding", "f(x;t) = cos(2x - t)",
       "critical curves x = t/2 + j*pi/2; 2 circles, b = 2 each, minima tie on every fibre", {},
       detail::make_winding},
      {"competing-wells", "f(x;t) = -cos(2x) + c*cos(t)*cos(x)",
       "minima at x = 0 and x = pi with f(0) - f(pi) = 2c*cos(t); 4 circles, b = 1 each", {{"coupling", 0.5}},
       detail::make_competing_wells},
      {"two-harmonic", "f(x;t) = -cos(x - t) + a*cos(2x)",
       "one minimum and one maximum per fibre; 2 circles, b = 1 each", {{"harmonic", 0.2}},
       detail::make_two_harmonic},
  };
  return entries;
}

inline const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return e;
  }
  throw Error(ErrorKind::invalid_config, "unknown catalog problem '" + name + "'");
}

inline ProblemDefinition make_catalog_problem(const std::string& name,
                                              const std::map<std::string, double>& parameters = {}) {
  return catalog_entry(name).make(parameters);
}

}  // namespace fibreopt
