#pragma once

// Run configuration for the command-line tool: one JSON document, with
// command-line flags applied on top.

#include <map>
#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "fibreopt/catalog.hpp"
#include "fibreopt/error.hpp"
#include "fibreopt/query.hpp"
#include "fibreopt/table.hpp"
#include "fibreopt/table_io.hpp"

namespace fibreopt {

struct RunConfig {
  std::string problem = "translation";
  std::map<std::string, double> parameters;
  TableConfig table;
  QueryMode mode = QueryMode::track_all_minima;
  std::string table_in;
  std::string table_out;

  ProblemDefinition make_problem() const { return make_catalog_problem(problem, parameters); }

  void validate() const {
    table.validate();
    if (table.alpha.has_value() != table.beta.has_value()) {
      throw Error(ErrorKind::invalid_config, "alpha and beta must be supplied together");
    }
    (void)make_problem();
  }
};

namespace detail {

template <class T>
T config_value(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::invalid_config, std::string("config key '") + key + "' has the wrong type");
  }
}

inline int config_int(const nlohmann::json& j, const char* key) {
  if (!j.at(key).is_number_integer()) {
    throw Error(ErrorKind::invalid_config, std::string("config key '") + key + "' must be an integer");
  }
  return config_value<int>(j, key);
}

}  // namespace detail

/// Reads a run configuration. Unknown keys are rejected; missing keys keep
/// their defaults. The result is validated.
inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_config, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::invalid_config, "config must be a JSON object");

  static const std::set<std::string> known = {
      "problem", "parameters",  "anchors_per_dim", "fibre_grid_per_dim", "region_grid_per_dim",
      "bounds_grid_per_dim", "tol", "value_tol", "max_newton_iter", "seed", "alpha", "beta",
      "mode", "table_in", "table_out"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.contains(it.key())) throw Error(ErrorKind::invalid_config, "unknown config key '" + it.key() + "'");
  }

  RunConfig c;
  if (j.contains("problem")) c.problem = detail::config_value<std::string>(j, "problem");
  if (j.contains("parameters")) {
    const auto& p = j.at("parameters");
    if (!p.is_object()) throw Error(ErrorKind::invalid_config, "'parameters' must be an object");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!it.value().is_number()) {
        throw Error(ErrorKind::invalid_config, "parameter '" + it.key() + "' must be a number");
      }
      c.parameters[it.key()] = it.value().get<double>();
    }
  }
  if (j.contains("anchors_per_dim")) c.table.anchors_per_dim = detail::config_int(j, "anchors_per_dim");
  if (j.contains("fibre_grid_per_dim")) c.table.fibre_grid_per_dim = detail::config_int(j, "fibre_grid_per_dim");
  if (j.contains("region_grid_per_dim")) c.table.region_grid_per_dim = detail::config_int(j, "region_grid_per_dim");
  if (j.contains("bounds_grid_per_dim")) c.table.bounds_grid_per_dim = detail::config_int(j, "bounds_grid_per_dim");
  if (j.contains("tol")) c.table.tol = detail::config_value<double>(j, "tol");
  if (j.contains("value_tol")) c.table.value_tol = detail::config_value<double>(j, "value_tol");
  if (j.contains("max_newton_iter")) c.table.max_newton_iter = detail::config_int(j, "max_newton_iter");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw Error(ErrorKind::invalid_config, "'seed' must be a nonnegative integer");
    c.table.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("alpha")) c.table.alpha = detail::config_value<double>(j, "alpha");
  if (j.contains("beta")) c.table.beta = detail::config_value<double>(j, "beta");
  if (j.contains("mode")) c.mode = parse_query_mode(detail::config_value<std::string>(j, "mode"));
  if (j.contains("table_in")) c.table_in = detail::config_value<std::string>(j, "table_in");
  if (j.contains("table_out")) c.table_out = detail::config_value<std::string>(j, "table_out");
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::string& path) { return parse_run_config(read_file(path)); }

/// Process exit status for each error kind. 1 is reserved for usage errors
/// and 6 for failed validation runs.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::invalid_config:
    case ErrorKind::invalid_problem:
    case ErrorKind::resolution_too_coarse:
      return 2;
    case ErrorKind::io:
    case ErrorKind::corrupt_table:
    case ErrorKind::unsupported_version:
      return 3;
    case ErrorKind::degenerate_critical_point:
    case ErrorKind::bound_inapplicable:
      return 4;
    case ErrorKind::tracking_failed:
    case ErrorKind::inconsistency:
      return 5;
    case ErrorKind::table_mismatch:
      return 7;
  }
  return 2;
}

inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidationFailed = 6;

}  // namespace fibreopt
