#pragma once

// Canonical text serialisation of PrecomputedTable.
//
// The file is a JSON document with keys in sorted order, two-space
// indentation, and every real written as "%.16e" (17 significant digits),
// so that save -> load -> save is byte-identical. A FNV-1a 64 checksum of
// the document without its "checksum" key is stored alongside.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fibreopt/catalog.hpp"
#include "fibreopt/offline.hpp"
#include "fibreopt/table.hpp"

namespace fibreopt {

using Json = nlohmann::json;

namespace detail {

inline void write_canonical(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  char buf[64];
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += inner;
        out += Json(it.key()).dump();
        out += ": ";
        write_canonical(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      if (j.empty()) {
        out += "[]";
      } else if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write_canonical(j[i], out, indent + 1);
        }
        out += "]";
      } else {
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ",\n";
          out += inner;
          write_canonical(j[i], out, indent + 1);
        }
        out += "\n" + pad + "]";
      }
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) throw Error(ErrorKind::invalid_input, "cannot serialise a non-finite real");
      std::snprintf(buf, sizeof buf, "%.16e", v);
      out += buf;
      return;
    }
    case Json::value_t::number_integer:
      std::snprintf(buf, sizeof buf, "%" PRId64, j.get<std::int64_t>());
      out += buf;
      return;
    case Json::value_t::number_unsigned:
      std::snprintf(buf, sizeof buf, "%" PRIu64, j.get<std::uint64_t>());
      out += buf;
      return;
    default:
      out += j.dump();
      return;
  }
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string checksum_of(const Json& body) {
  std::string text;
  write_canonical(body, text, 0);
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016" PRIx64, fnv1a64(text));
  return buf;
}

inline Json angles_json(const AngleVec& a) {
  Json arr = Json::array();
  for (double c : a) arr.push_back(c);
  return arr;
}

inline AngleVec angles_from(const Json& j, std::size_t dim, const char* what) {
  if (!j.is_array() || j.size() != dim) {
    throw Error(ErrorKind::corrupt_table, std::string(what) + " has the wrong dimension");
  }
  std::vector<double> v;
  for (const auto& e : j) {
    const double c = e.get<double>();
    if (!(c >= 0.0 && c < kTwoPi)) throw Error(ErrorKind::corrupt_table, std::string(what) + " is not in [0, 2pi)");
    v.push_back(c);
  }
  return AngleVec(v);
}

inline bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Table contents without the checksum.
inline Json table_body_json(const PrecomputedTable& t) {
  Json j;
  j["format_version"] = t.format_version;
  Json params = Json::object();
  for (const auto& [k, v] : t.problem_parameters) params[k] = v;
  j["problem"] = {{"name", t.problem_name}, {"parameters", params}};
  j["shape"] = {{"fibre_dim", t.shape.fibre_dim}, {"base_dim", t.shape.base_dim}};
  j["bounds"] = {{"alpha", t.bounds.alpha}, {"beta", t.bounds.beta}, {"source", to_string(t.bounds.source)}};

  Json cfg = {{"anchors_per_dim", t.config.anchors_per_dim},
              {"fibre_grid_per_dim", t.config.fibre_grid_per_dim},
              {"region_grid_per_dim", t.config.region_grid_per_dim},
              {"bounds_grid_per_dim", t.config.bounds_grid_per_dim},
              {"tol", t.config.tol},
              {"value_tol", t.config.value_tol},
              {"max_newton_iter", t.config.max_newton_iter},
              {"seed", t.config.seed}};
  if (t.config.alpha) cfg["alpha"] = *t.config.alpha;
  if (t.config.beta) cfg["beta"] = *t.config.beta;
  j["config"] = cfg;

  Json anchors = Json::array();
  for (const auto& a : t.anchors) anchors.push_back(detail::angles_json(a));
  j["anchors"] = anchors;

  Json records = Json::array();
  for (const auto& r : t.records) {
    records.push_back({{"anchor_index", r.anchor_index},
                       {"x", detail::angles_json(r.x)},
                       {"index", r.index},
                       {"component_id", r.component_id},
                       {"f_value", r.f_value},
                       {"hess_inv_norm", r.hess_inv_norm}});
  }
  j["records"] = records;

  Json comps = Json::array();
  for (const auto& c : t.topology.components) {
    comps.push_back({{"id", c.id}, {"b", c.b}, {"is_min", c.is_min}, {"morse_index", c.morse_index}});
  }
  j["topology"] = {{"components", comps}};

  Json cells = Json::array();
  for (const auto& cell : t.regions.cells) cells.push_back(cell);
  j["regions"] = {{"grid_per_dim", t.regions.grid_per_dim}, {"cells", cells}};
  return j;
}

inline std::string serialize_table(const PrecomputedTable& t) {
  Json j = table_body_json(t);
  j["checksum"] = detail::checksum_of(j);
  std::string out;
  detail::write_canonical(j, out, 0);
  out += "\n";
  return out;
}

/// Re-evaluates every stored record against `problem` and checks the
/// structural invariants. Throws corrupt_table on the first violation.
inline void validate_table(const PrecomputedTable& t, const ProblemDefinition& problem) {
  auto corrupt = [](const std::string& msg) { throw Error(ErrorKind::corrupt_table, msg); };
  if (!t.matches(problem)) {
    throw Error(ErrorKind::table_mismatch, "table does not belong to problem '" + problem.name + "'");
  }
  try {
    t.config.validate();
  } catch (const Error& e) {
    corrupt(std::string("stored config is invalid: ") + e.what());
  }
  if (!(t.bounds.alpha >= 0.0) || !(t.bounds.beta >= 0.0)) corrupt("derivative bounds must be nonnegative");
  if (t.anchors != select_anchors(t.shape, t.config.anchors_per_dim)) corrupt("anchors do not form the configured grid");

  const auto by_anchor = detail::group_by_anchor(t.records, t.anchors.size());
  const std::size_t per_anchor = by_anchor.at(0).size();
  if (per_anchor == 0) corrupt("no records");
  for (const auto& group : by_anchor) {
    if (group.size() != per_anchor) corrupt("anchors carry different numbers of records");
  }

  const auto& comps = t.topology.components;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].id != static_cast<int>(i)) corrupt("component ids are not 0..n-1");
    if (comps[i].is_min != (comps[i].morse_index == 0)) corrupt("component min flag disagrees with its index");
    if (comps[i].b < 1) corrupt("component with b < 1");
  }
  if (t.topology.points_per_fibre() != static_cast<int>(per_anchor)) {
    corrupt("sum of b over components differs from the per-fibre count");
  }

  for (std::size_t a = 0; a < by_anchor.size(); ++a) {
    std::vector<int> count(comps.size(), 0);
    for (std::size_t r : by_anchor[a]) {
      const auto& rec = t.records[r];
      if (rec.component_id < 0 || rec.component_id >= static_cast<int>(comps.size())) corrupt("bad component id");
      if (rec.index != comps[rec.component_id].morse_index) corrupt("Morse index is not constant on a component");
      ++count[rec.component_id];
      const BundlePoint p{rec.x, t.anchors[a]};
      const double gn = problem.fibre_grad(p).norm();
      if (!(gn <= t.config.tol)) {
        corrupt("record " + std::to_string(r) + " is not a critical point (gradient norm " + std::to_string(gn) + ")");
      }
      const Matrix h = problem.fibre_hess(p);
      int index = -1;
      try {
        index = classify_index(h);
      } catch (const Error&) {
        corrupt("record " + std::to_string(r) + " is degenerate");
      }
      if (index != rec.index) corrupt("record " + std::to_string(r) + " has the wrong Morse index");
      if (!detail::close_rel(problem.value(p), rec.f_value, 1e-12)) corrupt("record " + std::to_string(r) + " f_value");
      if (!detail::close_rel(analyze_hessian(h).inverse_norm(), rec.hess_inv_norm, 1e-9)) {
        corrupt("record " + std::to_string(r) + " hess_inv_norm");
      }
    }
    for (const auto& c : comps) {
      if (count[c.id] != c.b) corrupt("component " + std::to_string(c.id) + " meets an anchor fibre the wrong number of times");
    }
  }

  std::size_t cells = 1;
  for (int d = 0; d < t.shape.base_dim; ++d) cells *= static_cast<std::size_t>(t.regions.grid_per_dim);
  if (t.regions.grid_per_dim != t.config.region_grid_per_dim || t.regions.cells.size() != cells) {
    corrupt("region map has the wrong size");
  }
  for (const auto& cell : t.regions.cells) {
    if (cell.empty()) corrupt("region cell lists no component");
    for (std::size_t i = 0; i < cell.size(); ++i) {
      if (cell[i] < 0 || cell[i] >= static_cast<int>(comps.size()) || !comps[cell[i]].is_min) {
        corrupt("region cell lists a component that is not a min-component");
      }
      if (i && cell[i] <= cell[i - 1]) corrupt("region cell ids are not sorted and unique");
    }
  }
}

/// Parses a table without checking it against a problem. Version and
/// checksum are verified.
inline PrecomputedTable parse_table_unchecked(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::corrupt_table, std::string("not a valid table document: ") + e.what());
  }
  if (!j.is_object() || !j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw Error(ErrorKind::corrupt_table, "missing format_version");
  }
  const int version = j["format_version"].get<int>();
  if (version != kTableFormatVersion) {
    throw Error(ErrorKind::unsupported_version, "table format_version " + std::to_string(version) +
                                                    " is not supported (expected " +
                                                    std::to_string(kTableFormatVersion) + ")");
  }
  if (!j.contains("checksum") || !j["checksum"].is_string()) throw Error(ErrorKind::corrupt_table, "missing checksum");
  const std::string stored = j["checksum"].get<std::string>();
  Json body = j;
  body.erase("checksum");
  if (detail::checksum_of(body) != stored) throw Error(ErrorKind::corrupt_table, "checksum mismatch");

  PrecomputedTable t;
  try {
    static const std::set<std::string> top = {"anchors", "bounds",  "checksum", "config",  "format_version",
                                              "problem", "records", "regions",  "shape", "topology"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!top.contains(it.key())) throw Error(ErrorKind::corrupt_table, "unknown key '" + it.key() + "'");
    }
    t.format_version = version;
    t.problem_name = j.at("problem").at("name").get<std::string>();
    for (auto it = j.at("problem").at("parameters").begin(); it != j.at("problem").at("parameters").end(); ++it) {
      t.problem_parameters[it.key()] = it.value().get<double>();
    }
    t.shape = BundleShape(j.at("shape").at("fibre_dim").get<int>(), j.at("shape").at("base_dim").get<int>());
    const auto& b = j.at("bounds");
    const std::string source = b.at("source").get<std::string>();
    if (source != "estimated" && source != "user-supplied") throw Error(ErrorKind::corrupt_table, "bad bounds source");
    t.bounds = {b.at("alpha").get<double>(), b.at("beta").get<double>(),
                source == "estimated" ? BoundsSource::estimated : BoundsSource::user_supplied};

    const auto& c = j.at("config");
    t.config.anchors_per_dim = c.at("anchors_per_dim").get<int>();
    t.config.fibre_grid_per_dim = c.at("fibre_grid_per_dim").get<int>();
    t.config.region_grid_per_dim = c.at("region_grid_per_dim").get<int>();
    t.config.bounds_grid_per_dim = c.at("bounds_grid_per_dim").get<int>();
    t.config.tol = c.at("tol").get<double>();
    t.config.value_tol = c.at("value_tol").get<double>();
    t.config.max_newton_iter = c.at("max_newton_iter").get<int>();
    t.config.seed = c.at("seed").get<std::uint64_t>();
    if (c.contains("alpha")) t.config.alpha = c.at("alpha").get<double>();
    if (c.contains("beta")) t.config.beta = c.at("beta").get<double>();

    const auto m = static_cast<std::size_t>(t.shape.base_dim);
    const auto k = static_cast<std::size_t>(t.shape.fibre_dim);
    for (const auto& a : j.at("anchors")) t.anchors.push_back(detail::angles_from(a, m, "anchor"));
    for (const auto& r : j.at("records")) {
      CriticalPointRecord rec;
      rec.anchor_index = r.at("anchor_index").get<int>();
      rec.x = detail::angles_from(r.at("x"), k, "record x");
      rec.index = r.at("index").get<int>();
      rec.component_id = r.at("component_id").get<int>();
      rec.f_value = r.at("f_value").get<double>();
      rec.hess_inv_norm = r.at("hess_inv_norm").get<double>();
      t.records.push_back(rec);
    }
    for (const auto& cj : j.at("topology").at("components")) {
      t.topology.components.push_back({cj.at("id").get<int>(), cj.at("b").get<int>(), cj.at("is_min").get<bool>(),
                                       cj.at("morse_index").get<int>()});
    }
    t.regions.grid_per_dim = j.at("regions").at("grid_per_dim").get<int>();
    t.regions.base_dim = t.shape.base_dim;
    for (const auto& cell : j.at("regions").at("cells")) t.regions.cells.push_back(cell.get<std::vector<int>>());
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::corrupt_table, std::string("malformed table: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::corrupt_table) throw;
    throw Error(ErrorKind::corrupt_table, e.what());
  }
  return t;
}

inline PrecomputedTable parse_table(const std::string& text, const ProblemDefinition& problem) {
  PrecomputedTable t = parse_table_unchecked(text);
  validate_table(t, problem);
  return t;
}

/// Problem recorded in the table, rebuilt from the catalog.
inline ProblemDefinition catalog_problem_for(const PrecomputedTable& t) {
  try {
    return make_catalog_problem(t.problem_name, t.problem_parameters);
  } catch (const Error& e) {
    throw Error(ErrorKind::table_mismatch, std::string("table problem is not in the catalog: ") + e.what());
  }
}

inline void save_table(const PrecomputedTable& t, const std::string& path) {
  const std::string text = serialize_table(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline PrecomputedTable load_table(const std::string& path, const ProblemDefinition& problem) {
  return parse_table(read_file(path), problem);
}

/// Loads a table built for a catalog problem.
inline PrecomputedTable load_table(const std::string& path) {
  PrecomputedTable t = parse_table_unchecked(read_file(path));
  validate_table(t, catalog_problem_for(t));
  return t;
}

}  // namespace fibreopt
