#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "algebras.hpp"
#include "disk.hpp"
#include "errors.hpp"
#include "lie_algebra.hpp"
#include "reduced_dynamics.hpp"
#include "stages.hpp"

namespace sred::config {

using json = nlohmann::json;

/// Parameters and initial data of the disk scenario.
struct DiskSetup {
  disk::DiskParams params;
  double theta = 1.2, phi = 0.0, thetadot = 0.0, phidot = 0.5, eta01 = 3.0;
};

struct Tolerances {
  double max_dev = 1e-6;
  double constraint = 1e-8;
  double energy = 1e-6;
};

struct RunConfig {
  std::string scenario = "generic";
  std::optional<LieAlgebra> algebra;
  std::vector<int> blocks;
  std::optional<Matrix> metric;  // identity when unset
  std::optional<Matrix> mass;    // identity when unset
  std::optional<Matrix> constraint_basis;
  std::optional<Vector> initial;
  DiskSetup disk;
  double h = 1e-3;
  double t_end = 1.0;
  std::optional<double> oracle_h;
  Tolerances tol;
  std::string output;
  std::string source = "<defaults>";
};

namespace detail {

inline ParseError at(const std::string& src, const std::string& where, const std::string& what) {
  return ParseError(src + ": " + where + ": " + what);
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline double number(const json& j, const std::string& src, const std::string& where) {
  if (!j.is_number()) throw at(src, where, "expected a number");
  return j.get<double>();
}

inline Vector vector(const json& j, const std::string& src, const std::string& where) {
  if (!j.is_array()) throw at(src, where, "expected a list of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t k = 0; k < j.size(); ++k) v[static_cast<Eigen::Index>(k)] = number(j[k], src, where + "/" + std::to_string(k));
  return v;
}

/// Row-major list of rows.
inline Matrix matrix(const json& j, const std::string& src, const std::string& where) {
  if (!j.is_array() || j.empty()) throw at(src, where, "expected a nonempty list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Vector row = vector(j[static_cast<size_t>(r)], src, where + "/" + std::to_string(r));
    if (cols < 0) {
      cols = row.size();
      m.resize(rows, cols);
    }
    if (row.size() != cols) throw at(src, where + "/" + std::to_string(r), "ragged matrix row");
    m.row(r) = row.transpose();
  }
  return m;
}

inline int basis_index(const json& j, const std::vector<std::string>& names, const std::string& src,
                       const std::string& where) {
  const int n = static_cast<int>(names.size());
  if (j.is_number_integer()) {
    const int k = j.get<int>();
    if (k < 0 || k >= n) throw at(src, where, "basis index " + std::to_string(k) + " out of range");
    return k;
  }
  if (j.is_string()) {
    for (int k = 0; k < n; ++k)
      if (names[static_cast<size_t>(k)] == j.get<std::string>()) return k;
    throw at(src, where, "unknown basis element '" + j.get<std::string>() + "'");
  }
  throw at(src, where, "expected a basis name or index");
}

}  // namespace detail

inline LieAlgebra builtin_algebra(const std::string& name, const std::string& src = "<builtin>") {
  if (name == "heisenberg" || name == "h3") return algebras::heisenberg();
  if (name == "so3") return algebras::so3();
  if (name == "se2") return algebras::se2();
  if (name.rfind("upper-triangular-", 0) == 0) {
    try {
      return algebras::strictly_upper_triangular(std::stoi(name.substr(17)));
    } catch (const std::exception&) {
    }
  }
  if (name.rfind("abelian", 0) == 0) {
    try {
      return algebras::abelian(std::stoi(name.substr(7)));
    } catch (const std::exception&) {
    }
  }
  throw ParseError(src + ": unknown built-in algebra '" + name + "'");
}

/**
 * Algebra document:
 *   { "basis": ["X", "Y", "Z"],
 *     "brackets": [ { "i": "X", "j": "Y", "result": { "Z": 1.0 } } ] }
 * i precedes j in the basis order; each pair appears at most once.
 */
inline LieAlgebra parse_algebra(const json& j, const std::string& src) {
  if (!j.is_object()) throw detail::at(src, "algebra", "expected an object");
  if (!j.contains("basis") || !j["basis"].is_array() || j["basis"].empty())
    throw detail::at(src, "algebra/basis", "expected a nonempty list of names");
  std::vector<std::string> names;
  for (size_t k = 0; k < j["basis"].size(); ++k) {
    const auto& e = j["basis"][k];
    if (!e.is_string()) throw detail::at(src, "algebra/basis/" + std::to_string(k), "expected a name");
    names.push_back(e.get<std::string>());
  }
  if (std::set<std::string>(names.begin(), names.end()).size() != names.size())
    throw detail::at(src, "algebra/basis", "duplicate basis names");
  std::vector<BracketTerm> terms;
  std::set<std::pair<int, int>> seen;
  const json brackets = j.value("brackets", json::array());
  if (!brackets.is_array()) throw detail::at(src, "algebra/brackets", "expected a list");
  for (size_t r = 0; r < brackets.size(); ++r) {
    const std::string where = "algebra/brackets/" + std::to_string(r);
    const auto& rec = brackets[r];
    if (!rec.is_object() || !rec.contains("i") || !rec.contains("j") || !rec.contains("result"))
      throw detail::at(src, where, "expected {i, j, result}");
    const int i = detail::basis_index(rec["i"], names, src, where + "/i");
    const int jj = detail::basis_index(rec["j"], names, src, where + "/j");
    if (!(i < jj)) throw detail::at(src, where, "record needs i before j in the basis order");
    if (!seen.insert({i, jj}).second) throw detail::at(src, where, "duplicate record for this pair");
    if (!rec["result"].is_object()) throw detail::at(src, where + "/result", "expected {name: coefficient}");
    for (const auto& [key, val] : rec["result"].items()) {
      const int k = detail::basis_index(json(key), names, src, where + "/result");
      terms.push_back({i, jj, k, detail::number(val, src, where + "/result/" + key)});
    }
  }
  return LieAlgebra::from_brackets(std::move(names), terms);
}

inline LieAlgebra load_algebra_file(const std::filesystem::path& path) {
  return parse_algebra(detail::read_json(path), path.string());
}

inline RunConfig defaults_for(const std::string& scenario) {
  RunConfig c;
  c.scenario = scenario;
  if (scenario == "rigid-body") {
    c.algebra = algebras::so3();
    c.blocks = {3};
    c.mass = Vector(Eigen::Vector3d(1.0, 2.0, 3.0)).asDiagonal().toDenseMatrix();
    c.initial = Vector(Eigen::Vector3d(1.0, 0.1, 0.5));
    c.h = 1e-3;
    c.t_end = 10.0;
  } else if (scenario == "disk") {
    c.h = 1e-4;
    c.t_end = 1.0;
  } else if (scenario == "decoupled-test") {
    Vector y0(7);
    y0 << 0.0, 0.0, 0.3, -0.1, 0.5, 0.2, -0.4;
    c.initial = y0;
    c.h = 1e-3;
    c.t_end = 1.0;
  } else if (scenario != "generic") {
    throw ParseError("unknown scenario '" + scenario + "' (expected generic, rigid-body, disk, decoupled-test)");
  }
  return c;
}

/// Builds a RunConfig from a parsed document; relative paths resolve against `base`.
inline RunConfig parse_config(const json& j, const std::string& src, const std::filesystem::path& base) {
  if (!j.is_object()) throw detail::at(src, "/", "expected an object");
  static const std::set<std::string> known = {"scenario", "algebra", "blocks", "metric", "lagrangian", "constraint",
                                              "initial", "disk", "integrator", "tolerances", "output"};
  for (const auto& [key, val] : j.items())
    if (!known.count(key)) throw detail::at(src, key, "unknown key");
  const std::string scenario = j.value("scenario", std::string("generic"));
  RunConfig c;
  try {
    c = defaults_for(scenario);
  } catch (const ParseError& e) {
    throw detail::at(src, "scenario", e.what());
  }
  c.source = src;
  if (j.contains("algebra")) {
    const auto& a = j["algebra"];
    if (a.is_string()) {
      const std::string s = a.get<std::string>();
      const auto path = base / s;
      if (s.find(".json") != std::string::npos) {
        if (!std::filesystem::exists(path)) throw detail::at(src, "algebra", "file " + path.string() + " does not exist");
        c.algebra = load_algebra_file(path);
      } else {
        c.algebra = builtin_algebra(s, src);
      }
    } else {
      c.algebra = parse_algebra(a, src);
    }
  }
  if (j.contains("blocks")) {
    const Vector b = detail::vector(j["blocks"], src, "blocks");
    c.blocks.clear();
    for (Eigen::Index k = 0; k < b.size(); ++k) {
      if (b[k] != std::floor(b[k]) || b[k] < 1) throw detail::at(src, "blocks", "block sizes must be positive integers");
      c.blocks.push_back(static_cast<int>(b[k]));
    }
  }
  if (j.contains("metric")) {
    if (j["metric"].is_string()) {
      if (j["metric"] != "identity") throw detail::at(src, "metric", "expected \"identity\" or a matrix");
      c.metric.reset();
    } else {
      c.metric = detail::matrix(j["metric"], src, "metric");
    }
  }
  if (j.contains("lagrangian")) {
    const auto& l = j["lagrangian"];
    if (l.contains("mass")) c.mass = detail::matrix(l["mass"], src, "lagrangian/mass");
    else if (l.contains("diagonal"))
      c.mass = detail::vector(l["diagonal"], src, "lagrangian/diagonal").asDiagonal().toDenseMatrix();
    else throw detail::at(src, "lagrangian", "expected mass or diagonal");
  }
  if (j.contains("constraint")) {
    const auto& s = j["constraint"];
    if (!s.contains("basis")) throw detail::at(src, "constraint", "expected basis (list of column vectors)");
    c.constraint_basis = detail::matrix(s["basis"], src, "constraint/basis").transpose();
  }
  if (j.contains("initial")) c.initial = detail::vector(j["initial"], src, "initial");
  if (j.contains("disk")) {
    const auto& d = j["disk"];
    if (!d.is_object()) throw detail::at(src, "disk", "expected an object");
    std::map<std::string, double*> fields = {
        {"M", &c.disk.params.M},       {"r", &c.disk.params.r},   {"e", &c.disk.params.e},
        {"I1", &c.disk.params.I1},     {"I3", &c.disk.params.I3}, {"g", &c.disk.params.g},
        {"theta", &c.disk.theta},      {"phi", &c.disk.phi},      {"thetadot", &c.disk.thetadot},
        {"phidot", &c.disk.phidot},    {"eta01", &c.disk.eta01}};
    for (const auto& [key, val] : d.items()) {
      auto it = fields.find(key);
      if (it == fields.end()) throw detail::at(src, "disk/" + key, "unknown key");
      *it->second = detail::number(val, src, "disk/" + key);
    }
  }
  if (j.contains("integrator")) {
    const auto& in = j["integrator"];
    for (const auto& [key, val] : in.items()) {
      if (key == "h") c.h = detail::number(val, src, "integrator/h");
      else if (key == "t_end") c.t_end = detail::number(val, src, "integrator/t_end");
      else if (key == "oracle_h") c.oracle_h = detail::number(val, src, "integrator/oracle_h");
      else throw detail::at(src, "integrator/" + key, "unknown key");
    }
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    for (const auto& [key, val] : t.items()) {
      if (key == "max_dev") c.tol.max_dev = detail::number(val, src, "tolerances/max_dev");
      else if (key == "constraint") c.tol.constraint = detail::number(val, src, "tolerances/constraint");
      else if (key == "energy") c.tol.energy = detail::number(val, src, "tolerances/energy");
      else throw detail::at(src, "tolerances/" + key, "unknown key");
    }
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw detail::at(src, "output", "expected a path");
    c.output = (base / j["output"].get<std::string>()).string();
  }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  const json j = detail::read_json(path);
  return parse_config(j, path.string(), path.parent_path());
}

/// Integrator and dimension checks that do not need the algebra axioms.
inline void check_consistency(const RunConfig& c) {
  const std::string& src = c.source;
  if (!(c.h > 0)) throw detail::at(src, "integrator/h", "must be > 0");
  if (!(c.t_end > 0)) throw detail::at(src, "integrator/t_end", "must be > 0");
  if (c.scenario != "generic" && c.scenario != "rigid-body") return;
  if (!c.algebra) throw detail::at(src, "algebra", "missing");
  const int n = c.algebra->dim();
  int sum = 0;
  for (int b : c.blocks) sum += b;
  if (c.blocks.empty()) throw detail::at(src, "blocks", "missing");
  if (sum != n) throw detail::at(src, "blocks", "sizes sum to " + std::to_string(sum) + ", algebra has dimension " + std::to_string(n));
  if (c.metric && (c.metric->rows() != n || c.metric->cols() != n))
    throw detail::at(src, "metric", "must be " + std::to_string(n) + "x" + std::to_string(n));
  if (c.mass && (c.mass->rows() != n || c.mass->cols() != n))
    throw detail::at(src, "lagrangian", "mass must be " + std::to_string(n) + "x" + std::to_string(n));
  if (c.constraint_basis && c.constraint_basis->rows() != n)
    throw detail::at(src, "constraint/basis", "columns must have length " + std::to_string(n));
  if (c.initial && c.initial->size() != n) throw detail::at(src, "initial", "must have length " + std::to_string(n));
}

/// Fixed 17-significant-digit CSV writer.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& cols) {
    for (size_t k = 0; k < cols.size(); ++k) out_ << (k ? "," : "") << cols[k];
    out_ << '\n';
  }

  void row(const std::vector<double>& vals) {
    char buf[40];
    for (size_t k = 0; k < vals.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", vals[k]);
      out_ << (k ? "," : "") << buf;
    }
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

}  // namespace sred::config
