#pragma once

// File formats: p-value CSV (column `p`, optional `support_index` and
// `is_null`), supports JSON (array of {"atoms": [...], "cdf": [...]}),
// 2x2 table CSV (columns a,b,c,d), estimator spec JSON, and the report CSVs.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "estimators.hpp"
#include "pvalue_model.hpp"
#include "simulation.hpp"
#include "stat_tests.hpp"

namespace pluginfdr::io {

using nlohmann::json;

/// Shortest round-tripping decimal form (17 significant digits).
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// CSV cell, quoted when it contains a comma or quote.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  if (path.empty() || path == "-") {
    std::cout << contents;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  if (s.empty()) throw InputError("empty value for " + what);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw InputError("cannot parse '" + s + "' as " + what);
  return v;
}

inline long long parse_integer(const std::string& s, const std::string& what) {
  if (s.empty()) throw InputError("empty value for " + what);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw InputError("cannot parse '" + s + "' as integer " + what);
  return v;
}

inline bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "TRUE" || s == "True") return true;
  if (s == "0" || s == "false" || s == "FALSE" || s == "False") return false;
  throw InputError("cannot parse '" + s + "' as a boolean");
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<int>(j);
    }
    return -1;
  }
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || line[0] == '#') continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw InputError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                       " columns, got " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Supports JSON.

inline std::vector<DiscreteNullDistribution> parse_supports(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("supports: invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw InputError("supports: expected a JSON array");
  std::vector<DiscreteNullDistribution> out;
  out.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    if (!obj.is_object() || !obj.contains("atoms") || !obj.contains("cdf")) {
      throw InputError("supports[" + std::to_string(i) + "]: expected {\"atoms\": [...], \"cdf\": [...]}");
    }
    try {
      out.emplace_back(obj.at("atoms").get<std::vector<double>>(), obj.at("cdf").get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw InputError("supports[" + std::to_string(i) + "]: " + e.what());
    } catch (const InputError& e) {
      throw InputError("supports[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return out;
}

inline std::vector<DiscreteNullDistribution> read_supports(const std::string& path) {
  return parse_supports(read_file(path));
}

/// One object per line inside the array; numbers at 17 significant digits.
inline std::string format_supports(const std::vector<DiscreteNullDistribution>& supports) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < supports.size(); ++i) {
    out += "  {\"atoms\": [";
    const auto atoms = supports[i].atoms();
    for (std::size_t j = 0; j < atoms.size(); ++j) out += (j ? ", " : "") + fmt(atoms[j]);
    out += "], \"cdf\": [";
    const auto cdf = supports[i].cdf();
    for (std::size_t j = 0; j < cdf.size(); ++j) out += (j ? ", " : "") + fmt(cdf[j]);
    out += "]}";
    out += i + 1 < supports.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

// ---------------------------------------------------------------------------
// P-value CSV.

/// Parses the p-value CSV. With `supports`, row i uses supports[support_index]
/// when that column exists and supports[i] otherwise.
inline PValueVector parse_pvalues(const std::string& text, const std::vector<DiscreteNullDistribution>* supports) {
  const auto t = detail::parse_csv(text);
  if (t.rows.empty()) throw InputError("no hypotheses");
  const int pc = t.column("p");
  if (pc < 0) throw InputError("p-value file needs a column named 'p'");
  const int sc = t.column("support_index");
  const int nc = t.column("is_null");

  std::vector<double> values;
  std::vector<bool> labels;
  std::vector<DiscreteNullDistribution> aligned;
  values.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    values.push_back(detail::parse_double(row[static_cast<std::size_t>(pc)], "p-value"));
    if (nc >= 0) labels.push_back(detail::parse_bool(row[static_cast<std::size_t>(nc)]));
    if (supports) {
      std::size_t k = i;
      if (sc >= 0) {
        const long long s = detail::parse_integer(row[static_cast<std::size_t>(sc)], "support_index");
        if (s < 0) throw InputError("negative support_index at row " + std::to_string(i));
        k = static_cast<std::size_t>(s);
      }
      if (k >= supports->size()) {
        throw InputError("row " + std::to_string(i) + " refers to support " + std::to_string(k) + " but only " +
                         std::to_string(supports->size()) + " supports were given");
      }
      aligned.push_back((*supports)[k]);
    }
  }
  if (supports && sc < 0 && supports->size() != values.size()) {
    throw InputError("number of supports does not match number of p-values");
  }
  return PValueVector(std::move(values), std::move(aligned), std::move(labels));
}

inline PValueVector read_pvalues(const std::string& path, const std::vector<DiscreteNullDistribution>* supports) {
  return parse_pvalues(read_file(path), supports);
}

// ---------------------------------------------------------------------------
// Table CSV.

inline std::vector<ContingencyTable> parse_tables(const std::string& text) {
  const auto t = detail::parse_csv(text);
  const int cols[4] = {t.column("a"), t.column("b"), t.column("c"), t.column("d")};
  for (int c : cols) {
    if (c < 0) throw InputError("tables file needs columns a,b,c,d");
  }
  if (t.rows.empty()) throw InputError("no tables");
  std::vector<ContingencyTable> out;
  out.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    std::uint32_t v[4];
    for (int j = 0; j < 4; ++j) {
      const long long x = detail::parse_integer(row[static_cast<std::size_t>(cols[j])], "table count");
      if (x < 0 || x > 1'000'000'000) throw InputError("table counts must be non-negative");
      v[j] = static_cast<std::uint32_t>(x);
    }
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Estimator specs.

namespace detail {

inline double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw InputError(std::string("estimator spec: missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

inline double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j, key) : fallback;
}

}  // namespace detail

/// {"kind":"indicator","lambda":x} | {"kind":"power","r":r,"lambda":x} |
/// {"kind":"table","breakpoints":[..],"values":[..]} |
/// {"kind":"mixture","weights":[..],"parts":[..]}
inline TransformFn transform_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InputError("transform spec: expected an object with a 'kind' string");
  }
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "indicator") return TransformFn::indicator(detail::number(j, "lambda"));
    if (kind == "power") return TransformFn::power(detail::number(j, "r"), detail::number_or(j, "lambda", 0.0));
    if (kind == "identity") return TransformFn::identity();
    if (kind == "table") {
      return TransformFn::table(j.at("breakpoints").get<std::vector<double>>(),
                                j.at("values").get<std::vector<double>>());
    }
    if (kind == "mixture") {
      std::vector<TransformFn> parts;
      for (const auto& p : j.at("parts")) parts.push_back(transform_from_json(p));
      return TransformFn::mixture(j.at("weights").get<std::vector<double>>(), std::move(parts));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("transform spec: ") + e.what());
  }
  throw InputError("transform spec: unknown kind '" + kind + "'");
}

/// Estimator spec JSON, e.g. {"kind":"poly","r":2,"lambda":0.5} or
/// {"kind":"combination","members":[{"w":0.5,"spec":{...}}, ...]}.
inline EstimatorSpec estimator_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw InputError("estimator spec: expected an object with a 'kind' string");
  }
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "storey") return EstimatorSpec::storey(detail::number_or(j, "lambda", 0.5));
    if (kind == "pc_new") return EstimatorSpec::pc_new();
    if (kind == "pc_legacy") return EstimatorSpec::pc_legacy();
    if (kind == "pc_zzd") {
      const double m_ref = detail::number_or(j, "m", static_cast<double>(kZzdM500));
      if (!(m_ref >= 1.0)) throw InputError("estimator spec: pc_zzd needs m >= 1");
      return EstimatorSpec::pc_zzd(detail::number_or(j, "C", kZzdC500), detail::number_or(j, "s", kZzdS500),
                                   static_cast<std::size_t>(m_ref));
    }
    if (kind == "poly") return EstimatorSpec::poly(detail::number(j, "r"), detail::number_or(j, "lambda", 0.0));
    if (kind == "homogeneous") return EstimatorSpec::homogeneous(transform_from_json(j.at("g")));
    if (kind == "heterogeneous") {
      std::vector<TransformFn> gs;
      for (const auto& g : j.at("gs")) gs.push_back(transform_from_json(g));
      return EstimatorSpec::heterogeneous(std::move(gs));
    }
    if (kind == "combination") {
      std::vector<double> w;
      std::vector<EstimatorSpec> members;
      for (const auto& m : j.at("members")) {
        w.push_back(detail::number(m, "w"));
        members.push_back(estimator_from_json(m.at("spec")));
      }
      return EstimatorSpec::combination(std::move(w), std::move(members));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("estimator spec: ") + e.what());
  }
  throw InputError("estimator spec: unknown kind '" + kind + "'");
}

/// Accepts inline JSON, a path to a JSON file, or a bare kind name
/// ("storey", "pc_new", ...).
inline std::vector<EstimatorSpec> parse_estimators(const std::string& arg) {
  std::string text = detail::trim(arg);
  if (text.empty()) throw InputError("empty estimator spec");
  if (text[0] != '{' && text[0] != '[') {
    std::ifstream probe(text);
    if (probe) {
      text = read_file(text);
    } else {
      text = "{\"kind\":\"" + text + "\"}";
    }
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("estimator spec: invalid JSON: ") + e.what());
  }
  std::vector<EstimatorSpec> out;
  if (doc.is_array()) {
    for (const auto& j : doc) out.push_back(estimator_from_json(j));
  } else {
    out.push_back(estimator_from_json(doc));
  }
  if (out.empty()) throw InputError("no estimators given");
  return out;
}

// ---------------------------------------------------------------------------
// Reports.

inline std::string format_report(const std::vector<ExperimentReport>& reports) {
  std::string out = "config_point,estimator,mean_pi0_hat,bias,mse,fdr_hat,fdr_se,power,power_se,pi0_se\n";
  for (const auto& r : reports) {
    for (const auto& s : r.methods) {
      out += csv_field(r.config_point) + "," + csv_field(s.id) + "," + fmt(s.mean_pi0_hat) + "," + fmt(s.bias) + "," + fmt(s.mse) + "," +
             fmt(s.fdr_hat) + "," + fmt(s.fdr_se) + "," + fmt(s.power) + "," + fmt(s.power_se) + "," +
             fmt(s.pi0_se) + "\n";
    }
  }
  return out;
}

struct VerifyRow {
  std::string check;
  std::string parameters;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline std::string format_verify(const std::vector<VerifyRow>& rows) {
  std::string out = "check,parameters,value,reference,tolerance,pass\n";
  for (const auto& r : rows) {
    out += csv_field(r.check) + "," + csv_field(r.parameters) + "," + fmt(r.value) + "," + fmt(r.reference) + "," + fmt(r.tolerance) + "," +
           (r.pass ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace pluginfdr::io
