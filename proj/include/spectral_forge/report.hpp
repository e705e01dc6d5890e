#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

inline constexpr const char* kSchemaVersion = "spectral-forge/1";

// One verified inequality. For upper bounds, pass iff measured < required (or <= when inclusive).
struct Check {
  std::string name;
  double measured = 0.0;
  double required = 0.0;
  bool upper = true;
  bool inclusive = false;
  std::string method;

  bool pass() const {
    if (std::isnan(measured) || std::isnan(required)) return false;
    if (upper) return inclusive ? measured <= required : measured < required;
    return inclusive ? measured >= required : measured > required;
  }
};

inline Check upper_check(std::string name, double measured, double required, std::string method = "",
                         bool inclusive = false) {
  return {std::move(name), measured, required, true, inclusive, std::move(method)};
}

inline Check lower_check(std::string name, double measured, double required, std::string method = "",
                         bool inclusive = false) {
  return {std::move(name), measured, required, false, inclusive, std::move(method)};
}

struct LambdaRow {
  std::int64_t n = 0;
  Frequency freq;
  double value = 0.0;
  double ratio = 0.0;     // lambda_n / lambda_{n-1}
  double required = 0.0;  // 1 + eps_{n-1}
  std::string gap_class;
  std::string provenance;
  double offset = 0.0;    // lambda_n - n, exact, for almost-integer rows
};

struct CoefficientRow {
  std::string object;
  Frequency freq;
  cplx coef;
};

struct ResidualRow {
  std::string name;
  int step = 0;
  double p = 0.0;
  double value = 0.0;
  double bound = 0.0;
  std::string method;
};

// Double to json with non-finite values spelled out.
inline nlohmann::json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double num_from(const nlohmann::json& j) {
  if (j.is_string()) {
    auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw ConfigError("bad number '" + s + "'");
  }
  return j.get<double>();
}

struct ConstructionReport {
  std::string command;
  std::uint64_t seed = 0;
  nlohmann::json params = nlohmann::json::object();
  std::vector<Check> checks;
  std::vector<LambdaRow> lambdas;
  std::vector<CoefficientRow> coefficients;
  std::vector<ResidualRow> residuals;
  nlohmann::json diagnostics = nlohmann::json::object();

  void add(Check c) { checks.push_back(std::move(c)); }

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass()) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = kSchemaVersion;
    j["command"] = command;
    j["seed"] = seed;
    j["params"] = params;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
      j["checks"].push_back({{"name", c.name}, {"measured", num(c.measured)}, {"required", num(c.required)},
                             {"upper", c.upper}, {"inclusive", c.inclusive}, {"method", c.method},
                             {"pass", c.pass()}});
    j["lambdas"] = nlohmann::json::array();
    for (const auto& l : lambdas)
      j["lambdas"].push_back({{"n", l.n}, {"freq", spectral_forge::to_json(l.freq)}, {"value", num(l.value)},
                              {"ratio", num(l.ratio)}, {"required", num(l.required)},
                              {"gap_class", l.gap_class}, {"provenance", l.provenance},
                              {"offset", num(l.offset)}});
    j["coefficients"] = nlohmann::json::array();
    for (const auto& c : coefficients)
      j["coefficients"].push_back({{"object", c.object}, {"freq", spectral_forge::to_json(c.freq)}, {"re", c.coef.real()},
                                   {"im", c.coef.imag()}});
    j["residuals"] = nlohmann::json::array();
    for (const auto& r : residuals)
      j["residuals"].push_back({{"name", r.name}, {"step", r.step}, {"p", num(r.p)}, {"value", num(r.value)},
                                {"bound", num(r.bound)}, {"method", r.method}});
    j["diagnostics"] = diagnostics;
    j["all_pass"] = all_pass();
    return j;
  }

  static ConstructionReport from_json(const nlohmann::json& j) {
    if (j.at("schema").get<std::string>() != kSchemaVersion) throw ConfigError("unknown report schema");
    ConstructionReport r;
    r.command = j.at("command").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.params = j.at("params");
    for (const auto& c : j.at("checks"))
      r.checks.push_back({c.at("name").get<std::string>(), num_from(c.at("measured")),
                          num_from(c.at("required")), c.at("upper").get<bool>(),
                          c.at("inclusive").get<bool>(), c.at("method").get<std::string>()});
    for (const auto& l : j.at("lambdas"))
      r.lambdas.push_back({l.at("n").get<std::int64_t>(), frequency_from_json(l.at("freq")),
                           num_from(l.at("value")), num_from(l.at("ratio")), num_from(l.at("required")),
                           l.at("gap_class").get<std::string>(), l.at("provenance").get<std::string>(),
                           num_from(l.at("offset"))});
    for (const auto& c : j.at("coefficients"))
      r.coefficients.push_back({c.at("object").get<std::string>(), frequency_from_json(c.at("freq")),
                                {c.at("re").get<double>(), c.at("im").get<double>()}});
    for (const auto& x : j.at("residuals"))
      r.residuals.push_back({x.at("name").get<std::string>(), x.at("step").get<int>(), num_from(x.at("p")),
                             num_from(x.at("value")), num_from(x.at("bound")), x.at("method").get<std::string>()});
    r.diagnostics = j.at("diagnostics");
    return r;
  }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& c : checks) {
      os << (c.pass() ? "PASS " : "FAIL ") << c.name << ": measured " << c.measured
         << (c.upper ? (c.inclusive ? " <= " : " < ") : (c.inclusive ? " >= " : " > ")) << c.required;
      if (!c.method.empty()) os << " [" << c.method << "]";
      os << "\n";
    }
    os << (all_pass() ? "ALL PASS" : "SOME CHECKS FAILED") << "\n";
    return os.str();
  }
};

inline std::string csv_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
  f << s;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

// report.json, lambdas.csv, coefficients.csv, residuals.csv and summary.txt under dir.
inline void emit_report(const ConstructionReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "report.json", r.to_json().dump(1) + "\n");

  std::ostringstream lam;
  if (r.command == "build-flc") {
    lam << "n,j,k,lambda,gap_class\n";
    for (const auto& l : r.lambdas)
      lam << l.n << "," << l.freq.j << "," << l.freq.k << "," << csv_number(l.value) << "," << l.gap_class << "\n";
  } else if (r.command == "build-almost-integer") {
    lam << "n,lambda,alpha,stage\n";
    for (const auto& l : r.lambdas)
      lam << l.n << "," << csv_number(l.value) << "," << csv_number(l.offset) << "," << l.provenance << "\n";
  } else {
    lam << "n,lambda,ratio,required\n";
    for (const auto& l : r.lambdas)
      lam << l.n << "," << csv_number(l.value) << "," << csv_number(l.ratio) << "," << csv_number(l.required)
          << "\n";
  }
  write_text(dir / "lambdas.csv", lam.str());

  std::ostringstream co;
  co << "object,tag,j,k,frequency,re,im\n";
  for (const auto& c : r.coefficients)
    co << c.object << "," << c.freq.tag() << "," << c.freq.j << "," << c.freq.k << ","
       << csv_number(c.freq.value()) << "," << csv_number(c.coef.real()) << "," << csv_number(c.coef.imag())
       << "\n";
  write_text(dir / "coefficients.csv", co.str());

  std::ostringstream re;
  re << "name,step,p,value,bound,method\n";
  for (const auto& x : r.residuals)
    re << x.name << "," << x.step << "," << csv_number(x.p) << "," << csv_number(x.value) << ","
       << csv_number(x.bound) << "," << x.method << "\n";
  write_text(dir / "residuals.csv", re.str());

  write_text(dir / "summary.txt", r.summary());
}

}  // namespace spectral_forge
