#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "almost_integer.hpp"
#include "approx.hpp"
#include "blocks.hpp"
#include "errors.hpp"
#include "flc.hpp"
#include "norms.hpp"
#include "report.hpp"
#include "sparse.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

// ------------------------------------------------------------------ configuration

struct RunConfig {
  std::string command;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  double tolerance_scale = 1.0;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c = {"verify-blocks", "build-sparse", "build-almost-integer", "build-flc",
                                             "check-completeness"};
  return c;
}

template <class T>
T param(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("field '" + key + "' has the wrong type");
  }
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing required field '" + key + "'");
  return j.at(key);
}

inline RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  RunConfig c;
  c.command = param<std::string>(j, "command", "");
  require_field(j, "command");
  if (std::find(known_commands().begin(), known_commands().end(), c.command) == known_commands().end())
    throw ConfigError("field 'command' has unknown value '" + c.command + "'");
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError("field 'params' must be an object");
    c.params = j.at("params");
  }
  c.seed = param<std::uint64_t>(j, "seed", 0);
  c.tolerance_scale = param<double>(j, "tolerance_scale", 1.0);
  if (!(c.tolerance_scale > 0)) throw ConfigError("field 'tolerance_scale' must be positive");
  return c;
}

inline nlohmann::json load_config(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot read config " + p.string());
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1 + static_cast<std::size_t>(
                               std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
    throw ConfigError(p.string() + ":" + std::to_string(line) + ": " + e.what());
  }
}

inline std::vector<double> param_list(const nlohmann::json& j, const std::string& key, std::vector<double> fallback) {
  return param<std::vector<double>>(j, key, std::move(fallback));
}

inline GammaOptions gamma_options_from(const nlohmann::json& j, GammaOptions g) {
  if (!j.contains("gamma")) return g;
  const auto& o = j.at("gamma");
  g.h_min = param<double>(o, "h_min", g.h_min);
  g.fejer_start = param<std::int64_t>(o, "fejer_start", g.fejer_start);
  g.fejer_cap = param<std::int64_t>(o, "fejer_cap", g.fejer_cap);
  g.fit.N_start = param<std::int64_t>(o, "fit_N_start", g.fit.N_start);
  g.fit.N_cap = param<std::int64_t>(o, "fit_N_cap", g.fit.N_cap);
  return g;
}

inline std::function<cplx(double)> gaussian(double centre) {
  return [centre](double t) { return cplx(std::exp(-std::numbers::pi * (t - centre) * (t - centre))); };
}

// ------------------------------------------------------------------ verify-blocks

inline std::string short_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// (2 sum_{n > N} (C / n^2)^p)^{1/p}, the l^p mass beyond N of coefficients bounded by C / n^2.
inline double inverse_square_tail(double C, std::int64_t N, double p) {
  double n = static_cast<double>(N);
  return std::pow(2.0 * std::pow(C, p) * std::pow(n, 1.0 - 2.0 * p) / (2.0 * p - 1.0), 1.0 / p);
}

// ||f||_{A^p} for a truncated series with |f^(n)| <= C / n^2 beyond N.
inline double series_norm_bound(const PeriodicSeries& f, double C, double p) {
  return ap_norm_torus(f, p).value + inverse_square_tail(C, f.N(), p);
}

inline void verify_estimates(ConstructionReport& rep, const nlohmann::json& prm, double tol_scale) {
  const auto hs = param_list(prm, "hs", {0.01, 0.05, 0.1, 0.2, 0.4});
  const auto ps = param_list(prm, "ps", {1.0, 1.25, 1.5, 2.0, 3.0});
  const double slack = 1e-9 * tol_scale, exact = 1e-12 * tol_scale;
  for (double h : hs) {
    const std::string hn = short_number(h);
    if (h < 0.5) {
      auto D = triangle(h);
      const double C = 1.0 / (std::numbers::pi * std::numbers::pi * h);
      rep.add(upper_check("triangle h=" + hn + ": |Delta^(0) - h|", std::abs(D[0] - h), exact, "closed form", true));
      for (double p : ps) {
        // p = 1: exact remainder, coefficients sum to Delta_h(0) = 1
        double s1 = D.l1();
        double v = p == 1.0 ? s1 + (triangle_value(h, 0.0) - s1) : series_norm_bound(D, C, p);
        rep.add(upper_check("triangle h=" + hn + " p=" + short_number(p) + ": ||Delta_h||_{A^p}", v,
                            std::pow(h, (p - 1.0) / p) + slack,
                            p == 1.0 ? "partial sum + exact remainder" : "partial sum + l^p tail bound", true));
      }
    }
    if (h < 0.25) {
      auto T = trapezoid(h);
      rep.add(upper_check("trapezoid h=" + hn + ": |tau^(0) - 3h|", std::abs(T[0] - 3.0 * h), exact, "closed form",
                          true));
      const double C = 3.0 / (std::numbers::pi * std::numbers::pi * h);
      for (double p : ps)
        rep.add(upper_check("trapezoid h=" + hn + " p=" + short_number(p) + ": ||tau_h||_{A^p}",
                            series_norm_bound(T, C, p), 3.0 * std::pow(h, (p - 1.0) / p) + slack,
                            "partial sum + l^p tail bound", true));
    }
  }
}

inline void verify_phi(ConstructionReport& rep, const nlohmann::json& prm, double tol_scale) {
  const auto hs = param_list(prm, "phi_hs", {0.01, 0.05, 0.15});
  const double slack = 1e-9 * tol_scale, exact = 1e-12 * tol_scale;
  for (double h : hs) {
    const std::string tag = "phi h=" + short_number(h) + ": ";
    auto f = phi(h, 0, false);
    double mc = std::numeric_limits<double>::infinity();
    for (std::int64_t n = -f.N(); n <= f.N(); ++n) mc = std::min(mc, f[n].real());
    rep.add(upper_check(tag + "|phi^(0) - 1|", std::abs(f[0] - 1.0), exact, "coefficients", true));
    rep.add(lower_check(tag + "min phi^(n)", mc, 0.0, "coefficients", true));
    try {
      auto c = check_phi(f, h);
      rep.add(upper_check(tag + "max |phi| on |t - 1/2| <= h", c.zero_inside, exact, "closed form on grid", true));
      rep.add(lower_check(tag + "min phi off the zero set", c.min_outside, 0.0, "closed form on grid"));
      rep.add(upper_check(tag + "series vs closed form", c.series_gap, f.tail() + slack, "tail bound", true));
      auto centred = f - PeriodicSeries::constant(1.0);
      const double C = 6.0 / (std::numbers::pi * std::numbers::pi * h);
      for (const auto& pv : c.norm_sweep) {
        const double p = pv.first;
        rep.add(upper_check(tag + "||phi - 1||_{A^p}, p=" + short_number(p), series_norm_bound(centred, C, p),
                            6.0 * std::pow(h, (p - 1.0) / p) + slack, "partial sum + l^p tail bound", true));
      }
    } catch (const PropertyViolation& e) {
      rep.add(upper_check(tag + e.what(), std::numeric_limits<double>::quiet_NaN(), 0.0, "check_phi"));
    }
  }
}

inline void verify_sigma(ConstructionReport& rep, const nlohmann::json& prm, double tol_scale) {
  const int L = param<int>(prm, "sigma_L", 1);
  const double h = param<double>(prm, "sigma_h", 0.4), h1 = param<double>(prm, "sigma_h1", 0.6);
  auto s = sigma_bump(L, h, h1);
  const std::string tag = "sigma L=" + std::to_string(L) + ": ";
  double smin = std::numeric_limits<double>::infinity(), outside = 0.0;
  LandauSet om(L, h1);
  for (int i = 0; i <= 4096; ++i) {
    double t = -(L + 1.0) + 2.0 * (L + 1.0) * i / 4096.0;
    double v = s.value(t).real();
    smin = std::min(smin, v);
    if (!om.contains(t)) outside = std::max(outside, std::abs(v));
  }
  double fmin = std::numeric_limits<double>::infinity(), gap = 0.0;
  for (double x = -40.0; x <= 40.0; x += 0.37) {
    double c = sigma_ft(L, h1, x);
    fmin = std::min(fmin, c);
    gap = std::max(gap, std::abs(s.ft(x).real() - c));
  }
  rep.add(lower_check(tag + "min sigma on grid", smin, 0.0, "samples", true));
  rep.add(upper_check(tag + "max |sigma| off Omega(L, h')", outside, 0.0, "samples", true));
  rep.add(lower_check(tag + "min sigma^ on grid", fmin, -1e-12 * tol_scale, "closed form", true));
  rep.add(upper_check(tag + "transform vs closed form", gap, 1e-8 * tol_scale, "quadrature", true));
  rep.add(upper_check(tag + "|sigma(0) - 1|", std::abs(s.value(0.0).real() - 1.0), 1e-12 * tol_scale, "samples",
                      true));
}

inline TrigPoly random_trigpoly(std::mt19937_64& rng, int max_terms, double max_alpha, int max_n = 40) {
  std::uniform_int_distribution<int> count(1, max_terms), nd(-max_n, max_n);
  std::uniform_real_distribution<double> ad(-max_alpha, max_alpha), cd(-1.0, 1.0);
  int m = count(rng);
  std::vector<Term> t;
  std::set<int> used;
  while (static_cast<int>(t.size()) < m) {
    int n = nd(rng);
    if (!used.insert(n).second) continue;
    double a = ad(rng);
    double re = cd(rng), im = cd(rng);
    t.push_back({Frequency::real(n + a), cplx(re, im)});
  }
  return TrigPoly(std::move(t));
}

// Spectral difference formula against pointwise differencing and the two binomial identities.
inline void verify_differences(ConstructionReport& rep, const nlohmann::json& prm, std::uint64_t seed,
                               double tol_scale) {
  const int count = param<int>(prm, "random_polys", 200), max_terms = param<int>(prm, "max_terms", 12);
  const int kmax = param<int>(prm, "k_max", 4), grid = param<int>(prm, "grid", 64), jmax = param<int>(prm, "j_max", 5);
  const double amax = param<double>(prm, "alpha_max", 0.4), tol = 1e-10 * tol_scale;
  std::mt19937_64 rng(seed);
  double spectral = 0.0, recursive = 0.0, binomial = 0.0;
  for (int r = 0; r < count; ++r) {
    auto P = random_trigpoly(rng, max_terms, amax);
    auto f = [&P](double t) { return P.eval(t); };
    std::vector<TrigPoly> D{P};
    for (int k = 1; k <= std::max(kmax, jmax); ++k) D.push_back(diff_op(P, k));
    for (int i = 0; i < grid; ++i) {
      double t = static_cast<double>(i) / grid;
      for (int k = 0; k <= kmax; ++k) {
        cplx pw = pointwise_difference(f, t, k);
        spectral = std::max(spectral, std::abs(D[k].eval(t) - pw));
        // Delta^k as Delta applied k times
        std::function<cplx(double)> g = f;
        for (int m = 0; m < k; ++m) g = [g](double x) { return g(x + 1.0) - g(x); };
        recursive = std::max(recursive, std::abs(g(t) - pw));
      }
      for (int j = 0; j <= jmax; ++j) {
        cplx s = 0.0;
        double b = 1.0;
        for (int l = 0; l <= j; ++l) {
          s += b * D[l].eval(t);
          b = b * (j - l) / (l + 1);
        }
        binomial = std::max(binomial, std::abs(s - P.eval(t + j)));
      }
    }
  }
  const std::string n = std::to_string(count) + " random polynomials: ";
  rep.add(upper_check(n + "spectral vs pointwise Delta^k", spectral, tol, "64-point grid", true));
  rep.add(upper_check(n + "iterated Delta vs binomial sum", recursive, tol, "64-point grid", true));
  rep.add(upper_check(n + "P(t + j) vs sum_l C(j, l) Delta^l P(t)", binomial, tol, "64-point grid", true));
}

inline void verify_cutoffs(ConstructionReport& rep, const nlohmann::json& prm, std::uint64_t seed, double tol_scale) {
  const int s = param<int>(prm, "cutoff_s", 3);
  const double h = param<double>(prm, "cutoff_h", 0.4), h1 = param<double>(prm, "cutoff_h1", 0.55),
               h2 = param<double>(prm, "cutoff_h2", 0.7), p = param<double>(prm, "cutoff_p", 1.5);
  auto cut = cutoffs(s, h, h1, h2);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  const Mollifier* R = &Mollifier::instance();
  LineFunction phi_line;
  for (int j = 0; j < s; ++j) {
    double a = ud(rng), c = 0.1 * ud(rng);
    phi_line += LineFunction(make_compact(
        j - 0.5 * h1, j + 0.5 * h1,
        [R, j, h, h1, a, c](double t) {
          return cplx((a * R->rho((t - j - c) / (h1 - 0.2)) + 0.5) * plateau_value(h, h1, t - j));
        },
        default_step(h)));
  }
  auto d = diff_bound_check(phi_line, cut, p);
  rep.add(upper_check("difference bound s=" + std::to_string(s) + ": ||phi|| vs 2^s max ||Psi Delta^l phi||", d.lhs,
                      d.rhs + 1e-8 * tol_scale, "two sides computed directly", true));
  const double f0 = ud(rng), f1 = 3.0 * ud(rng);
  auto phi_fn = [f0, f1](double t) { return std::exp(-t * t) * expi2pi(f1, t) + f0; };
  for (int l = 0; l < s; ++l) {
    double r = commutation_check(cut, phi_fn, l);
    rep.add(upper_check("commutation l=" + std::to_string(l) + ": |Psi Delta^l(Theta phi) - Phi Delta^l phi|", r,
                        1e-10 * tol_scale, "grid", true));
  }
}

inline ConstructionReport run_verify_blocks(const RunConfig& cfg) {
  ConstructionReport rep;
  rep.command = "verify-blocks";
  rep.seed = cfg.seed;
  rep.params = cfg.params;
  rep.params["tolerance_scale"] = cfg.tolerance_scale;
  auto sections = param<std::vector<std::string>>(cfg.params, "sections",
                                                   {"estimates", "phi", "sigma", "differences", "cutoffs"});
  for (const auto& s : sections) {
    if (s == "estimates")
      verify_estimates(rep, cfg.params, cfg.tolerance_scale);
    else if (s == "phi")
      verify_phi(rep, cfg.params, cfg.tolerance_scale);
    else if (s == "sigma")
      verify_sigma(rep, cfg.params, cfg.tolerance_scale);
    else if (s == "differences")
      verify_differences(rep, cfg.params, cfg.seed, cfg.tolerance_scale);
    else if (s == "cutoffs")
      verify_cutoffs(rep, cfg.params, cfg.seed, cfg.tolerance_scale);
    else
      throw ConfigError("field 'sections' has unknown entry '" + s + "'");
  }
  return rep;
}

// ------------------------------------------------------------------ build-sparse

inline ConstructionReport run_build_sparse(const RunConfig& cfg) {
  const auto& j = cfg.params;
  SparseSchedule sc;
  sc.eps.name = param<std::string>(j, "eps_schedule", sc.eps.name);
  sc.eps.c = param<double>(j, "eps_scale", sc.eps.c);
  sc.lambda0 = param<double>(j, "lambda0", sc.lambda0);
  sc.steps = param<int>(j, "steps", sc.steps);
  sc.h_terms = param<int>(j, "h_terms", sc.h_terms);
  sc.filler_budget = param<std::int64_t>(j, "filler_budget", sc.filler_budget);
  sc.omega = LandauSet(param<int>(j, "L", sc.omega.L), param<double>(j, "h", sc.omega.h));
  sc.h1 = param<double>(j, "h1", sc.h1);
  sc.block.best_effort = param<bool>(j, "best_effort", true);
  sc.block.gamma = gamma_options_from(j, sc.block.gamma);
  sc.eps(0);
  return sparse_driver(sc, cfg.seed).report;
}

// ------------------------------------------------------------------ build-almost-integer

inline AlphaSequence alpha_from(const nlohmann::json& j) {
  AlphaSequence a;
  if (!j.contains("alpha")) return a;
  const auto& o = j.at("alpha");
  a.kind = param<std::string>(o, "kind", a.kind);
  a.c = param<double>(o, "c", a.c);
  a.table = param<std::vector<double>>(o, "table", a.table);
  return a;
}

inline PerturbParams perturb_params_from(const nlohmann::json& j) {
  PerturbParams sp;
  sp.alpha = alpha_from(j);
  sp.s = param<int>(j, "s", sp.s);
  sp.h = param<double>(j, "h", sp.h);
  sp.h1 = param<double>(j, "h1", sp.h1);
  sp.h2 = param<double>(j, "h2", sp.h2);
  sp.p = param<double>(j, "p", sp.p);
  sp.eps = param<double>(j, "eps", sp.eps);
  sp.N = param<std::int64_t>(j, "N", sp.N);
  sp.best_effort = param<bool>(j, "best_effort", sp.best_effort);
  sp.row_cap = param<std::size_t>(j, "row_cap", sp.row_cap);
  sp.gamma = gamma_options_from(j, sp.gamma);
  sp.validate();
  return sp;
}

// Lemma mode: v = bumps of width h on the s intervals, f a Gaussian centred on Omega.
inline ConstructionReport run_almost_integer_lemma(const PerturbParams& sp, std::uint64_t seed) {
  auto v = interval_bumps(sp.s, sp.h);
  auto f = gaussian(0.5 * (sp.s - 1));
  auto r = construct_gamma_q(sp, v, f);
  r.report.seed = seed;
  r.report.params["mode"] = "lemma";
  return r.report;
}

inline ConstructionReport run_build_almost_integer(const RunConfig& cfg) {
  const auto& j = cfg.params;
  auto sp = perturb_params_from(j);
  const std::string mode = param<std::string>(j, "mode", j.contains("steps") ? "driver" : "lemma");
  if (mode == "lemma") return run_almost_integer_lemma(sp, cfg.seed);
  if (mode != "driver") throw ConfigError("field 'mode' must be 'lemma' or 'driver'");
  AlmostIntegerSchedule sc;
  sc.prm = sp;
  sc.L = param<int>(j, "L", sc.L);
  sc.sigma_h = param<double>(j, "sigma_h", sc.sigma_h);
  sc.sigma_h1 = param<double>(j, "sigma_h1", sc.sigma_h1);
  sc.steps = param<int>(j, "steps", sc.steps);
  auto rep = almost_integer_driver(sc, cfg.seed).report;
  rep.params["mode"] = "driver";
  return rep;
}

// ------------------------------------------------------------------ build-flc

inline ConstructionReport run_build_flc(const RunConfig& cfg) {
  const auto& j = cfg.params;
  const double a = param<double>(j, "a", std::sqrt(2.0));
  const int L = param<int>(j, "L", 1);
  const double h = param<double>(j, "h", 0.6), eps = param<double>(j, "eps", 0.1);
  const double centre = param<double>(j, "target_centre", 0.0);
  FlcOptions opt;
  opt.check_points = param<std::size_t>(j, "check_points", opt.check_points);
  LandauSet om(L, h);
  auto r = flc_polynomial(a, om, gaussian(centre), Frequency::integer(0), eps, opt);

  ConstructionReport rep;
  rep.command = "build-flc";
  rep.seed = cfg.seed;
  rep.params = {{"a", a}, {"L", L}, {"h", h}, {"eps", eps}, {"target_centre", centre},
                {"check_points", opt.check_points}, {"tolerance_scale", cfg.tolerance_scale}};
  const double ts = cfg.tolerance_scale;
  rep.add(upper_check("sup_Omega |P - chi|", r.sup_error, eps, "dense grid per interval", true));
  std::size_t ones = 0, as = 0, other = 0;
  for (auto g : r.gaps) (g == GapClass::One ? ones : g == GapClass::A ? as : other)++;
  rep.add(upper_check("gaps outside {1, a}", static_cast<double>(other), 0.0, "integer lattice arithmetic", true));
  if (L > 0) {
    rep.add(lower_check("gaps equal to 1", static_cast<double>(ones), 1.0, "integer lattice arithmetic", true));
    rep.add(lower_check("gaps equal to a", static_cast<double>(as), 1.0, "integer lattice arithmetic", true));
  }
  rep.add(upper_check("Vandermonde residual ||V d - I||_max", r.weights.residual, kVandermondeResidualLimit * ts,
                      "direct product", true));
  std::vector<double> probes;
  for (int i = 0; i < 7; ++i) probes.push_back(-0.5 * h + h * i / 6.0);
  double rec = flc_reconstruction_residual(r, probes);
  const double scale = std::max(1.0, coeff_norm(r.P, 1.0));
  rep.add(upper_check("reconstruction |sum_k e(kla) H_k(t) - P(t + l)| / ||P^||_1", rec / scale, 1e-10 * ts,
                      "block functions", true));
  double worst_block = 0.0;
  for (const auto& b : r.blocks) worst_block = std::max(worst_block, b.target_error);
  rep.add(upper_check("sup error vs (2L+1) max block error", r.sup_error, (2 * L + 1) * worst_block + 1e-12,
                      "aggregation", true));

  for (std::size_t n = 0; n < r.lambdas.size(); ++n) {
    const auto& f = r.lambdas[n];
    rep.lambdas.push_back({static_cast<std::int64_t>(n + 1), f, f.value(), 0.0, 0.0, gap_name(r.gaps[n]),
                           "block " + std::to_string(f.k)});
  }
  for (const auto& t : r.P.terms()) rep.coefficients.push_back({"P", t.freq, t.coef});
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : r.blocks)
    blocks.push_back({{"k", b.k}, {"N_lo", b.N_lo}, {"N_hi", b.N_hi}, {"target_error", b.target_error},
                      {"converged", b.fit.converged}});
  rep.diagnostics = {{"blocks", blocks},
                     {"gap_counts", {{"one", ones}, {"a", as}, {"other", other}}},
                     {"vandermonde_condition", r.weights.condition},
                     {"delta", r.delta},
                     {"all_fits_converged", r.all_fits_converged}};
  return rep;
}

// ------------------------------------------------------------------ check-completeness

inline ConstructionReport run_check_completeness(const RunConfig& cfg) {
  const auto& j = cfg.params;
  const int L = param<int>(j, "L", 1);
  const double h = param<double>(j, "h", 0.8), c = param<double>(j, "alpha_c", 0.3);
  const double centre = param<double>(j, "target_centre", 0.3);
  const double floor_int = param<double>(j, "integer_floor", 0.1), goal = param<double>(j, "perturbed_goal", 0.02);
  std::vector<int> Ms = param<std::vector<int>>(j, "M", {8, 16, 32, 64, 128, 256});
  LandauSet om(L, h);
  auto target = gaussian(centre);

  ConstructionReport rep;
  rep.command = "check-completeness";
  rep.seed = cfg.seed;
  rep.params = {{"L", L}, {"h", h}, {"alpha_c", c}, {"target", "gaussian"}, {"target_centre", centre},
                {"integer_floor", floor_int}, {"perturbed_goal", goal}, {"M", Ms}};
  auto residual = [&](const std::vector<Frequency>& f, double& cond) {
    try {
      auto r = completeness_residual(f, om, target);
      cond = r.condition;
      return r.residual;
    } catch (const GramIllConditioned&) {
      cond = std::numeric_limits<double>::infinity();
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  nlohmann::json trend = nlohmann::json::array();
  double last = std::numeric_limits<double>::quiet_NaN(), prev = std::numeric_limits<double>::infinity();
  int increases = 0;
  for (int M : Ms) {
    std::vector<Frequency> fi, fp;
    for (int n = 1; n <= M; ++n) {
      fi.push_back(Frequency::integer(n));
      fp.push_back(Frequency::real(n + c / n));
    }
    double ci = 0.0, cp = 0.0;
    double ri = residual(fi, ci), rp = residual(fp, cp);
    rep.add(lower_check("integer frequencies M=" + std::to_string(M) + ": residual", ri, floor_int, "Gram projection",
                        true));
    rep.residuals.push_back({"integer", M, 2.0, ri, floor_int, "Gram projection"});
    rep.residuals.push_back({"perturbed", M, 2.0, rp, goal, "Gram projection"});
    if (rp > prev + 1e-12) ++increases;
    prev = rp;
    last = rp;
    trend.push_back({{"M", M}, {"integer", num(ri)}, {"perturbed", num(rp)}, {"integer_condition", num(ci)},
                     {"perturbed_condition", num(cp)}});
  }
  rep.add(upper_check("perturbed frequencies M=" + std::to_string(Ms.empty() ? 0 : Ms.back()) + ": residual", last,
                      goal, "Gram projection"));
  rep.diagnostics = {{"trend", trend}, {"perturbed_increases", increases}};
  return rep;
}

// ------------------------------------------------------------------ dispatch

inline ConstructionReport run(const RunConfig& cfg) {
  if (cfg.command == "verify-blocks") return run_verify_blocks(cfg);
  if (cfg.command == "build-sparse") return run_build_sparse(cfg);
  if (cfg.command == "build-almost-integer") return run_build_almost_integer(cfg);
  if (cfg.command == "build-flc") return run_build_flc(cfg);
  if (cfg.command == "check-completeness") return run_check_completeness(cfg);
  throw ConfigError("field 'command' has unknown value '" + cfg.command + "'");
}

}  // namespace spectral_forge
