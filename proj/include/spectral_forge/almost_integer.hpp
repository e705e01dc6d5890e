#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_map>
#include <vector>

#include "approx.hpp"
#include "blocks.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "norms.hpp"
#include "report.hpp"
#include "sparse.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

// ------------------------------------------------------------------ perturbation sequences

// alpha_n for lambda_n = n + alpha_n, n >= 1.
struct AlphaSequence {
  std::string kind = "c_over_n";  // c/n, c/sqrt(n), (-1)^n c/n, or a table
  double c = 0.3;
  std::vector<double> table;      // alpha_1, alpha_2, ...

  double operator()(std::int64_t n) const {
    if (n < 1) throw DomainError("alpha_n needs n >= 1");
    double x = static_cast<double>(n);
    if (kind == "c_over_n") return c / x;
    if (kind == "c_over_sqrt_n") return c / std::sqrt(x);
    if (kind == "alternating") return ((n & 1) ? -c : c) / x;
    if (kind == "table") {
      if (n > static_cast<std::int64_t>(table.size()))
        throw DomainError("alpha table ends at n = " + std::to_string(table.size()));
      return table[n - 1];
    }
    throw ConfigError("unknown alpha kind '" + kind + "'");
  }

  // sup_{n > N} |alpha_n|
  double sup_after(std::int64_t N) const {
    double x = static_cast<double>(std::max<std::int64_t>(N, 0) + 1);
    if (kind == "c_over_n" || kind == "alternating") return std::abs(c) / x;
    if (kind == "c_over_sqrt_n") return std::abs(c) / std::sqrt(x);
    if (kind == "table") {
      double m = 0.0;
      for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(N, 0)); i < table.size(); ++i)
        m = std::max(m, std::abs(table[i]));
      return m;
    }
    throw ConfigError("unknown alpha kind '" + kind + "'");
  }

  // Smallest N >= lo with sup_{n > N} |alpha_n| < tau.
  std::int64_t threshold(double tau, std::int64_t lo) const {
    if (!(tau > 0)) throw ScheduleInfeasible("alpha threshold " + std::to_string(tau));
    if (sup_after(lo) < tau) return lo;
    std::int64_t a = lo, b = std::max<std::int64_t>(2 * lo, 1);
    while (!(sup_after(b) < tau)) {
      if (b > (std::int64_t{1} << 52)) throw ScheduleInfeasible("alpha_n stays above " + std::to_string(tau));
      a = b;
      b *= 2;
    }
    while (b - a > 1) {
      std::int64_t mid = a + (b - a) / 2;
      if (sup_after(mid) < tau)
        b = mid;
      else
        a = mid;
    }
    return b;
  }

  void validate() const {
    if (kind == "table") {
      if (table.empty()) throw ConfigError("alpha table is empty");
      for (double a : table)
        if (a == 0.0 || !(std::abs(a) < 0.5)) throw DomainError("alpha table entries need 0 < |alpha| < 1/2");
      return;
    }
    if (kind != "c_over_n" && kind != "c_over_sqrt_n" && kind != "alternating")
      throw ConfigError("unknown alpha kind '" + kind + "'");
    if (c == 0.0 || !(std::abs(c) < 0.5)) throw DomainError("alpha scale needs 0 < |c| < 1/2");
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"kind", kind}, {"c", c}};
    if (kind == "table") j["table"] = table;
    return j;
  }
};

// Small stage sizes: the stage-2 series grows like |g_2| |P_2|.
inline GammaOptions desk_gamma_options() {
  GammaOptions g;
  g.h_min = 1.0 / 64.0;
  g.fejer_cap = 1024;
  g.fit = FitOptions{8, 16, 100000, 300, 1e-10, 0.99, 100, true};
  return g;
}

struct PerturbParams {
  AlphaSequence alpha;
  int s = 2;
  double h = 0.4, h1 = 0.55, h2 = 0.7;
  double p = 1.5, eps = 0.3;
  std::int64_t N = 10;
  GammaOptions gamma = desk_gamma_options();
  std::size_t grid = 2048;      // samples for the Fourier coefficients of g_l
  int window = 48;              // |k - n| range for the coefficients of Psi e_{lambda_n}
  int escalations = 3;
  double max_terms = 8e6;
  std::size_t positivity_grid = 8192;
  std::size_t row_cap = 256;
  bool best_effort = false;

  void validate() const {
    alpha.validate();
    if (s < 1) throw DomainError("s must be positive");
    if (!(h > 0 && h < h1 && h1 < h2 && h2 < 1)) throw DomainError("cutoffs need 0 < h < h' < h'' < 1");
    if (!(p > 1)) throw InvalidExponent("lemma needs p > 1");
    if (!(eps > 0)) throw DomainError("eps must be positive");
    if (N < 0) throw DomainError("N must be nonnegative");
  }

  nlohmann::json to_json() const {
    return {{"alpha", alpha.to_json()}, {"s", s}, {"h", h}, {"h1", h1}, {"h2", h2}, {"p", p}, {"eps", eps},
            {"N", N}, {"grid", grid}, {"window", window}, {"best_effort", best_effort},
            {"gamma_h_min", gamma.h_min}, {"gamma_fejer_cap", gamma.fejer_cap}, {"gamma_fit_cap", gamma.fit.N_cap}};
  }
};

// ------------------------------------------------------------------ series types

// Integer-spectrum series with a certificate on the A(T) mass left out.
struct IntSeries {
  std::vector<std::int64_t> n;
  std::vector<cplx> c;
  double tail = 0.0;

  std::size_t size() const { return n.size(); }

  double l1() const {
    double s = 0.0;
    for (auto v : c) s += std::abs(v);
    return s;
  }

  std::int64_t max_freq() const {
    std::int64_t m = 0;
    for (auto k : n) m = std::max(m, k < 0 ? -k : k);
    return m;
  }

  cplx eval(double t) const {
    cplx s = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) s += c[i] * expi2pi(static_cast<double>(n[i]), t);
    return s;
  }

  static IntSeries from_map(const std::unordered_map<std::int64_t, cplx>& m, double tail) {
    std::vector<std::pair<std::int64_t, cplx>> v(m.begin(), m.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    IntSeries s;
    s.tail = tail;
    for (const auto& [k, a] : v)
      if (a != 0.0) {
        s.n.push_back(k);
        s.c.push_back(a);
      }
    return s;
  }

  static IntSeries from_periodic(const PeriodicSeries& g) {
    IntSeries s;
    s.tail = g.tail();
    for (std::int64_t k = -g.N(); k <= g.N(); ++k)
      if (g[k] != 0.0) {
        s.n.push_back(k);
        s.c.push_back(g[k]);
      }
    return s;
  }
};

inline IntSeries dilate(const IntSeries& a, std::int64_t M) {
  IntSeries r = a;
  for (auto& k : r.n) k *= M;
  return r;
}

inline IntSeries multiply(const IntSeries& a, const IntSeries& b, double max_terms) {
  if (static_cast<double>(a.size()) * static_cast<double>(b.size()) > max_terms)
    throw ScheduleInfeasible("series product needs " + std::to_string(a.size() * b.size()) + " terms");
  std::unordered_map<std::int64_t, cplx> m;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m[a.n[i] + b.n[j]] += a.c[i] * b.c[j];
  double la = a.l1(), lb = b.l1();
  return IntSeries::from_map(m, la * b.tail + a.tail * lb + a.tail * b.tail);
}

inline IntSeries add(const IntSeries& a, const IntSeries& b, cplx sb = 1.0) {
  std::unordered_map<std::int64_t, cplx> m;
  for (std::size_t i = 0; i < a.size(); ++i) m[a.n[i]] += a.c[i];
  for (std::size_t i = 0; i < b.size(); ++i) m[b.n[i]] += sb * b.c[i];
  return IntSeries::from_map(m, a.tail + std::abs(sb) * b.tail);
}

// sum_n c_n e^{2 pi i (n + alpha_n) t} with alpha_n stored exactly.
struct PerturbedTerm {
  std::int64_t n;
  double alpha;
  cplx c;
};

class PerturbedPoly {
 public:
  PerturbedPoly() = default;
  explicit PerturbedPoly(std::vector<PerturbedTerm> t) : t_(std::move(t)) {
    std::sort(t_.begin(), t_.end(), [](const PerturbedTerm& a, const PerturbedTerm& b) { return a.n < b.n; });
    for (std::size_t i = 1; i < t_.size(); ++i)
      if (t_[i].n == t_[i - 1].n) throw DomainError("repeated index " + std::to_string(t_[i].n));
  }

  const std::vector<PerturbedTerm>& terms() const { return t_; }
  std::size_t size() const { return t_.size(); }
  bool empty() const { return t_.empty(); }
  std::int64_t min_n() const { return t_.empty() ? 0 : t_.front().n; }
  std::int64_t max_n() const { return t_.empty() ? 0 : t_.back().n; }

  double l1() const {
    double s = 0.0;
    for (const auto& t : t_) s += std::abs(t.c);
    return s;
  }

  cplx eval(double x) const {
    cplx s = 0.0;
    for (const auto& t : t_) s += t.c * expi2pi(static_cast<double>(t.n), x) * expi2pi(t.alpha, x);
    return s;
  }

  // Delta^k: each coefficient times (e^{2 pi i alpha_n} - 1)^k.
  PerturbedPoly diff(int k) const {
    if (k < 0) throw DomainError("difference order must be nonnegative");
    PerturbedPoly r = *this;
    if (k == 0) return r;
    for (auto& t : r.t_) t.c *= std::pow(std::polar(1.0, kTwoPi * t.alpha) - 1.0, k);
    return r;
  }

  // Coefficients of t -> P(t - j) for an integer j.
  PerturbedPoly translated(std::int64_t j) const {
    PerturbedPoly r = *this;
    for (auto& t : r.t_) t.c *= std::polar(1.0, -kTwoPi * std::remainder(t.alpha * static_cast<double>(j), 1.0));
    return r;
  }

  PerturbedPoly joined(const PerturbedPoly& o) const {
    std::vector<PerturbedTerm> t = t_;
    t.insert(t.end(), o.t_.begin(), o.t_.end());
    return PerturbedPoly(std::move(t));
  }

  TrigPoly to_trigpoly() const {
    std::vector<Term> t;
    for (const auto& x : t_) t.push_back({Frequency::real(static_cast<double>(x.n) + x.alpha), x.c});
    return TrigPoly(std::move(t));
  }

 private:
  std::vector<PerturbedTerm> t_;
};

// ------------------------------------------------------------------ difference machinery

// u(t + j) for a line function without tails.
inline LineFunction translate(const LineFunction& u, double j) {
  if (!u.tails().empty()) throw DomainError("translate needs a function without tails");
  LineFunction r;
  for (const auto& p : u.pieces()) {
    auto b = p.base;
    auto nb = make_compact(b->lo() - j, b->hi() - j, [b, j](double t) { return b->value(t + j); }, b->dx(),
                           b->smooth());
    std::vector<Term> t;
    for (const auto& m : p.mult.terms()) t.push_back({m.freq, m.coef * expi2pi(m.freq.value(), j)});
    r += LineFunction(nb, TrigPoly(std::move(t)));
  }
  return r;
}

// Delta^l u = sum_j C(l, j) (-1)^{l-j} u(t + j).
inline LineFunction line_difference(const LineFunction& u, int l) {
  if (l < 0) throw DomainError("difference order must be nonnegative");
  LineFunction r;
  double binom = 1.0;
  for (int j = 0; j <= l; ++j) {
    r += translate(u, j).scaled(((l - j) % 2 == 0 ? 1.0 : -1.0) * binom);
    binom = binom * (l - j) / (j + 1);
  }
  return r;
}

struct DiffBound {
  double lhs = 0.0;                 // ||phi||_{A^p(R)}
  double rhs = 0.0;                 // 2^s max_l ||Psi Delta^l phi||_{A^p(R)}
  std::vector<double> terms;        // ||Psi Delta^l phi|| for l = 0..s-1
};

inline double mass_outside(const LineFunction& u, const std::vector<std::pair<double, double>>& keep) {
  double m = 0.0;
  for (const auto& p : u.pieces()) {
    const auto& b = *p.base;
    for (std::size_t i = 0; i < b.samples().size(); ++i) {
      double t = b.lo() + static_cast<double>(i) * b.dx();
      bool in = std::any_of(keep.begin(), keep.end(), [&](const auto& I) { return t >= I.first && t <= I.second; });
      if (!in) m += std::abs(u.value(t)) * b.dx();
    }
  }
  return m;
}

inline std::vector<std::pair<double, double>> interval_set(int s, double width, double j0 = 0.0) {
  std::vector<std::pair<double, double>> I;
  for (int j = 0; j < s; ++j) I.emplace_back(j0 + j - 0.5 * width, j0 + j + 0.5 * width);
  return I;
}

// Both sides of ||phi|| <= 2^s max_{l < s} ||Psi Delta^l phi|| for phi supported in Omega'.
inline DiffBound diff_bound_check(const LineFunction& phi, const Cutoffs& cut, double p) {
  require_exponent(p);
  DiffBound out;
  if (phi.is_zero()) {
    out.terms.assign(cut.s, 0.0);
    return out;
  }
  double outside = mass_outside(phi, interval_set(cut.s, cut.h1));
  if (outside > 1e-12) throw SupportViolation("mass " + std::to_string(outside) + " outside Omega'");
  out.lhs = ap_norm_line(phi, p).upper();
  double worst = 0.0;
  for (int l = 0; l < cut.s; ++l) {
    auto d = multiply(cut.Psi, line_difference(phi, l));
    double v = d.is_zero() ? 0.0 : ap_norm_line(d, p).value;
    out.terms.push_back(v);
    worst = std::max(worst, v);
  }
  out.rhs = std::ldexp(worst, cut.s);
  if (out.lhs > out.rhs + 1e-8)
    throw PropertyViolation("difference bound fails: " + std::to_string(out.lhs) + " > " + std::to_string(out.rhs));
  return out;
}

// sup over a grid of |Psi Delta^l (Theta phi) - Phi Delta^l phi|.
inline double commutation_check(const Cutoffs& cut, const std::function<cplx(double)>& phi, int l,
                                std::size_t points = 4096) {
  if (l < 0 || l > cut.s - 1) throw DomainError("commutation needs 0 <= l <= s - 1");
  auto theta_phi = [&](double t) { return cut.theta(t) * phi(t); };
  double worst = 0.0;
  for (std::size_t i = 0; i <= points; ++i) {
    double t = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points);
    cplx a = cut.psi(t) * pointwise_difference(theta_phi, t, l);
    cplx b = cut.phi(t) * pointwise_difference(phi, t, l);
    worst = std::max(worst, std::abs(a - b));
  }
  return worst;
}

// ------------------------------------------------------------------ coefficient extraction

namespace detail {

// Coefficients a_k, k in [-M/2, M/2), from samples at t_i = t0 + i/M.
inline std::vector<cplx> grid_coefficients(const std::vector<cplx>& samples, double t0) {
  const std::size_t M = samples.size();
  auto S = fft_forward(samples);
  const auto h = static_cast<std::int64_t>(M / 2);
  std::vector<cplx> a(M);
  for (std::int64_t k = -h; k < h; ++k) {
    auto idx = static_cast<std::size_t>(((k % static_cast<std::int64_t>(M)) + static_cast<std::int64_t>(M)) %
                                        static_cast<std::int64_t>(M));
    a[k + h] = S[idx] / static_cast<double>(M) * expi2pi(-static_cast<double>(k), t0);
  }
  return a;
}

// Truncation |k| <= K of the finer coefficients; the tail bound is the dropped fine mass plus
// the coarse/fine disagreement on the kept range.
inline std::pair<IntSeries, bool> two_grid_truncate(const std::vector<cplx>& coarse, const std::vector<cplx>& fine,
                                                    double tol) {
  const auto hc = static_cast<std::int64_t>(coarse.size() / 2), hf = static_cast<std::int64_t>(fine.size() / 2);
  std::vector<double> outside(hc + 1, 0.0);
  double total = 0.0;
  for (std::int64_t k = -hf; k < hf; ++k) total += std::abs(fine[k + hf]);
  double inside = 0.0, diff = 0.0;
  std::int64_t K = hc - 1;
  bool ok = false;
  for (std::int64_t k = 0; k < hc; ++k) {
    for (std::int64_t s : {k, -k}) {
      if (k == 0 && s == -k && s == k && inside > 0) break;
      inside += std::abs(fine[s + hf]);
      diff += std::abs(fine[s + hf] - coarse[s + hc]);
      if (k == 0) break;
    }
    if (total - inside + diff <= tol) {
      K = k;
      ok = true;
      break;
    }
  }
  IntSeries r;
  double kept = 0.0, dd = 0.0;
  for (std::int64_t k = -K; k <= K; ++k) {
    r.n.push_back(k);
    r.c.push_back(fine[k + hf]);
    kept += std::abs(fine[k + hf]);
    dd += std::abs(fine[k + hf] - coarse[k + hc]);
  }
  r.tail = std::max(0.0, total - kept) + dd;
  return {r, ok};
}

}  // namespace detail

// Fourier series of a smooth 1-periodic function given on [-1/2, 1/2).
inline IntSeries periodic_coefficients(const std::function<cplx(double)>& A, std::size_t grid, double tol,
                                       int escalations) {
  std::size_t G = detail::next_pow2(std::max<std::size_t>(grid, 16));
  auto sample = [&](std::size_t M) {
    std::vector<cplx> v(M);
    for (std::size_t i = 0; i < M; ++i) v[i] = A(-0.5 + static_cast<double>(i) / static_cast<double>(M));
    return v;
  };
  auto coarse = detail::grid_coefficients(sample(G), -0.5);
  for (int e = 0;; ++e) {
    auto fine = detail::grid_coefficients(sample(2 * G), -0.5);
    auto [r, ok] = detail::two_grid_truncate(coarse, fine, tol);
    if (ok || e >= escalations) return r;
    coarse = std::move(fine);
    G *= 2;
  }
}

// Fourier series of 1/gamma for a positive integer series gamma.
inline IntSeries reciprocal_coefficients(const PeriodicSeries& g, double tol, int escalations) {
  std::size_t M = detail::next_pow2(static_cast<std::size_t>(4 * (2 * g.N() + 1)));
  auto sample = [&](std::size_t m) {
    auto v = g.grid_values(m);
    for (auto& x : v) {
      if (!(x.real() > 0)) throw PropertyViolation("gamma is not positive on the grid");
      x = 1.0 / x;
    }
    return v;
  };
  auto coarse = detail::grid_coefficients(sample(M), 0.0);
  for (int e = 0;; ++e) {
    auto fine = detail::grid_coefficients(sample(2 * M), 0.0);
    auto [r, ok] = detail::two_grid_truncate(coarse, fine, tol);
    if (ok || e >= escalations) return r;
    coarse = std::move(fine);
    M *= 2;
  }
}

// Coefficients of the 1-periodic function Psi(t) D(t) on [-1/2, 1/2), |k - n| <= W per term.
inline IntSeries psi_times(const PerturbedPoly& D, const CompactFunction& psi, int W) {
  std::unordered_map<std::int64_t, cplx> m;
  m.reserve(D.size() * (2 * W + 1));
  for (const auto& t : D.terms())
    for (std::int64_t j = -W; j <= W; ++j) m[t.n + j] += t.c * psi.ft(static_cast<double>(j) - t.alpha);
  double X = static_cast<double>(W) - 0.5;
  double per = 2.0 * psi.weighted_tail(X) / (X - 1.0);
  return IntSeries::from_map(m, D.l1() * per);
}

// ------------------------------------------------------------------ stages

struct StageState {
  int l = 0;
  int m = 0;                        // s - l
  double delta_l = 0.0, eps_l = 0.0;
  std::int64_t N_l = 0;             // spectrum(q_l) lies in (N_l, N_hi]
  std::int64_t N_hi = 0;
  std::int64_t M_l = 0;
  IntSeries g_tilde;
  GammaP gp;
  PerturbedPoly q;                  // q_l
  std::vector<cplx> b;              // coefficients of p_l, aligned with q
  FactoredProduct Gamma;            // Gamma_l
  PerturbedPoly Q;                  // Q_l
  double b529 = 0.0, b531 = 0.0;
  std::vector<double> b530;         // index j - 1
  std::vector<Check> checks;
  std::vector<ResidualRow> rows;
  nlohmann::json diag = nlohmann::json::object();
};

struct PerturbContext {
  PerturbParams prm;
  Cutoffs cut;
  std::function<cplx(double)> f;    // target factor, already translated so Omega starts at 0
  double v_triple = 0.0;
  double phi_triple = 0.0;          // |||Phi|||
  double phi_moment = 0.0;          // ||2 pi t Phi(t)||_{A^p(R)}
  double delta = 0.0;

  double delta_l(int l) const { return delta / (2.0 * (prm.s - l + 1)); }
};

inline PerturbContext make_context(const PerturbParams& prm, double v_triple, std::function<cplx(double)> f) {
  prm.validate();
  if (!(v_triple > 0)) throw DomainError("v must be nonzero");
  PerturbContext ctx{prm, cutoffs(prm.s, prm.h, prm.h1, prm.h2), std::move(f), v_triple};
  ctx.phi_triple = triple_norm(ctx.cut.Phi);
  const double h = prm.h, h1 = prm.h1;
  auto tphi = make_compact(
      -0.5 * h1, 0.5 * h1, [h, h1](double t) { return cplx(kTwoPi * t * plateau_value(h, h1, t)); },
      default_step(h));
  ctx.phi_moment = ap_norm_line(LineFunction(tphi), prm.p).upper();
  ctx.delta = prm.eps * std::ldexp(1.0, -prm.s) / (2.0 * v_triple);
  return ctx;
}

namespace detail {

inline double gamma_l1(const FactoredProduct& G) { return G.empty() ? 1.0 : G.norm_pow(1.0); }
inline double gamma_lp(const FactoredProduct& G, double p) {
  return G.empty() ? 1.0 : std::pow(G.norm_pow(p), 1.0 / p);
}

inline std::int64_t gamma_reach(const FactoredProduct& G) {
  BigInt r = 0;
  for (const auto& f : G.factors()) r += BigInt(f.g->N()) * f.nu;
  if (r > BigInt(std::int64_t{1} << 60)) throw ScheduleInfeasible("Gamma degree exceeds 2^60");
  return r.convert_to<std::int64_t>();
}

inline double min_on_grid(const FactoredProduct& G, std::size_t points) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points; ++i) {
    cplx v = G.eval(static_cast<double>(i) / static_cast<double>(points));
    m = std::min(m, std::abs(v.imag()) > 1e-9 ? -1.0 : v.real());
  }
  return m;
}

}  // namespace detail

// The l'th inductive step: g_l, its partial sum, (P_l, gamma_l), N_l, M_l, q_l and the stage checks.
inline StageState stage_synthesize(const PerturbContext& ctx, const StageState& prev, int l) {
  const auto& sp = ctx.prm;
  if (l != prev.l + 1 || l > sp.s) throw DomainError("stages run in order 1..s");
  StageState st;
  st.l = l;
  st.m = sp.s - l;
  st.delta_l = ctx.delta_l(l);
  const double p = sp.p, dl = st.delta_l, P3 = ctx.phi_triple;
  const std::string tag = "stage " + std::to_string(l) + ": ";

  const double GA = detail::gamma_l1(prev.Gamma), Gp = detail::gamma_lp(prev.Gamma, p);
  if (!prev.Gamma.empty()) {
    double gmin = detail::min_on_grid(prev.Gamma, sp.positivity_grid);
    if (gmin < 1e-6) throw PropertyViolation("Gamma_" + std::to_string(l - 1) + " margin " + std::to_string(gmin));
  }

  // ||(Delta^{s-j} Q_{l-1})^||_1 for j = 1..l
  std::vector<double> DQ(l + 1, 0.0);
  for (int j = 1; j <= l; ++j) DQ[j] = prev.Q.diff(sp.s - j).l1();

  // g_l = Psi (Delta^m f / Gamma_{l-1} - Delta^m Q_{l-1}) and its partial sum
  const double tol_g = dl / (12.0 * P3 * GA);
  const auto& psi_base = *ctx.cut.Psi.pieces().front().base;
  std::size_t grid = sp.grid;
  int W = sp.window;
  double tol = tol_g;
  for (int e = 0;; ++e) {
    const int m = st.m;
    const auto& cut = ctx.cut;
    const auto& f = ctx.f;
    auto A = periodic_coefficients(
        [&](double t) { return cut.psi(t) == 0.0 ? cplx(0.0) : cut.psi(t) * pointwise_difference(f, t, m); }, grid,
        0.25 * tol, sp.escalations);
    IntSeries R;
    R.n = {0};
    R.c = {1.0};
    for (const auto& fac : prev.Gamma.factors()) {
      auto r = reciprocal_coefficients(*fac.g, 0.25 * tol / std::max(1.0, A.l1()), sp.escalations);
      R = multiply(R, dilate(r, fac.nu.convert_to<std::int64_t>()), sp.max_terms);
    }
    auto g = multiply(A, R, sp.max_terms);
    if (!prev.Q.empty()) g = add(g, psi_times(prev.Q.diff(m), psi_base, W), -1.0);
    st.g_tilde = std::move(g);
    if (P3 * GA * st.g_tilde.tail < dl / 6.0 || e >= sp.escalations) break;
    grid *= 2;
    W *= 2;
    tol *= 0.25;
  }
  const double gA = st.g_tilde.l1();

  // eps_l: the smallest of the five thresholds
  double eps = 0.5;
  nlohmann::json thr;
  auto take = [&](const char* name, double v) {
    thr[name] = num(v);
    if (v > 0 && std::isfinite(v)) eps = std::min(eps, v);
  };
  take("Gamma increment", dl / Gp);
  double dqmax = 0.0;
  for (int j = 1; j < l; ++j) dqmax = std::max(dqmax, DQ[j]);
  if (dqmax > 0) take("earlier differences", dl / (2.0 * P3 * dqmax * Gp));
  if (l > 1) take("earlier q", dl / (4.0 * P3 * Gp));
  if (DQ[l] > 0) take("current differences", dl / (2.0 * P3 * DQ[l] * Gp));
  if (gA > 0) take("P gamma - 1 term", dl / (6.0 * P3 * GA * gA));
  st.eps_l = 0.9 * eps;

  st.gp = lemma_gamma_P_search(p, st.eps_l, sp.gamma);
  const auto& gc = st.gp.conditions;
  const TrigPoly& P = st.gp.P;
  const double PA = coeff_norm(P, 1.0), gammaA = st.gp.gamma.l1();
  const double gamma_dist = gc.gamma_dist;

  // N_l from the lower-difference and translation thresholds
  const double B = gA * PA;
  std::int64_t lo = std::max(prev.N_hi, sp.N);
  std::int64_t N_l = lo;
  nlohmann::json nthr{{"floor", lo}};
  if (B > 0) {
    double tau9 = 0.9 * dl / (6.0 * GA * gammaA * B * ctx.phi_moment);
    std::int64_t n9 = sp.alpha.threshold(tau9, lo);
    nthr["translation"] = n9;
    N_l = std::max(N_l, n9);
    for (int j = 1; j < l; ++j) {
      double tau3 = 0.9 * std::pow(st.eps_l / B, 1.0 / (l - j)) / kTwoPi;
      std::int64_t n3 = sp.alpha.threshold(tau3, lo);
      nthr["lower difference j=" + std::to_string(j)] = n3;
      N_l = std::max(N_l, n3);
    }
  }
  st.N_l = N_l;

  // M_l: spectrum above N_l, disjoint products, separated Gamma
  const std::int64_t Kg = st.g_tilde.max_freq();
  const std::int64_t reach = detail::gamma_reach(prev.Gamma);
  std::int64_t M = 1;
  while (!(M - Kg > N_l && M > 2 * Kg && M > 2 * reach)) {
    if (M > (std::int64_t{1} << 52)) throw ScheduleInfeasible("M_" + std::to_string(l) + " exceeds 2^52");
    M *= 2;
  }
  st.M_l = M;
  const double top = static_cast<double>(M) * degree(P) + static_cast<double>(Kg);
  if (top > 9.0e15) throw ScheduleInfeasible("spectrum(p_" + std::to_string(l) + ") exceeds 2^53");

  // p_l = g~_l P_l(M_l t) and q_l by coefficient division
  if (static_cast<double>(st.g_tilde.size()) * static_cast<double>(P.size()) > sp.max_terms)
    throw ScheduleInfeasible("q_" + std::to_string(l) + " needs " +
                             std::to_string(st.g_tilde.size() * P.size()) + " terms");
  std::vector<PerturbedTerm> qt;
  qt.reserve(st.g_tilde.size() * P.size());
  st.b.reserve(qt.capacity());
  double b_alpha = 0.0;
  for (const auto& pt : P.terms()) {
    const std::int64_t jP = pt.freq.j;
    for (std::size_t i = 0; i < st.g_tilde.size(); ++i) {
      std::int64_t n = st.g_tilde.n[i] + M * jP;
      double a = sp.alpha(n);
      if (a == 0.0) throw DomainError("alpha_" + std::to_string(n) + " vanishes");
      cplx b = st.g_tilde.c[i] * pt.coef;
      cplx den = std::pow(std::polar(1.0, kTwoPi * a) - 1.0, st.m);
      qt.push_back({n, a, b / den});
      st.b.push_back(b);
      b_alpha += std::abs(b) * std::abs(a);
    }
  }
  st.q = PerturbedPoly(qt);
  // restore alignment of b with the sorted q
  {
    std::vector<std::size_t> idx(qt.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return qt[a].n < qt[b].n; });
    std::vector<cplx> bs(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) bs[i] = st.b[idx[i]];
    st.b = std::move(bs);
  }
  st.N_hi = std::max(st.q.max_n(), prev.N_hi);

  st.Gamma = prev.Gamma;
  st.Gamma.push(std::make_shared<const PeriodicSeries>(st.gp.gamma), BigInt(M));
  if (!st.Gamma.separated()) throw SeparationFailure("Gamma_" + std::to_string(l) + " is not separated");
  st.Q = prev.Q.joined(st.q);

  // checks
  auto& C = st.checks;
  C.push_back(lower_check(tag + "min gamma_l on grid", gc.gamma_min, GammaConditions::kMargin, "gamma/P lemma", true));
  C.push_back(upper_check(tag + "|gamma_l^(0) - 1|", std::abs(gc.gamma_hat0 - 1.0), 1e-12, "gamma/P lemma", true));
  C.push_back(lower_check(tag + "min gamma_l^(n)", gc.gamma_min_coeff, 0.0, "gamma/P lemma", true));
  C.push_back(upper_check(tag + "||gamma_l - 1||_p < eps_l", gamma_dist, st.eps_l, "gamma/P lemma"));
  C.push_back(lower_check(tag + "min spectrum(P_l)", gc.min_frequency, 1.0, "gamma/P lemma", true));
  C.push_back(upper_check(tag + "||P_l gamma_l - 1||_p < eps_l", gc.product_dist, st.eps_l, "gamma/P lemma"));

  double worst = 0.0, bmax = 0.0;
  auto dq = st.q.diff(st.m);
  for (std::size_t i = 0; i < st.b.size(); ++i) {
    worst = std::max(worst, std::abs(dq.terms()[i].c - st.b[i]));
    bmax = std::max(bmax, std::abs(st.b[i]));
  }
  C.push_back(upper_check(tag + "coefficient division: max |(Delta^{s-l} q_l)^ - b| / max |b|", bmax > 0 ? worst / bmax : 0.0,
                          1e-12, "coefficient division", true));
  C.push_back(lower_check(tag + "min spectral index of q_l - N_l", static_cast<double>(st.q.min_n() - N_l), 0.0,
                          "spectrum placement"));

  std::vector<double> L3(l, 0.0);
  for (int j = 1; j < l; ++j) {
    L3[j] = st.q.diff(sp.s - j).l1();
    C.push_back(upper_check(tag + "lower difference: ||(Delta^{s-" + std::to_string(j) + "} q_l)^||_1 < eps_l", L3[j],
                            st.eps_l, "exact l1"));
  }

  const double GlA = GA * gammaA, Glp = Gp * std::pow(ap_norm_torus(st.gp.gamma, p).value, 1.0);
  const double T1 = P3 * GA * st.g_tilde.tail;
  const double T2 = P3 * GA * gA * gc.product_dist;
  const double T3 = GlA * ctx.phi_moment * b_alpha;
  const double T4 = P3 * DQ[l] * Gp * gamma_dist;
  C.push_back(upper_check(tag + "partial sum tail: |||Phi||| ||Gamma_{l-1}||_A ||g_l - g~_l||_A < delta_l/6", T1,
                          dl / 6.0, "two-grid tail estimate"));
  C.push_back(upper_check(tag + "translation term < delta_l/6", T3, dl / 6.0,
                          "||Gamma_l||_A sum |b_n| |alpha_n| ||2 pi t Phi||"));
  st.b529 = T1 + T2 + T3 + T4;
  C.push_back(upper_check(tag + "stage residual: ||Phi Delta^{s-l}(f - Gamma_l Q_l)||_{A^p}", st.b529, dl,
                          "four-term bound"));
  st.rows.push_back({"stage residual: g - g~", l, p, T1, dl / 6.0, "partial sum tail"});
  st.rows.push_back({"stage residual: g~ (1 - P gamma)", l, p, T2, dl / 6.0, "product estimate"});
  st.rows.push_back({"stage residual: p_l - Delta^{s-l} q_l", l, p, T3, dl / 6.0, "translation bound"});
  st.rows.push_back({"stage residual: (1 - gamma) Delta^{s-l} Q_{l-1}", l, p, T4, dl / 2.0, "product estimate, separated"});
  st.rows.push_back({"stage residual", l, p, st.b529, dl, "sum"});

  st.b530.assign(l - 1, 0.0);
  for (int j = 1; j < l; ++j) {
    double v = P3 * DQ[j] * Gp * gamma_dist + P3 * Glp * L3[j];
    st.b530[j - 1] = v;
    C.push_back(upper_check(tag + "earlier-stage residual: j=" + std::to_string(j), v, dl, "difference and q bounds"));
    st.rows.push_back({"earlier-stage residual: j=" + std::to_string(j), l, p, v, dl, "difference and q bounds"});
  }
  st.b531 = Gp * gamma_dist;
  C.push_back(upper_check(tag + "Gamma increment: ||Gamma_l - Gamma_{l-1}||_{A^p}", st.b531, dl, "separated factorization"));
  st.rows.push_back({"Gamma increment", l, p, st.b531, dl, "separated factorization"});

  double gmin = detail::min_on_grid(st.Gamma, sp.positivity_grid);
  C.push_back(lower_check(tag + "min Gamma_l on grid", gmin, 0.0, "exact phases"));

  st.diag = {{"l", l}, {"delta_l", dl}, {"eps_l", st.eps_l}, {"eps_thresholds", thr}, {"N_thresholds", nthr},
             {"N_l", N_l}, {"N_hi", st.N_hi}, {"M_l", M}, {"g_terms", st.g_tilde.size()}, {"g_l1", gA},
             {"g_tail", st.g_tilde.tail}, {"g_max_freq", Kg}, {"q_terms", st.q.size()}, {"P_l1", PA},
             {"gamma_l1", gammaA}, {"Gamma_prev_l1", GA}, {"Gamma_prev_lp", Gp}, {"b_l1", B},
             {"gamma_P", st.gp.to_json()}, {"Gamma_min", gmin}};

  if (!sp.best_effort)
    for (const auto& c : C)
      if (!c.pass()) throw StageConditionFailure(c.name, c.measured, c.required);
  return st;
}

// ------------------------------------------------------------------ Gamma and Q

struct GammaQResult {
  FactoredProduct Gamma;
  PerturbedPoly Q;                  // in the original coordinates
  std::vector<StageState> stages;
  double vi_bound = 0.0;
  ConstructionReport report;
};

inline std::vector<CoefficientRow> gamma_q_rows(const GammaQResult& r, std::size_t cap) {
  std::vector<CoefficientRow> rows;
  for (const auto& st : r.stages) {
    const std::string l = std::to_string(st.l);
    for (std::int64_t k = -st.gp.gamma.N(); k <= st.gp.gamma.N(); ++k)
      if (st.gp.gamma[k] != 0.0) rows.push_back({"gamma_" + l, Frequency::integer(k), st.gp.gamma[k]});
    for (const auto& t : st.gp.P.terms()) rows.push_back({"P_" + l, t.freq, t.coef});
  }
  std::size_t emitted = 0;
  int stage = 0;
  for (const auto& t : r.Q.terms()) {
    int l = stage;
    for (const auto& st : r.stages)
      if (t.n > st.N_l && t.n <= st.q.max_n()) l = st.l;
    if (l != stage) {
      stage = l;
      emitted = 0;
    }
    if (emitted++ < cap)
      rows.push_back({"q_" + std::to_string(l), Frequency::real(static_cast<double>(t.n) + t.alpha), t.c});
  }
  return rows;
}

// Gamma and Q for v supported in the union of [j0 + j - h/2, j0 + j + h/2], j < s; v enters through |||v|||.
inline GammaQResult construct_gamma_q_core(const PerturbParams& prm, double v_triple,
                                           const std::function<cplx(double)>& f, std::int64_t j0 = 0) {
  auto fs = [f, j0](double t) { return f(t + static_cast<double>(j0)); };
  auto ctx = make_context(prm, v_triple, fs);
  GammaQResult out;
  auto& rep = out.report;
  rep.command = "build-almost-integer";
  rep.params = prm.to_json();
  rep.params["j0"] = j0;

  StageState st;
  st.N_hi = prm.N;
  std::vector<double> dsum;
  for (int l = 1; l <= prm.s; ++l) {
    st = stage_synthesize(ctx, st, l);
    for (const auto& c : st.checks) rep.add(c);
    for (const auto& r : st.rows) rep.residuals.push_back(r);
    out.stages.push_back(st);
  }
  out.Gamma = st.Gamma;
  out.Q = st.Q.translated(j0);
  const double p = prm.p;

  double dsum_all = 0.0;
  for (int l = 1; l <= prm.s; ++l) dsum_all += ctx.delta_l(l);
  rep.add(upper_check("sum_l delta_l < delta", dsum_all, ctx.delta, "schedule"));

  // properties of Gamma and Q
  double nonint = 0.0;
  for (const auto& fac : out.Gamma.factors()) nonint += fac.g ? 0.0 : 1.0;
  rep.add(upper_check("Gamma: factors without integer spectrum", nonint, 0.0, "construction", true));
  double gmin = detail::min_on_grid(out.Gamma, prm.positivity_grid);
  rep.add(lower_check("Gamma: min on grid", gmin, 0.0, "exact phases"));
  rep.add(upper_check("Gamma: |Gamma^(0) - 1|", std::abs(out.Gamma.hat0() - 1.0), 1e-12, "separated factorization",
                      true));
  rep.add(lower_check("Gamma: min Gamma^(n)", out.Gamma.min_coeff(), 0.0, "factor coefficients", true));
  double dist = std::pow(out.Gamma.dist_to_one_pow(p), 1.0 / p);
  rep.add(upper_check("Gamma: ||Gamma - 1||_{A^p}", dist, prm.eps, "separated factorization"));
  rep.add(lower_check("Q: min spectral index of Q - N", static_cast<double>(out.Q.min_n() - prm.N), 0.0,
                      "spectrum placement"));
  double mism = 0.0;
  for (const auto& t : out.Q.terms()) mism += (t.alpha == prm.alpha(t.n)) ? 0.0 : 1.0;
  rep.add(upper_check("Q: frequencies not of the form n + alpha_n", mism, 0.0, "provenance", true));

  // weighted residual: 2^s |||v||| max_l [stage_l + sum_{k > l} earlier_{k,l}]
  double worst = 0.0;
  for (int l = 1; l <= prm.s; ++l) {
    double b = out.stages[l - 1].b529;
    for (int k = l + 1; k <= prm.s; ++k) b += out.stages[k - 1].b530[l - 1];
    worst = std::max(worst, b);
  }
  out.vi_bound = std::ldexp(worst, prm.s) * v_triple;
  for (double q : {p, 2.0 * p}) {
    rep.add(upper_check("weighted residual: ||v (Gamma Q - f)||_{A^q}, q = " + csv_number(q), out.vi_bound, prm.eps,
                        "difference bound chain"));
    rep.residuals.push_back({"weighted residual", 0, q, out.vi_bound, prm.eps, "difference bound chain"});
  }

  for (const auto& stg : out.stages) {
    std::size_t k = 0;
    for (const auto& t : stg.q.terms()) {
      if (k++ >= prm.row_cap) break;
      rep.lambdas.push_back({t.n, Frequency::real(static_cast<double>(t.n) + t.alpha),
                             static_cast<double>(t.n) + t.alpha, 0.0, 0.0, "", "stage " + std::to_string(stg.l),
                             t.alpha});
    }
  }
  rep.coefficients = gamma_q_rows(out, prm.row_cap);
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& stg : out.stages) stages.push_back(stg.diag);
  rep.diagnostics = {{"stages", stages},          {"delta", ctx.delta},
                     {"v_triple", v_triple},      {"phi_triple", ctx.phi_triple},
                     {"phi_moment", ctx.phi_moment}, {"Q_terms", out.Q.size()},
                     {"Gamma_factors", out.Gamma.factors().size()}};
  return out;
}

inline GammaQResult construct_gamma_q(const PerturbParams& prm, const LineFunction& v,
                                      const std::function<cplx(double)>& f, std::int64_t j0 = 0) {
  prm.validate();
  if (v.is_zero()) throw DomainError("v must be nonzero");
  auto I = interval_set(prm.s, prm.h, static_cast<double>(j0));
  for (const auto& pc : v.pieces()) {
    bool in = std::any_of(I.begin(), I.end(), [&](const auto& J) {
      return pc.base->lo() >= J.first - 1e-12 && pc.base->hi() <= J.second + 1e-12;
    });
    if (!in) throw SupportViolation("v has a piece on [" + std::to_string(pc.base->lo()) + ", " +
                                    std::to_string(pc.base->hi()) + "] outside Omega");
  }
  return construct_gamma_q_core(prm, triple_norm(v), f, j0);
}

// v = sum_{j < s} rho((t - j0 - j)/width), a bump on each interval of Omega.
inline LineFunction interval_bumps(int s, double width, std::int64_t j0 = 0) {
  const Mollifier* R = &Mollifier::instance();
  LineFunction v;
  for (int j = 0; j < s; ++j) {
    double c = static_cast<double>(j0 + j);
    auto b = make_compact(c - 0.5 * width, c + 0.5 * width,
                          [R, c, width](double t) { return cplx(R->rho((t - c) / width)); }, default_step(width));
    v += LineFunction(b);
  }
  return v;
}

// ------------------------------------------------------------------ driver

struct AlmostIntegerSchedule {
  PerturbParams prm;                 // alpha, cutoffs and budgets; p, eps, N and s are set per step
  int L = 0;                        // sigma bumps centred at -L..L, so s = 2L + 1
  double sigma_h = 0.3, sigma_h1 = 0.4;
  int steps = 1;
  std::vector<LineFunction> targets;
  std::size_t probe_points = 2048;
  double probe_x = 40.0, probe_dx = 0.25, probe_window = 8.0;
};

struct AlmostIntegerStep {
  int k = 0;
  double p = 0.0, delta_k = 0.0, eps_k = 0.0, v_triple = 0.0;
  std::int64_t N_k = 0;
  GammaQResult gq;
};

struct AlmostIntegerRun {
  ConstructionReport report;
  std::vector<Weight> w;            // w = sum of the terms
  std::vector<AlmostIntegerStep> steps;

  cplx w_value(double t) const {
    cplx s = 0.0;
    for (const auto& u : w) s += u.value(t);
    return s;
  }
};

inline double weights_triple(const std::vector<Weight>& u) {
  double t = 0.0;
  for (const auto& x : u) t += x.triple_times(TrigPoly::constant(1.0));
  return t;
}

inline AlmostIntegerRun almost_integer_driver(const AlmostIntegerSchedule& sc, std::uint64_t seed = 0) {
  if (sc.steps < 1) throw DomainError("at least one step");
  if (!(sc.sigma_h1 <= sc.prm.h)) throw DomainError("sigma support must fit inside Omega (sigma_h1 <= h)");
  AlmostIntegerRun run;
  auto& rep = run.report;
  rep.command = "build-almost-integer";
  rep.seed = seed;
  const int s = 2 * sc.L + 1;
  const std::int64_t j0 = -sc.L;
  rep.params = sc.prm.to_json();
  rep.params["s"] = s;
  rep.params["L"] = sc.L;
  rep.params["sigma_h"] = sc.sigma_h;
  rep.params["sigma_h1"] = sc.sigma_h1;
  rep.params["steps"] = sc.steps;
  auto targets = sc.targets.empty() ? default_sparse_targets(LandauSet(sc.L, sc.sigma_h), sc.steps) : sc.targets;
  if (static_cast<int>(targets.size()) < sc.steps) throw ConfigError("one target per step");

  const Weight sigma(sigma_bump(sc.L, sc.sigma_h, sc.sigma_h1));
  // sup_p ||sigma||_{A^p} <= max(||sigma^||_1, ||sigma^||_inf) = max(sigma(0), sigma^(0)) for sigma^ >= 0
  const double sigma_ap = std::max(sigma.base.value(0.0).real(), sigma.base.ft(0.0).real());

  std::vector<Weight> u;
  std::vector<double> R;            // current bounds on ||u Q_j - chi_j||
  std::vector<double> Qone;         // ||Q_j^||_1
  std::int64_t N = 0;
  for (int k = 1; k <= sc.steps; ++k) {
    AlmostIntegerStep st;
    st.k = k;
    st.p = 1.0 + 1.0 / k;
    st.N_k = N;
    double dk = std::ldexp(1.0, -k - 1) / sigma_ap;
    for (int j = 1; j < k; ++j)
      dk = std::min(dk, 0.5 * (1.0 / j - R[j - 1]) / (sigma_ap * std::max(Qone[j - 1], 1e-300)));
    st.delta_k = 0.5 * dk;
    if (!(st.delta_k > 0)) throw ScheduleInfeasible("delta_" + std::to_string(k) + " is not positive");
    for (int j = 1; j < k; ++j) R[j - 1] += st.delta_k * sigma_ap * Qone[j - 1];

    std::vector<Weight> v = u;
    v.emplace_back(sigma.base.scaled(st.delta_k), FactoredProduct{}, st.delta_k * sigma.base_triple);
    st.v_triple = weights_triple(v);

    double ek = 1.0 / k;
    ek = std::min(ek, std::ldexp(1.0, -k - 1) / st.v_triple);
    for (int j = 1; j < k; ++j) ek = std::min(ek, 0.5 * (1.0 / j - R[j - 1]) / (st.v_triple * Qone[j - 1]));
    st.eps_k = 0.5 * ek;

    const auto& chi = targets[k - 1];
    auto vk = std::make_shared<std::vector<Weight>>(v);
    auto fk = [vk, chi](double t) -> cplx {
      cplx c = chi.value(t);
      if (c == 0.0) return 0.0;
      cplx d = 0.0;
      for (const auto& x : *vk) d += x.value(t);
      return c / d;
    };
    PerturbParams ps = sc.prm;
    ps.s = s;
    ps.p = st.p;
    ps.eps = st.eps_k;
    ps.N = N;
    st.gq = construct_gamma_q_core(ps, st.v_triple, fk, j0);
    for (const auto& c : st.gq.report.checks) {
      Check cc = c;
      cc.name = "step " + std::to_string(k) + ": " + c.name;
      rep.add(cc);
    }
    for (auto r : st.gq.report.residuals) {
      r.name = "step " + std::to_string(k) + " " + r.name;
      rep.residuals.push_back(r);
    }

    // u_k = v_k Gamma_k
    const double dist_k = std::pow(st.gq.Gamma.dist_to_one_pow(st.p), 1.0 / st.p);
    for (int j = 1; j < k; ++j) {
      double dj = std::pow(st.gq.Gamma.dist_to_one_pow(1.0 + 1.0 / j), 1.0 / (1.0 + 1.0 / j));
      R[j - 1] += st.v_triple * dj * Qone[j - 1];
    }
    (void)dist_k;
    u.clear();
    for (const auto& x : v) u.emplace_back(x.base, x.G.joined(st.gq.Gamma), x.base_triple);
    R.push_back(st.gq.vi_bound);
    Qone.push_back(st.gq.Q.l1());
    N = std::max(N, st.gq.Q.max_n());
    run.steps.push_back(std::move(st));
  }
  run.w = u;

  for (int j = 1; j <= sc.steps; ++j) {
    double pj = 1.0 + 1.0 / j;
    rep.residuals.push_back({"w Q_j - chi_j", j, pj, R[j - 1], 1.0 / j, "residual chain"});
    rep.add(upper_check("residual ||w Q_" + std::to_string(j) + " - chi_" + std::to_string(j) + "||_{A^{p_j}}",
                        R[j - 1], 1.0 / j, "residual chain"));
  }

  auto [lo, hi] = sigma.base.support();
  double wmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= sc.probe_points; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(sc.probe_points);
    cplx x = run.w_value(t);
    wmin = std::min(wmin, std::abs(x.imag()) > 1e-9 ? -1.0 : x.real());
  }
  rep.add(lower_check("min w on probe grid", wmin, -1e-9, "exact phases", true));

  double whmin = std::numeric_limits<double>::infinity();
  for (double x = -sc.probe_x; x <= sc.probe_x + 1e-12; x += sc.probe_dx) {
    cplx acc = 0.0;
    for (const auto& term : run.w)
      for (const auto& [mm, c] : term.G.spectrum_near(x, sc.probe_window))
        acc += c * term.base.ft(x - to_double(mm));
    whmin = std::min(whmin, std::abs(acc.imag()) > 1e-9 ? -1.0 : acc.real());
  }
  rep.add(lower_check("min w^ on probe grid", whmin, -1e-9, "partial sum of nonnegative terms", true));

  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : run.steps) {
    for (const auto& l : st.gq.report.lambdas) rep.lambdas.push_back(l);
    for (auto c : st.gq.report.coefficients) {
      c.object = "step " + std::to_string(st.k) + " " + c.object;
      rep.coefficients.push_back(c);
    }
    steps.push_back({{"k", st.k}, {"p", st.p}, {"delta_k", st.delta_k}, {"eps_k", st.eps_k},
                     {"v_triple", st.v_triple}, {"N_k", st.N_k}, {"lemma", st.gq.report.diagnostics}});
  }
  rep.diagnostics["steps"] = steps;
  return run;
}

}  // namespace spectral_forge
