#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "approx.hpp"
#include "blocks.hpp"
#include "errors.hpp"
#include "norms.hpp"
#include "report.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const BigInt& v) { return v.convert_to<double>(); }

inline std::string to_string(const BigInt& v) { return v.str(); }

// floor(x) as an exact integer.
inline BigInt big_floor(double x) {
  if (!std::isfinite(x)) throw DomainError("non-finite value has no integer part");
  double f = std::floor(x);
  if (std::abs(f) < 9.0e15) return BigInt(static_cast<std::int64_t>(f));
  int e = 0;
  double m = std::frexp(f, &e);
  BigInt r(static_cast<std::int64_t>(std::ldexp(m, 53)));
  return e >= 53 ? BigInt(r << (e - 53)) : BigInt(r >> (53 - e));
}

// Fractional part of nu * t, exact for the binary value of t.
inline double frac_mul(const BigInt& nu, double t) {
  if (t == 0.0 || nu == 0) return 0.0;
  int e = 0;
  double m = std::frexp(t, &e);
  auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
  int s = 53 - e;
  if (s <= 0) return 0.0;
  BigInt mod = BigInt(1) << s;
  BigInt r = (nu * mant) % mod;
  if (r < 0) r += mod;
  return std::ldexp(to_double(r), -s);
}

// ------------------------------------------------------------------ moments

// Upper bounds on sum |c|, sum |c||s| and sum |c| s^2 over the spectrum.
struct Moments {
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  double peetre() const { return m0 + m2; }
};

inline Moments moments(const TrigPoly& P) {
  Moments m;
  for (const auto& t : P.terms()) {
    double a = std::abs(t.coef), s = std::abs(t.freq.value());
    m.m0 += a;
    m.m1 += a * s;
    m.m2 += a * s * s;
  }
  return m;
}

// Moments of a product from those of the factors.
inline Moments convolve(const Moments& a, const Moments& b) {
  return {a.m0 * b.m0, a.m1 * b.m0 + a.m0 * b.m1, a.m2 * b.m0 + 2.0 * a.m1 * b.m1 + a.m0 * b.m2};
}

inline Moments dilated_moments(const PeriodicSeries& g, const BigInt& nu) {
  Moments m;
  double v = to_double(nu);
  for (std::int64_t n = -g.N(); n <= g.N(); ++n) {
    double a = std::abs(g[n]), s = std::abs(static_cast<double>(n)) * v;
    m.m0 += a;
    m.m1 += a * s;
    m.m2 += a * s * s;
  }
  return m;
}

// ------------------------------------------------------------------ factored products

struct Factor {
  std::shared_ptr<const PeriodicSeries> g;
  BigInt nu;
};

// prod_j g_j(nu_j t) for integer series g_j and positive integers nu_j.
class FactoredProduct {
 public:
  FactoredProduct() = default;

  void push(std::shared_ptr<const PeriodicSeries> g, BigInt nu) {
    if (nu <= 0) throw DomainError("dilation must be a positive integer");
    f_.push_back({std::move(g), std::move(nu)});
  }

  const std::vector<Factor>& factors() const { return f_; }
  bool empty() const { return f_.empty(); }

  FactoredProduct joined(const FactoredProduct& o) const {
    FactoredProduct r = *this;
    r.f_.insert(r.f_.end(), o.f_.begin(), o.f_.end());
    return r;
  }

  FactoredProduct replaced(std::size_t i, std::shared_ptr<const PeriodicSeries> g) const {
    FactoredProduct r = *this;
    r.f_.at(i).g = std::move(g);
    return r;
  }

  cplx eval(double t) const {
    cplx s = 1.0;
    for (const auto& f : f_) s *= f.g->eval(frac_mul(f.nu, t));
    return s;
  }

  Moments moments() const {
    Moments m{1.0, 0.0, 0.0};
    for (const auto& f : f_) m = convolve(m, dilated_moments(*f.g, f.nu));
    return m;
  }

  // True when (m_j) -> sum m_j nu_j is injective on |m_j| <= N_j, checked on exact integers.
  bool separated() const {
    auto idx = order();
    BigInt reach = 0;
    for (std::size_t i : idx) {
      if (f_[i].nu <= 2 * reach) return false;
      reach += BigInt(f_[i].g->N()) * f_[i].nu;
    }
    return true;
  }

  // sum |coef|^q over the expanded product; valid only when separated.
  double norm_pow(double q) const {
    require_separated();
    double s = 1.0;
    for (const auto& f : f_) {
      double t = 0.0;
      for (auto c : f.g->coeffs()) t += std::pow(std::abs(c), q);
      s *= t;
    }
    return s;
  }

  cplx hat0() const {
    require_separated();
    cplx s = 1.0;
    for (const auto& f : f_) s *= (*f.g)[0];
    return s;
  }

  // ||X - 1||_q^q for the expanded product X; valid only when separated.
  double dist_to_one_pow(double q) const {
    cplx c0 = hat0();
    return std::max(0.0, norm_pow(q) - std::pow(std::abs(c0), q)) + std::pow(std::abs(c0 - 1.0), q);
  }

  double min_coeff() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& f : f_)
      for (auto c : f.g->coeffs()) m = std::min(m, std::abs(c.imag()) > 1e-15 ? -1.0 : c.real());
    return m;
  }

  double expanded_size() const {
    double n = 1.0;
    for (const auto& f : f_) n *= static_cast<double>(2 * f.g->N() + 1);
    return n;
  }

  // Explicit product; dilations must fit in 64 bits.
  TrigPoly expand(double limit = 2e6) const {
    if (expanded_size() > limit) throw DomainError("expansion exceeds the size limit");
    TrigPoly r = TrigPoly::constant(1.0);
    for (const auto& f : f_) {
      if (f.nu > BigInt(std::numeric_limits<std::int64_t>::max() / 4))
        throw DomainError("dilation does not fit in 64 bits");
      r = r * dilate(f.g->to_trigpoly(), f.nu.convert_to<std::int64_t>());
    }
    return r;
  }

  // Spectrum points m with |m - x| <= W, with their coefficients (summed over representations).
  std::vector<std::pair<BigInt, cplx>> spectrum_near(double x, double W, std::size_t cap = 1000000) const {
    auto idx = order();
    std::reverse(idx.begin(), idx.end());
    std::vector<double> reach(idx.size() + 1, 0.0);
    for (std::size_t k = idx.size(); k-- > 0;)
      reach[k] = reach[k + 1] + static_cast<double>(f_[idx[k]].g->N()) * to_double(f_[idx[k]].nu);
    std::vector<std::pair<BigInt, cplx>> out;
    std::function<void(std::size_t, const BigInt&, cplx)> rec = [&](std::size_t k, const BigInt& S, cplx c) {
      double r = x - to_double(S);
      if (k == idx.size()) {
        if (std::abs(r) <= W) out.emplace_back(S, c);
        return;
      }
      const auto& f = f_[idx[k]];
      double nu = to_double(f.nu), span = W + reach[k + 1];
      double lo = std::ceil((r - span) / nu) - 1.0, hi = std::floor((r + span) / nu) + 1.0;
      auto N = static_cast<double>(f.g->N());
      lo = std::max(lo, -N);
      hi = std::min(hi, N);
      for (double m = lo; m <= hi; m += 1.0) {
        cplx a = (*f.g)[static_cast<std::int64_t>(m)];
        if (a == 0.0) continue;
        rec(k + 1, S + f.nu * static_cast<std::int64_t>(m), c * a);
        if (out.size() > cap) throw DomainError("spectrum enumeration exceeded its cap");
      }
    };
    rec(0, BigInt(0), 1.0);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<BigInt, cplx>> merged;
    for (auto& e : out) {
      if (!merged.empty() && merged.back().first == e.first)
        merged.back().second += e.second;
      else
        merged.push_back(e);
    }
    return merged;
  }

 private:
  std::vector<std::size_t> order() const {
    std::vector<std::size_t> idx(f_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f_[a].nu < f_[b].nu; });
    return idx;
  }

  void require_separated() const {
    if (!separated()) throw SeparationFailure("dilations are not separated");
  }

  std::vector<Factor> f_;
};

// ------------------------------------------------------------------ weights

// u = base * G with base compactly supported and G a factored trigonometric polynomial.
struct Weight {
  LineFunction base;
  FactoredProduct G;
  double base_triple = 0.0;

  Weight() = default;
  explicit Weight(LineFunction b) : base(std::move(b)), base_triple(triple_norm(base)) {}
  Weight(LineFunction b, FactoredProduct g, double bt) : base(std::move(b)), G(std::move(g)), base_triple(bt) {}

  bool plain() const { return G.empty(); }

  Weight times(const FactoredProduct& g) const { return Weight(base, G.joined(g), base_triple); }

  cplx value(double t) const {
    cplx b = base.value(t);
    return b == 0.0 ? b : b * G.eval(t);
  }

  // |||u R |||, exact for a plain weight, otherwise 2 |||base||| (m0 + m2) of G R.
  double triple_times(const TrigPoly& R, const FactoredProduct& extra = {}) const {
    if (plain() && extra.empty()) return triple_norm(base.times(R));
    Moments m = convolve(G.joined(extra).moments(), moments(R));
    return 2.0 * base_triple * m.peetre();
  }

  std::string method() const { return plain() ? "direct" : "peetre"; }
};

// ------------------------------------------------------------------ block builder

struct SparseBlockOptions {
  GammaOptions gamma;
  bool best_effort = false;
  int nu_max_steps = 400;       // multiply-by-4 escalations per dilation
  double expand_limit = 2e6;    // explicit expansion for direct checks
  std::size_t positivity_grid = kPositivityGrid;
};

struct SparseTerm {
  double sigma = 0.0;
  cplx c;
  double triple = 0.0;  // |||c u e^{2 pi i sigma t}|||
};

// lambda = ip + frac
struct BlockLambda {
  BigInt ip;
  double frac = 0.0;
  int block = 0;
  std::int64_t l = 0;

  double value() const { return to_double(ip) + frac; }
};

// (lambda_b - lambda_a) / lambda_a from exact components.
inline double relative_gap(const BlockLambda& a, const BlockLambda& b) {
  double gap = to_double(BigInt(b.ip - a.ip)) + (b.frac - a.frac);
  return gap / a.value();
}

struct BlockBuild {
  double d = 0.0;
  std::vector<BigInt> nu;
  FactoredProduct Gamma;
  TrigPoly Q;
  std::vector<BlockLambda> lambdas;
  std::vector<double> rel_gaps;   // (lambda_{j+1} - lambda_j) / lambda_j
  std::vector<double> block_dist;       // ||Gamma P(nu_n t) - 1||_p
  double vi_p = 0.0, vi_2p = 0.0;
  std::string vi_method;
  std::vector<Check> checks;
  nlohmann::json diag = nlohmann::json::object();

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
};

struct SparseBlocks {
  Weight u;
  std::vector<SparseTerm> terms;
  double p = 0.0, eta = 0.0, M = 0.0, eps = 0.0, delta = 0.0;
  std::int64_t L = 0;  // deg P
  std::shared_ptr<const GammaP> gp;
  std::shared_ptr<const PeriodicSeries> gamma, gammaP;
  SparseBlockOptions opt;

  // ||Gamma P(nu_n t) - 1||_q for the built Gamma, by the separated closed form.
  double block_dist(const FactoredProduct& Gamma, std::size_t n, double q) const {
    return std::pow(Gamma.replaced(n, gammaP).dist_to_one_pow(q), 1.0 / q);
  }

  std::vector<double> block_dists(const FactoredProduct& Gamma, double q) const {
    std::vector<double> r;
    for (std::size_t n = 0; n < terms.size(); ++n) r.push_back(block_dist(Gamma, n, q));
    return r;
  }

  // Product chain: sum_n |||c_n u e_n||| ||Gamma P(nu_n t) - 1||_{A^q(T)}.
  double vi_chain(const FactoredProduct& Gamma, double q) const {
    double s = 0.0;
    for (std::size_t n = 0; n < terms.size(); ++n) s += terms[n].triple * block_dist(Gamma, n, q);
    return s;
  }

  BlockBuild build(double d) const;
};

// H = sum c_n e^{2 pi i sigma_n t}; eps = eta / (4M), delta = 1 / (1 + deg P).
inline SparseBlocks lemma_sparse_blocks(const Weight& u, const TrigPoly& H, double p, double eta,
                                        const SparseBlockOptions& opt = {}) {
  if (!(p > 1)) throw InvalidExponent("block builder needs p > 1");
  if (!(eta > 0)) throw DomainError("eta must be positive");
  if (H.empty()) throw DomainError("H must have at least one term");
  SparseBlocks b;
  b.u = u;
  b.p = p;
  b.eta = eta;
  b.opt = opt;
  b.M = 1.0;
  for (const auto& t : H.terms()) {
    if (t.freq.kind == Frequency::Kind::Lattice) throw IncompatibleBase("H needs real or integer frequencies");
    SparseTerm s{t.freq.value(), t.coef, 0.0};
    s.triple = u.triple_times(TrigPoly::monomial(t.freq, t.coef));
    b.M += s.triple;
    b.terms.push_back(s);
  }
  b.eps = eta / (4.0 * b.M);
  if (!(b.eps > 0)) throw ScheduleInfeasible("eta / (4M) underflows");
  auto gp = std::make_shared<GammaP>(lemma_gamma_P_search(p, std::min(b.eps, 0.5), opt.gamma));
  if (!opt.best_effort) {
    if (!gp->fit_converged)
      throw GammaBudgetExhausted("analytic fit reached " + std::to_string(gp->fit.objective), gp);
    if (!gp->conditions.all()) throw PropertyViolation("gamma conditions failed");
  }
  b.gp = gp;
  b.L = gp->degree();
  b.delta = 1.0 / (1.0 + static_cast<double>(b.L));
  b.gamma = std::make_shared<const PeriodicSeries>(gp->gamma);
  b.gammaP = std::make_shared<const PeriodicSeries>(multiply(PeriodicSeries::from_trigpoly(gp->P), gp->gamma));
  return b;
}

inline BlockBuild SparseBlocks::build(double d) const {
  if (!(d > 0) || !std::isfinite(d)) throw DomainError("d must be positive and finite");
  BlockBuild out;
  out.d = d;
  const std::size_t K = terms.size();
  const std::int64_t NF = gamma->N();
  const BigInt width = 2 * BigInt(NF + L);

  // dilations: lambda_1 > d, 2 nu > sigma, separated, block ratios above 1 + delta
  BigInt nu1 = big_floor(d - terms[0].sigma) + 1;
  nu1 = std::max(nu1, big_floor(0.5 * std::max(terms[0].sigma, 0.0)) + 1);
  nu1 = std::max(nu1, BigInt(1));
  out.nu.push_back(nu1);
  BigInt sum = nu1;
  for (std::size_t n = 1; n < K; ++n) {
    BigInt nu = out.nu.back() * 4;
    int steps = 0;
    auto ok = [&](const BigInt& v) {
      if (v <= width * sum + nu1) return false;
      if (2.0 * to_double(v) <= terms[n].sigma) return false;
      double prev_last = terms[n - 1].sigma + static_cast<double>(std::max<std::int64_t>(L, 1)) * to_double(out.nu.back());
      return (terms[n].sigma + to_double(v)) / prev_last - 1.0 > delta;
    };
    while (!ok(nu)) {
      nu *= 4;
      if (++steps > opt.nu_max_steps) throw SeparationFailure("dilation escalation exhausted");
    }
    out.nu.push_back(nu);
    sum += nu;
  }
  for (std::size_t n = 0; n < K; ++n) out.Gamma.push(gamma, out.nu[n]);
  if (!out.Gamma.separated()) throw SeparationFailure("Gamma factors overlap");
  for (std::size_t n = 0; n < K; ++n)
    if (!out.Gamma.replaced(n, gammaP).separated()) throw SeparationFailure("Gamma P factors overlap");

  // blocks J_n = sigma_n + {nu_n, ..., L nu_n}
  std::vector<Term> qterms;
  for (std::size_t n = 0; n < K; ++n) {
    BigInt fl = big_floor(terms[n].sigma);
    double fr = terms[n].sigma - to_double(fl);
    for (const auto& t : gp->P.terms()) {
      std::int64_t l = t.freq.j;
      BlockLambda lam{fl + out.nu[n] * l, fr, static_cast<int>(n) + 1, l};
      out.lambdas.push_back(lam);
      qterms.push_back({Frequency::real(lam.value()), terms[n].c * t.coef});
    }
  }
  out.Q = TrigPoly(std::move(qterms));
  std::sort(out.lambdas.begin(), out.lambdas.end(), [](const BlockLambda& a, const BlockLambda& b) {
    return a.ip != b.ip ? a.ip < b.ip : a.frac < b.frac;
  });
  for (std::size_t j = 1; j < out.lambdas.size(); ++j)
    out.rel_gaps.push_back(relative_gap(out.lambdas[j - 1], out.lambdas[j]));

  // Gamma on a grid, exact phases
  double gmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < opt.positivity_grid; ++i) {
    cplx v = out.Gamma.eval(static_cast<double>(i) / static_cast<double>(opt.positivity_grid));
    gmin = std::min(gmin, std::abs(v.imag()) > 1e-9 ? -1.0 : v.real());
  }

  const double gK = std::pow(ap_norm_torus(*gamma, p).value, p * static_cast<double>(K));
  double gnorm_pow = 0.0;
  std::string id_method;
  if (out.Gamma.expanded_size() <= opt.expand_limit) {
    gnorm_pow = std::pow(coeff_norm(out.Gamma.expand(opt.expand_limit), p), p);
    id_method = "explicit expansion";
  } else {
    gnorm_pow = out.Gamma.norm_pow(p);
    id_method = "separated factorization";
  }
  double gamma_dist = std::pow(out.Gamma.dist_to_one_pow(p), 1.0 / p);

  out.block_dist = block_dists(out.Gamma, p);
  bool direct = u.plain() && out.Gamma.expanded_size() * static_cast<double>(gp->P.size() + 1) <= opt.expand_limit;
  if (direct) {
    TrigPoly H;
    for (const auto& t : terms) H = H + TrigPoly::monomial(Frequency::real(t.sigma), t.c);
    TrigPoly R = out.Gamma.expand(opt.expand_limit) * out.Q - H;
    LineFunction f = u.base.times(R);
    out.vi_p = ap_norm_line(f, p).upper();
    out.vi_2p = ap_norm_line(f, 2.0 * p).upper();
    out.vi_method = "direct";
  } else {
    out.vi_p = vi_chain(out.Gamma, p);
    out.vi_2p = vi_chain(out.Gamma, 2.0 * p);
    out.vi_method = "product chain (" + u.method() + " triple norms)";
  }

  double min_gap = out.rel_gaps.empty() ? std::numeric_limits<double>::infinity()
                                        : *std::min_element(out.rel_gaps.begin(), out.rel_gaps.end());
  double excess = std::numeric_limits<double>::quiet_NaN();
  if (!out.lambdas.empty()) {
    const auto& l1 = out.lambdas.front();
    BigInt df = big_floor(d);
    excess = (to_double(BigInt(l1.ip - df)) + (l1.frac - (d - std::floor(d)))) / d;
  }
  out.checks.push_back(lower_check("(lambda_1 - d) / d", excess, 0.0, "exact integer parts"));
  out.checks.push_back(lower_check("min (lambda_{j+1} - lambda_j) / lambda_j > delta", min_gap, delta,
                                   "exact integer parts"));
  out.checks.push_back(upper_check("|Gamma^(0) - 1|", std::abs(out.Gamma.hat0() - 1.0), 1e-12, "separated", true));
  out.checks.push_back(lower_check("min Gamma^(n)", out.Gamma.min_coeff(), 0.0, "factor coefficients", true));
  out.checks.push_back(lower_check("min Gamma on grid", gmin, 0.0, "exact phases"));
  out.checks.push_back(upper_check("||Gamma - 1||_p", gamma_dist, eta, "separated"));
  out.checks.push_back(upper_check("| ||Gamma||_p^p - ||gamma||_p^{pK} |", std::abs(gnorm_pow - gK), 1e-8, id_method,
                                   true));
  for (std::size_t n = 0; n < K; ++n)
    out.checks.push_back(upper_check("||Gamma P(nu_" + std::to_string(n + 1) + " t) - 1||_p", out.block_dist[n], eta / M,
                                     "separated"));
  out.checks.push_back(upper_check("||u (Gamma Q - H)||_{A^p}", out.vi_p, eta, out.vi_method));
  out.checks.push_back(upper_check("||u (Gamma Q - H)||_{A^{2p}}", out.vi_2p, eta, out.vi_method));

  nlohmann::json nus = nlohmann::json::array();
  for (const auto& v : out.nu) nus.push_back(to_string(v));
  out.diag = {{"nu", nus},
              {"delta", delta},
              {"deg_P", L},
              {"fejer_order", NF},
              {"eps", eps},
              {"M", M},
              {"gamma_norm_pow_K", gK},
              {"Gamma_norm_pow", gnorm_pow},
              {"block_dist", out.block_dist},
              {"gamma_P", gp->to_json()}};
  return out;
}

// ------------------------------------------------------------------ driver

struct EpsSchedule {
  std::string name = "inv_log";  // eps_n = 1/log(n+3)
  double c = 1.0;

  double operator()(std::int64_t n) const {
    if (name == "inv_log") return c / std::log(static_cast<double>(n) + 3.0);
    if (name == "inv_sqrt") return c / std::sqrt(static_cast<double>(n) + 1.0);
    if (name == "inv") return c / (static_cast<double>(n) + 1.0);
    throw ConfigError("unknown eps schedule '" + name + "'");
  }
};

struct SparseSchedule {
  EpsSchedule eps;
  double lambda0 = 1.0;
  int steps = 3;
  int h_terms = 3;
  std::int64_t filler_budget = 128;
  LandauSet omega{1, 0.5};
  double h1 = 0.6;
  std::vector<LineFunction> targets;  // chi_k, defaults when empty
  SparseBlockOptions block;
  std::size_t probe_points = 2048;
  double probe_x = 40.0, probe_dx = 0.25, probe_window = 8.0;
};

inline double sigma_n(std::int64_t n) { return static_cast<double>(n) + 0.3 / static_cast<double>(n + 1); }

// Gaussian bumps cut off inside the Landau set.
inline std::vector<LineFunction> default_sparse_targets(const LandauSet& om, int K) {
  std::vector<LineFunction> out;
  const double inner = 0.6 * om.h, outer = 0.9 * om.h;
  for (int k = 1; k <= K; ++k) {
    double c = 0.5 * static_cast<double>(k - 2);
    LineFunction chi;
    for (int l = -om.L; l <= om.L; ++l) {
      auto b = make_compact(
          l - 0.5 * outer, l + 0.5 * outer,
          [=](double t) { return cplx(std::exp(-std::numbers::pi * (t - c) * (t - c)) * plateau_value(inner, outer, t - l)); },
          default_step(inner));
      chi += LineFunction(b);
    }
    out.push_back(chi);
  }
  return out;
}

struct SparseStep {
  int k = 0;
  double p = 0.0, eta = 0.0, delta = 0.0;
  std::int64_t N_k = 0, M_k = 0, N_next = 0;
  double d = 0.0;
  TrigPoly H;
  SparseBlocks blocks;
  BlockBuild build;
};

struct SparseRun {
  ConstructionReport report;
  Weight w;
  std::vector<SparseStep> steps;
};

// Least squares H = sum c_n e^{2 pi i sigma_n t} against chi on the support of u.
inline TrigPoly fit_h(const Weight& u, const LineFunction& chi, std::int64_t first, int count, std::size_t points) {
  auto [lo, hi] = u.base.support();
  std::vector<double> ts;
  for (std::size_t i = 0; i <= points; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points);
    if (u.base.value(t) != 0.0) ts.push_back(t);
  }
  Eigen::MatrixXcd A(ts.size(), count);
  Eigen::VectorXcd y(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    cplx uw = u.value(ts[i]);
    y(i) = chi.value(ts[i]);
    for (int n = 0; n < count; ++n) A(i, n) = uw * expi2pi(sigma_n(first + n), ts[i]);
  }
  Eigen::VectorXcd c = A.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(y);
  std::vector<Term> t;
  for (int n = 0; n < count; ++n) t.push_back({Frequency::real(sigma_n(first + n)), c(n)});
  return TrigPoly(std::move(t));
}

inline SparseRun sparse_driver(const SparseSchedule& sc, std::uint64_t seed = 0) {
  if (sc.steps < 1) throw DomainError("at least one step");
  if (!(sc.lambda0 > 0)) throw DomainError("lambda_0 must be positive");
  SparseRun run;
  auto& rep = run.report;
  rep.command = "build-sparse";
  rep.seed = seed;
  rep.params = {{"eps_schedule", sc.eps.name}, {"eps_scale", sc.eps.c}, {"lambda0", sc.lambda0},
                {"steps", sc.steps}, {"h_terms", sc.h_terms}, {"filler_budget", sc.filler_budget},
                {"L", sc.omega.L}, {"h", sc.omega.h}, {"h1", sc.h1}, {"best_effort", sc.block.best_effort}};
  auto targets = sc.targets.empty() ? default_sparse_targets(sc.omega, sc.steps) : sc.targets;
  if (static_cast<int>(targets.size()) < sc.steps) throw ConfigError("one target per step");

  const Weight u0(sigma_bump(sc.omega.L, sc.omega.h, sc.h1));
  Weight u = u0;
  std::vector<Weight> history{u0};
  std::vector<BlockLambda> lam{{big_floor(sc.lambda0), sc.lambda0 - std::floor(sc.lambda0), 0, 0}};
  std::vector<std::string> prov{"lambda_0"};
  std::vector<TrigPoly> Qs;
  std::vector<FactoredProduct> Gammas;

  for (int k = 1; k <= sc.steps; ++k) {
    SparseStep st;
    st.k = k;
    st.p = 1.0 + 1.0 / k;
    st.N_k = static_cast<std::int64_t>(lam.size()) - 1;
    st.H = fit_h(u, targets[k - 1], static_cast<std::int64_t>(k - 1) * sc.h_terms + 1, sc.h_terms, sc.probe_points);

    double load = 1.0 + u.triple_times(TrigPoly::constant(1.0));
    for (const auto& Q : Qs) load += u.triple_times(Q);
    st.eta = 0.5 * std::ldexp(1.0, -k) / k / load;
    if (!(st.eta > 0) || !std::isfinite(load)) throw ScheduleInfeasible("eta_" + std::to_string(k) + " underflows");

    st.blocks = lemma_sparse_blocks(u, st.H, st.p, st.eta, sc.block);
    st.delta = st.blocks.delta;

    // fillers until eps_{M_k} < delta_k
    std::int64_t added = 0;
    while (sc.eps(static_cast<std::int64_t>(lam.size()) - 1) >= st.delta && added < sc.filler_budget) {
      std::int64_t n = static_cast<std::int64_t>(lam.size()) - 1;
      double v = (1.0 + sc.eps(n)) * lam.back().value() * 1.0001;
      lam.push_back({big_floor(v), v - std::floor(v), 0, 0});
      prov.push_back("filler step " + std::to_string(k));
      ++added;
    }
    st.M_k = static_cast<std::int64_t>(lam.size()) - 1;
    double eps_M = sc.eps(st.M_k);
    if (eps_M >= st.delta && !sc.block.best_effort)
      throw ScheduleInfeasible("eps_M < delta needs more than " + std::to_string(sc.filler_budget) + " fillers");
    rep.add(upper_check("step " + std::to_string(k) + ": eps_{M_k} < delta_k", eps_M, st.delta, "filler budget"));

    st.d = (1.0 + eps_M) * lam.back().value();
    st.build = st.blocks.build(st.d);
    for (const auto& c : st.build.checks) {
      Check cc = c;
      cc.name = "step " + std::to_string(k) + ": " + c.name;
      rep.add(cc);
    }
    for (const auto& b : st.build.lambdas) {
      lam.push_back(b);
      prov.push_back("step " + std::to_string(k) + " block " + std::to_string(b.block) + " l=" +
                     std::to_string(b.l) + " int=" + to_string(b.ip));
    }
    st.N_next = static_cast<std::int64_t>(lam.size()) - 1;
    Qs.push_back(st.build.Q);
    Gammas.push_back(st.build.Gamma);
    u = u.times(st.build.Gamma);
    history.push_back(u);
    run.steps.push_back(std::move(st));
  }
  run.w = u;

  // ratio certificates
  double worst = std::numeric_limits<double>::infinity();
  std::int64_t violations = 0;
  for (std::size_t n = 1; n < lam.size(); ++n) {
    double g = relative_gap(lam[n - 1], lam[n]);
    double e = sc.eps(static_cast<std::int64_t>(n) - 1);
    worst = std::min(worst, g - e);
    if (!(g > e)) ++violations;
    rep.lambdas.push_back({static_cast<std::int64_t>(n), Frequency::real(lam[n].value()), lam[n].value(), 1.0 + g,
                           1.0 + e, "", prov[n]});
  }
  rep.add(lower_check("min (lambda_{n+1}/lambda_n - 1) - eps_n", worst, 0.0, "exact integer parts"));

  // residuals ||w Q_k - chi_k||_{A^{p_k}} by the three-term split
  const int K = sc.steps;
  for (int k = 1; k <= K; ++k) {
    const auto& st = run.steps[k - 1];
    double p = st.p;
    const Weight& uk1 = history[k - 1];
    LineFunction first = u0.base.times(st.H) - targets[k - 1];
    double t1 = ap_norm_line(first, p).upper();
    for (int j = 1; j < k; ++j)
      t1 += history[j - 1].triple_times(st.H) * std::pow(Gammas[j - 1].dist_to_one_pow(p), 1.0 / p);
    double t2 = 0.0;
    for (std::size_t n = 0; n < st.blocks.terms.size(); ++n)
      t2 += uk1.triple_times(TrigPoly::monomial(Frequency::real(st.blocks.terms[n].sigma), st.blocks.terms[n].c)) *
            st.blocks.block_dist(st.build.Gamma, n, p);
    double t3 = 0.0;
    for (int j = k + 1; j <= K; ++j)
      t3 += history[j - 1].triple_times(Qs[k - 1]) * std::pow(Gammas[j - 1].dist_to_one_pow(p), 1.0 / p);
    std::string m1 = k == 1 ? "direct" : "direct + peetre telescoping";
    rep.residuals.push_back({"u_{k-1} H_k - chi_k", k, p, t1, 1.0 / k, m1});
    rep.residuals.push_back({"u_{k-1} (Gamma_k Q_k - H_k)", k, p, t2, st.eta, "product chain (" + uk1.method() + ")"});
    rep.residuals.push_back({"(w - u_k) Q_k", k, p, t3, 1.0 / k, "peetre telescoping"});
    double total = t1 + t2 + t3;
    rep.residuals.push_back({"w Q_k - chi_k", k, p, total, 2.0 / k + 0.05, "sum of the three terms"});
    rep.add(upper_check("residual ||w Q_" + std::to_string(k) + " - chi_" + std::to_string(k) + "||_{A^{p_k}}", total,
                        2.0 / k + 0.05, "three-term bound"));
  }

  // w and its transform on probe grids
  auto [lo, hi] = u0.base.support();
  double wmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i <= sc.probe_points; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(sc.probe_points);
    cplx v = run.w.value(t);
    wmin = std::min(wmin, std::abs(v.imag()) > 1e-9 ? -1.0 : v.real());
  }
  rep.add(lower_check("min w on probe grid", wmin, -1e-9, "exact phases", true));

  FactoredProduct G;
  for (const auto& g : Gammas) G = G.joined(g);
  double whmin = std::numeric_limits<double>::infinity();
  for (double x = -sc.probe_x; x <= sc.probe_x + 1e-12; x += sc.probe_dx) {
    cplx s = 0.0;
    for (const auto& [m, c] : G.spectrum_near(x, sc.probe_window))
      s += c * u0.base.ft(x - to_double(m));
    whmin = std::min(whmin, std::abs(s.imag()) > 1e-9 ? -1.0 : s.real());
  }
  rep.add(lower_check("min w^ on probe grid", whmin, -1e-9, "partial sum of nonnegative terms", true));

  for (int k = 1; k <= K; ++k)
    for (const auto& t : run.steps[k - 1].build.Q.terms())
      rep.coefficients.push_back({"Q_" + std::to_string(k), t.freq, t.coef});

  nlohmann::json steps = nlohmann::json::array();
  for (const auto& st : run.steps)
    steps.push_back({{"k", st.k}, {"p", st.p}, {"eta", st.eta}, {"delta", st.delta}, {"N_k", st.N_k},
                     {"M_k", st.M_k}, {"N_next", st.N_next}, {"d", st.d}, {"H", to_json(st.H)},
                     {"blocks", st.build.diag}});
  rep.diagnostics["steps"] = steps;
  rep.diagnostics["ratio_violations"] = violations;
  rep.diagnostics["lambda_count"] = static_cast<std::int64_t>(lam.size()) - 1;
  return run;
}

}  // namespace spectral_forge
