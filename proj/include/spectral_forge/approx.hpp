#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "blocks.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "norms.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

struct SolverDiagnostics {
  std::int64_t N_final = 0;
  long iterations = 0;
  std::vector<double> objective_trace;
  double condition_estimate = 0.0;

  void record(double v) {
    objective_trace.push_back(v);
    if (objective_trace.size() > 64) {
      std::vector<double> d;
      for (std::size_t i = 0; i < objective_trace.size(); i += 2) d.push_back(objective_trace[i]);
      if (d.back() != objective_trace.back()) d.push_back(objective_trace.back());
      objective_trace = std::move(d);
    }
  }

  nlohmann::json to_json() const {
    return {{"N_final", N_final}, {"iterations", iterations},
            {"objective_trace", objective_trace}, {"condition_estimate", condition_estimate}};
  }
};

struct FitOptions {
  std::int64_t N_start = 32;
  std::int64_t N_cap = 4096;
  long max_iterations = 100000;
  long level_iterations = 100000;
  double rel_tol = 1e-10;
  double stall_ratio = 0.99;
  int stall_levels = 2;
  bool warm_start = true;
};

struct AnalyticFit {
  std::vector<cplx> coeffs;  // coeffs[j] multiplies e^{2 pi i (j+1) t}
  double objective = std::numeric_limits<double>::infinity();
  double uncertainty = 0.0;
  bool converged = false;
  SolverDiagnostics diag;

  TrigPoly poly() const {
    std::vector<Term> t;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
      t.push_back({Frequency::integer(static_cast<std::int64_t>(j) + 1), coeffs[j]});
    return TrigPoly(std::move(t));
  }
};

namespace detail {

// r = phi * c - chi over the frequencies where either side lives, c supported on {1..N}.
class AnalyticResidual {
 public:
  AnalyticResidual(const PeriodicSeries& phi, const PeriodicSeries& chi, double p, std::int64_t N)
      : p_(p), N_(N), Nf_(phi.N()) {
    len_ = N_ + 2 * Nf_;
    M_ = next_pow2(static_cast<std::size_t>(len_ + 1));
    std::vector<cplx> a(M_, 0.0);
    for (std::int64_t k = 0; k <= 2 * Nf_; ++k) a[k] = phi.coeffs()[k];
    fft_.fwd(Fphi_, a);
    // conv index i <-> frequency i + 1 - Nf
    chi_in_.assign(len_, 0.0);
    chi_out_ = 0.0;
    for (std::int64_t n = -chi.N(); n <= chi.N(); ++n) {
      std::int64_t i = n - 1 + Nf_;
      if (i >= 0 && i < len_)
        chi_in_[i] = chi[n];
      else
        chi_out_ += std::pow(std::abs(chi[n]), p_);
    }
  }

  std::int64_t N() const { return N_; }

  std::vector<cplx> apply(const std::vector<cplx>& c) {
    std::vector<cplx> a(M_, 0.0), A, out;
    std::copy(c.begin(), c.end(), a.begin());
    fft_.fwd(A, a);
    for (std::size_t k = 0; k < M_; ++k) A[k] *= Fphi_[k];
    fft_.inv(out, A);
    out.resize(len_);
    return out;
  }

  std::vector<cplx> adjoint(const std::vector<cplx>& g) {
    std::vector<cplx> a(M_, 0.0), A, out;
    std::copy(g.begin(), g.end(), a.begin());
    fft_.fwd(A, a);
    for (std::size_t k = 0; k < M_; ++k) A[k] *= std::conj(Fphi_[k]);
    fft_.inv(out, A);
    out.resize(N_);
    return out;
  }

  // Sum |r|^p and its gradient with respect to c.
  double value(const std::vector<cplx>& c, std::vector<cplx>* grad) {
    auto r = apply(c);
    double f = chi_out_;
    std::vector<cplx> g(grad ? len_ : 0);
    for (std::int64_t i = 0; i < len_; ++i) {
      r[i] -= chi_in_[i];
      double m = std::abs(r[i]);
      f += std::pow(m, p_);
      if (grad && m > 0) g[i] = p_ * std::pow(m, p_ - 2.0) * r[i];
    }
    if (grad) *grad = adjoint(g);
    return f;
  }

  // Normal equations of the p = 2 problem, Toeplitz with lag a(j - k).
  void normal_equations(std::vector<cplx>& lag, std::vector<cplx>& rhs) {
    std::vector<cplx> P(M_), out;
    for (std::size_t k = 0; k < M_; ++k) P[k] = std::norm(Fphi_[k]);
    fft_.inv(out, P);
    lag.assign(out.begin(), out.begin() + N_);
    rhs = adjoint(chi_in_);
  }

 private:
  double p_;
  std::int64_t N_, Nf_, len_;
  std::size_t M_;
  Eigen::FFT<double> fft_;
  std::vector<cplx> Fphi_, chi_in_;
  double chi_out_ = 0.0;
};

inline bool all_real(const std::vector<cplx>& v) {
  return std::all_of(v.begin(), v.end(), [](cplx z) { return z.imag() == 0.0; });
}

// Extreme eigenvalue ratio of a Hermitian positive definite matrix by power and inverse power iteration.
template <class Mat, class Solver>
double spectral_condition(const Mat& G, const Solver& llt, int iters = 30) {
  using Vec = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>;
  const auto N = G.rows();
  Vec v = Vec::Ones(N) / std::sqrt(static_cast<double>(N));
  double lmax = 0.0, inv = 0.0;
  for (int i = 0; i < iters; ++i) {
    Vec w = G * v;
    lmax = w.norm();
    v = w / lmax;
  }
  v = Vec::Ones(N) / std::sqrt(static_cast<double>(N));
  for (int i = 0; i < iters; ++i) {
    Vec w = llt.solve(v);
    inv = w.norm();
    v = w / inv;
  }
  return lmax * inv;
}

// Regularized least squares with Toeplitz normal matrix; returns the condition estimate.
inline double toeplitz_solve(const std::vector<cplx>& lag, const std::vector<cplx>& rhs,
                             std::vector<cplx>& x) {
  const auto N = static_cast<Eigen::Index>(rhs.size());
  double mu = kGramRegularization * lag[0].real();
  double cond = 0.0;
  x.assign(N, 0.0);
  if (all_real(lag) && all_real(rhs)) {
    Eigen::MatrixXd G(N, N);
    Eigen::VectorXd b(N);
    for (Eigen::Index j = 0; j < N; ++j) {
      b(j) = rhs[j].real();
      for (Eigen::Index k = 0; k < N; ++k) G(j, k) = lag[std::abs(j - k)].real();
      G(j, j) += mu;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    Eigen::VectorXd s = llt.solve(b);
    cond = spectral_condition(G, llt);
    for (Eigen::Index j = 0; j < N; ++j) x[j] = s(j);
  } else {
    Eigen::MatrixXcd G(N, N);
    Eigen::VectorXcd b(N);
    for (Eigen::Index j = 0; j < N; ++j) {
      b(j) = rhs[j];
      for (Eigen::Index k = 0; k < N; ++k) G(j, k) = j >= k ? lag[j - k] : std::conj(lag[k - j]);
      G(j, j) += mu;
    }
    Eigen::LLT<Eigen::MatrixXcd> llt(G);
    Eigen::VectorXcd s = llt.solve(b);
    cond = spectral_condition(G, llt);
    for (Eigen::Index j = 0; j < N; ++j) x[j] = s(j);
  }
  return cond;
}

inline double re_dot(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

// L-BFGS with backtracking on sum |r|^p; stops at rel_tol, the iteration cap, or below target.
inline double lbfgs(AnalyticResidual& R, std::vector<cplx>& x, long max_iter, double rel_tol,
                    double target_pow, SolverDiagnostics& diag, double p) {
  const std::size_t m = 10;
  std::vector<cplx> g;
  double f = R.value(x, &g);
  std::deque<std::vector<cplx>> S, Y;
  std::deque<double> rho;
  int small_steps = 0;
  for (long it = 0; it < max_iter && f > target_pow; ++it) {
    std::vector<cplx> d(g);
    std::vector<double> alpha(S.size());
    for (std::size_t k = S.size(); k-- > 0;) {
      alpha[k] = rho[k] * re_dot(S[k], d);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[k] * Y[k][i];
    }
    double gamma = 1.0;
    if (!S.empty()) gamma = re_dot(S.back(), Y.back()) / re_dot(Y.back(), Y.back());
    else gamma = 1.0 / std::max(1e-300, std::sqrt(re_dot(g, g)));
    for (auto& v : d) v *= gamma;
    for (std::size_t k = 0; k < S.size(); ++k) {
      double beta = rho[k] * re_dot(Y[k], d);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha[k] - beta) * S[k][i];
    }
    for (auto& v : d) v = -v;
    double slope = re_dot(g, d);
    if (!(slope < 0)) {
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = -g[i];
      slope = -re_dot(g, g);
      S.clear();
      Y.clear();
      rho.clear();
    }
    double step = 1.0, fn = f;
    std::vector<cplx> xn(x.size()), gn;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + step * d[i];
      fn = R.value(xn, &gn);
      if (fn <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++diag.iterations;
    if (!accepted) break;
    std::vector<cplx> s(x.size()), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i] = xn[i] - x[i];
      y[i] = gn[i] - g[i];
    }
    double sy = re_dot(s, y);
    if (sy > 1e-300) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (S.size() > m) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    double rel = (f - fn) / std::max(f, 1e-300);
    x.swap(xn);
    g.swap(gn);
    f = fn;
    if (it % 16 == 0) diag.record(std::pow(f, 1.0 / p));
    small_steps = rel < rel_tol ? small_steps + 1 : 0;
    if (small_steps >= 3) break;
  }
  diag.record(std::pow(f, 1.0 / p));
  return f;
}

}  // namespace detail

// Analytic P (spectrum in {1..N}) minimizing ||P phi - chi||_p, N doubled until below eps/2.
inline AnalyticFit fit_analytic_search(const PeriodicSeries& phi, const PeriodicSeries& chi, double p,
                                       double eps, const FitOptions& opt = {}) {
  require_exponent(p);
  if (!(p > 1)) throw InvalidExponent("fit needs p > 1");
  const double target = 0.5 * eps;
  const double target_pow = std::pow(target, p);
  AnalyticFit best;
  std::vector<cplx> prev;
  int stalled = 0;
  double last_level = std::numeric_limits<double>::infinity();
  long total = 0;
  for (std::int64_t N = opt.N_start;; N = std::min(2 * N, opt.N_cap)) {
    detail::AnalyticResidual R(phi, chi, p, N);
    SolverDiagnostics diag = best.diag;
    diag.N_final = N;
    std::vector<cplx> x(N, 0.0);
    double fx = R.value(x, nullptr);
    if (opt.warm_start) {
      std::vector<cplx> lag, rhs, ls;
      R.normal_equations(lag, rhs);
      diag.condition_estimate = detail::toeplitz_solve(lag, rhs, ls);
      double fl = R.value(ls, nullptr);
      if (fl < fx) {
        x = ls;
        fx = fl;
      }
    }
    if (!prev.empty()) {
      std::vector<cplx> xp(prev);
      xp.resize(N, 0.0);
      double fp = R.value(xp, nullptr);
      if (fp < fx) {
        x = xp;
        fx = fp;
      }
    }
    long budget = std::min(opt.level_iterations, opt.max_iterations - total);
    long before = diag.iterations;
    double f = budget > 0 ? detail::lbfgs(R, x, budget, opt.rel_tol, target_pow, diag, p) : fx;
    total += diag.iterations - before;
    double obj = std::pow(f, 1.0 / p);
    if (obj <= best.objective) {
      best.coeffs = x;
      best.objective = obj;
    }
    best.diag = diag;
    prev = best.coeffs;
    if (best.objective < target) {
      best.converged = true;
      break;
    }
    stalled = best.objective > opt.stall_ratio * last_level ? stalled + 1 : 0;
    last_level = best.objective;
    if (N >= opt.N_cap || stalled >= opt.stall_levels || total >= opt.max_iterations) break;
  }
  double l1 = 0.0;
  for (auto c : best.coeffs) l1 += std::abs(c);
  best.uncertainty = l1 * phi.tail() + chi.tail();
  return best;
}

inline AnalyticFit fit_analytic(const PeriodicSeries& phi, const PeriodicSeries& chi, double p,
                                double eps, const FitOptions& opt = {}) {
  auto r = fit_analytic_search(phi, chi, p, eps, opt);
  if (!r.converged)
    throw BudgetExhausted("objective " + std::to_string(r.objective) + " not below " +
                              std::to_string(0.5 * eps) + " at N = " + std::to_string(r.diag.N_final),
                          r.objective);
  return r;
}

// ------------------------------------------------------------------ gamma and P

// Certified upper bound on ||phi_h - 1||_{A^p}.
inline double phi_deviation_norm(double h, double p) {
  auto N = static_cast<std::int64_t>(std::ceil(64.0 / h));
  double s = 0.0;
  for (std::int64_t n = -N; n <= N; ++n) {
    double v = n == 0 ? phi_coeff(h, 0) - 1.0 : phi_coeff(h, n);
    s += std::pow(std::abs(v), p);
  }
  double c = 6.0 / (std::numbers::pi * std::numbers::pi * h);
  s += 2.0 * std::pow(c, p) * std::pow(static_cast<double>(N), 1.0 - 2.0 * p) / (2.0 * p - 1.0);
  return std::pow(s, 1.0 / p);
}

// Certified upper bound on ||tau_h||_{A^p}.
inline double trapezoid_norm(double h, double p) {
  auto N = static_cast<std::int64_t>(std::ceil(64.0 / h));
  double s = 0.0;
  for (std::int64_t n = -N; n <= N; ++n) s += std::pow(std::abs(trapezoid_coeff(h, n)), p);
  double c = 3.0 / (std::numbers::pi * std::numbers::pi * h);
  s += 2.0 * std::pow(c, p) * std::pow(static_cast<double>(N), 1.0 - 2.0 * p) / (2.0 * p - 1.0);
  return std::pow(s, 1.0 / p);
}

// Coefficients of chi(t) = 1 - tau_{2h}(t - 1/2).
inline PeriodicSeries gamma_target(double h, std::int64_t N) {
  std::vector<cplx> c(2 * N + 1);
  for (std::int64_t n = -N; n <= N; ++n)
    c[n + N] = (n == 0 ? 1.0 : 0.0) - ((n & 1) ? -1.0 : 1.0) * trapezoid_coeff(2.0 * h, n);
  return PeriodicSeries(N, std::move(c), 3.0 * triangle_tail(2.0 * h, N));
}

// gamma = phi_h * K_N, exact coefficients.
inline PeriodicSeries fejer_smoothed_phi(double h, std::int64_t N) {
  std::vector<cplx> c(2 * N + 1);
  for (std::int64_t n = -N; n <= N; ++n)
    c[n + N] = phi_coeff(h, n) * (1.0 - static_cast<double>(std::abs(n)) / static_cast<double>(N + 1));
  return PeriodicSeries(N, std::move(c));
}

struct GammaConditions {
  double gamma_min = 0.0;        // min of gamma on the grid
  double gamma_hat0 = 0.0;
  double gamma_min_coeff = 0.0;
  double gamma_dist = 0.0;       // ||gamma - 1||_p
  double min_frequency = 0.0;    // smallest frequency of P
  double product_dist = 0.0;     // ||P gamma - 1||_p
  double eps = 0.0;

  static constexpr double kMargin = 1e-10;

  bool positive() const { return gamma_min >= kMargin; }
  bool normalized() const { return std::abs(gamma_hat0 - 1.0) <= 1e-12 && gamma_min_coeff >= 0.0; }
  bool close() const { return gamma_dist < eps; }
  bool analytic() const { return min_frequency >= 1.0; }
  bool fitted() const { return product_dist < eps; }
  bool all() const { return positive() && normalized() && close() && analytic() && fitted(); }

  // Largest relative excess over the two norm conditions.
  double violation() const {
    return std::max({gamma_dist / eps, product_dist / eps, positive() ? 0.0 : 2.0});
  }

  nlohmann::json to_json() const {
    return {{"gamma_min", gamma_min}, {"gamma_hat0", gamma_hat0}, {"gamma_min_coeff", gamma_min_coeff},
            {"gamma_dist", gamma_dist}, {"min_frequency", min_frequency},
            {"product_dist", product_dist}, {"eps", eps}};
  }
};

inline constexpr std::size_t kPositivityGrid = 8192;

inline GammaConditions check_gamma_conditions(const TrigPoly& P, const PeriodicSeries& gamma,
                                              double p, double eps) {
  GammaConditions c;
  c.eps = eps;
  auto vals = gamma.grid_values(kPositivityGrid);
  c.gamma_min = std::numeric_limits<double>::infinity();
  for (auto v : vals) c.gamma_min = std::min(c.gamma_min, std::abs(v.imag()) > 1e-9 ? -1.0 : v.real());
  c.gamma_hat0 = gamma[0].real();
  c.gamma_min_coeff = std::numeric_limits<double>::infinity();
  for (auto v : gamma.coeffs())
    c.gamma_min_coeff = std::min(c.gamma_min_coeff, std::abs(v.imag()) > 1e-15 ? -1.0 : v.real());
  c.gamma_dist = ap_norm_torus(gamma - PeriodicSeries::constant(1.0), p).value;
  c.min_frequency = std::numeric_limits<double>::infinity();
  for (const auto& t : P.terms()) c.min_frequency = std::min(c.min_frequency, t.freq.value());
  if (!P.integer_spectrum()) c.min_frequency = -std::numeric_limits<double>::infinity();
  auto prod = multiply(PeriodicSeries::from_trigpoly(P), gamma);
  c.product_dist = ap_norm_torus(prod - PeriodicSeries::constant(1.0), p).value;
  return c;
}

struct GammaOptions {
  double h_min = 1.0 / 4096.0;
  double phi_order_scale = 16.0;  // phi is truncated at ceil(scale / h) for the fit
  std::int64_t fejer_start = 32;
  std::int64_t fejer_cap = std::int64_t{1} << 20;
  FitOptions fit{32, 4096, 100000, 300, 1e-10, 0.99, 100, true};
};

struct GammaP {
  TrigPoly P;
  PeriodicSeries gamma;
  double h = 0.0;
  bool h_clamped = false;
  std::int64_t N_fejer = 0;
  double p = 0.0, eps = 0.0;
  AnalyticFit fit;
  GammaConditions conditions;
  bool fit_converged = false;

  std::int64_t degree() const { return static_cast<std::int64_t>(spectral_forge::degree(P)); }

  nlohmann::json to_json() const {
    return {{"h", h}, {"h_clamped", h_clamped}, {"N_fejer", N_fejer}, {"p", p}, {"eps", eps},
            {"degree_P", degree()}, {"fit_objective", fit.objective},
            {"fit_uncertainty", fit.uncertainty}, {"fit_converged", fit_converged},
            {"solver", fit.diag.to_json()}, {"conditions", conditions.to_json()}};
  }
};

struct GammaBudgetExhausted : BudgetExhausted {
  std::shared_ptr<const GammaP> result;
  GammaBudgetExhausted(const std::string& what, std::shared_ptr<const GammaP> r)
      : BudgetExhausted(what, r->conditions.product_dist), result(std::move(r)) {}
};

// Largest h = 2^{-j} whose measured norms meet the eps/2 splits, clamped at h_min.
inline std::pair<double, bool> select_h(double p, double eps, double h_min) {
  for (double h = 0.125;; h *= 0.5) {
    if (phi_deviation_norm(h, p) <= 0.5 * eps && trapezoid_norm(2.0 * h, p) <= 0.5 * eps)
      return {h, false};
    if (h * 0.5 < h_min) return {h, true};
  }
}

// Runs the whole search and returns the best pair found, conditions attached.
inline GammaP lemma_gamma_P_search(double p, double eps, const GammaOptions& opt = {}) {
  if (!(p > 1)) throw InvalidExponent("lemma needs p > 1");
  if (!(eps > 0 && eps < 1)) throw DomainError("lemma needs 0 < eps < 1");
  GammaP out;
  out.p = p;
  out.eps = eps;
  std::tie(out.h, out.h_clamped) = select_h(p, eps, opt.h_min);
  auto Nphi = static_cast<std::int64_t>(std::ceil(opt.phi_order_scale / out.h));
  auto phis = phi(out.h, Nphi, false);
  auto chi = gamma_target(out.h, Nphi);
  out.fit = fit_analytic_search(phis, chi, p, eps, opt.fit);
  out.fit_converged = out.fit.converged;
  out.P = out.fit.poly();

  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t N = opt.fejer_start; N <= opt.fejer_cap; N *= 2) {
    auto g = fejer_smoothed_phi(out.h, N);
    auto c = check_gamma_conditions(out.P, g, p, eps);
    if (c.violation() < best) {
      best = c.violation();
      out.gamma = g;
      out.N_fejer = N;
      out.conditions = c;
    }
    if (c.all()) break;
  }
  return out;
}

inline GammaP lemma_gamma_P(double p, double eps, const GammaOptions& opt = {}) {
  auto r = std::make_shared<GammaP>(lemma_gamma_P_search(p, eps, opt));
  if (!r->fit_converged)
    throw GammaBudgetExhausted("analytic fit reached " + std::to_string(r->fit.objective) +
                                   " against " + std::to_string(0.5 * eps),
                               r);
  if (!r->conditions.all())
    throw PropertyViolation("Fejer escalation stalled at N = " + std::to_string(r->N_fejer));
  return *r;
}

// ------------------------------------------------------------------ interval fits

struct IntervalFitOptions {
  std::int64_t N_start = 8;
  std::int64_t N_cap = 512;
  int grid_factor = 16;
  int polish_iterations = 40;
  std::size_t dense_points = 4096;
  double stall_ratio = 0.99;
  int stall_levels = 2;
};

struct IntervalFit {
  TrigPoly Q;
  std::int64_t N_min = 0;
  std::int64_t N = 0;
  double grid_error = std::numeric_limits<double>::infinity();
  double sup_error = std::numeric_limits<double>::infinity();
  double coeff_l1 = 0.0;
  bool converged = false;
  SolverDiagnostics diag;

  std::int64_t max_frequency() const { return N_min + N; }
};

namespace detail {

inline std::vector<double> chebyshev_grid(double a, double b, std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i)
    t[i] = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(std::numbers::pi * (i + 0.5) / n);
  return t;
}

inline Eigen::VectorXcd weighted_ls(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& y,
                                    const Eigen::VectorXd& w, double& cond) {
  Eigen::VectorXd sw = w.cwiseSqrt();
  Eigen::MatrixXcd Aw = sw.asDiagonal() * A;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  double cut = kGramRegularization * s(0);
  Eigen::VectorXcd uty = svd.matrixU().adjoint() * (sw.asDiagonal() * y);
  Eigen::VectorXcd z(s.size());
  double smin = s(0);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    z(i) = s(i) > cut ? uty(i) / s(i) : cplx(0.0);
    if (s(i) > cut) smin = s(i);
  }
  cond = s(0) / smin;
  return svd.matrixV() * z;
}

}  // namespace detail

// Q with spectrum in (N_min, N_min + N] approximating target on [-h/2, h/2] in sup norm.
inline IntervalFit fit_exponentials_search(const std::function<cplx(double)>& target, double h,
                                           std::int64_t N_min, double eps_sup,
                                           const IntervalFitOptions& opt = {}) {
  if (!(h > 0 && h < 1)) throw DomainError("interval fit needs 0 < h < 1");
  IntervalFit best;
  best.N_min = N_min;
  std::vector<double> dense(opt.dense_points);
  for (std::size_t i = 0; i < dense.size(); ++i)
    dense[i] = -0.5 * h + h * static_cast<double>(i) / static_cast<double>(dense.size() - 1);
  std::vector<cplx> dense_target(dense.size());
  for (std::size_t i = 0; i < dense.size(); ++i) dense_target[i] = target(dense[i]);

  int stalled = 0;
  double last = std::numeric_limits<double>::infinity();
  for (std::int64_t N = opt.N_start;; N = std::min(2 * N, opt.N_cap)) {
    auto grid = detail::chebyshev_grid(-0.5 * h, 0.5 * h, static_cast<std::size_t>(opt.grid_factor * N));
    const auto G = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXcd A(G, N);
    Eigen::VectorXcd y(G);
    for (Eigen::Index i = 0; i < G; ++i) {
      y(i) = target(grid[i]);
      for (std::int64_t n = 0; n < N; ++n) A(i, n) = expi2pi(static_cast<double>(N_min + 1 + n), grid[i]);
    }
    Eigen::VectorXd w = Eigen::VectorXd::Constant(G, 1.0 / static_cast<double>(G));
    SolverDiagnostics diag = best.diag;
    diag.N_final = N;
    Eigen::VectorXcd c_best;
    double e_best = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opt.polish_iterations; ++it) {
      double cond = 0.0;
      Eigen::VectorXcd c = detail::weighted_ls(A, y, w, cond);
      diag.condition_estimate = cond;
      ++diag.iterations;
      Eigen::VectorXd err = (A * c - y).cwiseAbs();
      double e = err.maxCoeff();
      diag.record(e);
      if (e < e_best) {
        e_best = e;
        c_best = c;
      }
      if (e_best < 0.5 * eps_sup || e <= 1e-14) break;
      // Lawson reweighting
      Eigen::VectorXd wn = w.cwiseProduct(err);
      double tot = wn.sum();
      if (!(tot > 0)) break;
      w = wn / tot;
    }
    std::vector<Term> terms;
    for (std::int64_t n = 0; n < N; ++n)
      terms.push_back({Frequency::integer(N_min + 1 + n), c_best(n)});
    TrigPoly Q(std::move(terms));
    double sup = 0.0;
    for (std::size_t i = 0; i < dense.size(); ++i) sup = std::max(sup, std::abs(Q.eval(dense[i]) - dense_target[i]));
    if (sup < best.sup_error) {
      best.Q = Q;
      best.N = N;
      best.sup_error = sup;
      best.grid_error = e_best;
      best.coeff_l1 = coeff_norm(Q, 1.0);
    }
    best.diag = diag;
    if (best.sup_error <= eps_sup) {
      best.converged = true;
      break;
    }
    stalled = best.sup_error > opt.stall_ratio * last ? stalled + 1 : 0;
    last = best.sup_error;
    if (N >= opt.N_cap || stalled >= opt.stall_levels) break;
  }
  return best;
}

inline IntervalFit fit_exponentials_on_interval(const std::function<cplx(double)>& target, double h,
                                                std::int64_t N_min, double eps_sup,
                                                const IntervalFitOptions& opt = {}) {
  auto r = fit_exponentials_search(target, h, N_min, eps_sup, opt);
  if (!r.converged)
    throw BudgetExhausted("sup error " + std::to_string(r.sup_error) + " above " + std::to_string(eps_sup),
                          r.sup_error);
  return r;
}

}  // namespace spectral_forge
