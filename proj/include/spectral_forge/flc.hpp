#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "approx.hpp"
#include "errors.hpp"
#include "norms.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

inline constexpr double kVandermondeConditionLimit = 1e12;
inline constexpr double kVandermondeResidualLimit = 1e-10;

struct VandermondeWeights {
  double a = 0.0;
  int L = 0;
  Eigen::MatrixXcd V;  // V(l + L, k) = e^{2 pi i k l a}
  Eigen::MatrixXcd d;  // d(k, l + L), the inverse of V
  double condition = 1.0;
  double residual = 0.0;

  cplx weight(int k, int l) const { return d(k, l + L); }
};

inline VandermondeWeights vandermonde_weights(double a, int L) {
  if (L < 0) throw DomainError("Vandermonde weights need L >= 0");
  VandermondeWeights w;
  w.a = a;
  w.L = L;
  const int n = 2 * L + 1;
  w.V.resize(n, n);
  for (int l = -L; l <= L; ++l)
    for (int k = 0; k < n; ++k) w.V(l + L, k) = expi2pi(static_cast<double>(k) * l, a);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(w.V);
  const auto& s = svd.singularValues();
  w.condition = s(0) / s(n - 1);
  if (!(w.condition <= kVandermondeConditionLimit))
    throw NearSingular("condition " + std::to_string(w.condition) + " for a = " + std::to_string(a));
  w.d = w.V.partialPivLu().inverse();
  w.residual = (w.V * w.d - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (w.residual > kVandermondeResidualLimit)
    throw NearSingular("inverse residual " + std::to_string(w.residual));
  return w;
}

enum class GapClass { One, A, Other };

inline const char* gap_name(GapClass g) {
  switch (g) {
    case GapClass::One: return "one";
    case GapClass::A: return "a";
    case GapClass::Other: return "other";
  }
  return "";
}

// Classifies lambda_{n+1} - lambda_n from lattice coordinates only.
inline GapClass classify_gap(const Frequency& lo, const Frequency& hi) {
  auto k_of = [](const Frequency& f) { return f.kind == Frequency::Kind::Lattice ? f.k : std::int64_t{0}; };
  if (lo.kind == Frequency::Kind::Real || hi.kind == Frequency::Kind::Real) return GapClass::Other;
  std::int64_t dj = hi.j - lo.j, dk = k_of(hi) - k_of(lo);
  if (dj == 1 && dk == 0) return GapClass::One;
  if (dj == 0 && dk == 1) return GapClass::A;
  return GapClass::Other;
}

struct FlcBlock {
  int k = 0;
  std::int64_t N_lo = 0, N_hi = 0;  // J_k = {ka + j : N_lo <= j <= N_hi}
  double target_error = 0.0;       // fit error of Q_k against its target on the dense grid
  IntervalFit fit;
};

struct FlcResult {
  TrigPoly P;
  std::vector<Frequency> lambdas;  // lambda_1 < lambda_2 < ... (lambda_0 not included)
  Frequency lambda0;
  std::vector<GapClass> gaps;      // gaps[n] = class of lambda_{n+1} - lambda_n, starting from lambda_0
  std::vector<FlcBlock> blocks;
  VandermondeWeights weights;
  double delta = 0.0;
  double eps = 0.0;
  double sup_error = 0.0;          // max over the Landau set grid of |P - chi|
  bool all_fits_converged = true;

  bool gaps_ok() const {
    return std::all_of(gaps.begin(), gaps.end(), [](GapClass g) { return g != GapClass::Other; });
  }
};

struct FlcOptions {
  IntervalFitOptions fit;
  std::size_t check_points = 4096;  // per Landau interval
};

inline Frequency lattice_of(const Frequency& f, double a) {
  if (f.kind == Frequency::Kind::Lattice) {
    if (f.base != a) throw IncompatibleBase("lambda_0 base differs from a");
    return f;
  }
  if (f.kind == Frequency::Kind::Integer) return Frequency::lattice(f.j, 0, a);
  throw IncompatibleBase("lambda_0 must be an integer or lattice frequency");
}

// |P - chi| <= eps on Omega with gaps in {1, a}; chi is given on Omega.
inline FlcResult flc_polynomial(double a, const LandauSet& omega, const std::function<cplx(double)>& chi,
                                const Frequency& lambda0, double eps, const FlcOptions& opt = {}) {
  if (!(a > 0)) throw DomainError("a must be positive");
  if (!(eps > 0)) throw DomainError("eps must be positive");
  FlcResult out;
  out.eps = eps;
  out.weights = vandermonde_weights(a, omega.L);
  const int L = omega.L, K = 2 * L + 1;
  const bool pure_integer = (L == 0 && lambda0.kind == Frequency::Kind::Integer);
  out.lambda0 = pure_integer ? lambda0 : lattice_of(lambda0, a);
  out.delta = eps / K;
  const double l0 = lambda0.value();

  // chi shifted so that lambda_0 = 0
  auto chi0 = [&](double t) { return chi(t) * expi2pi(-l0, t); };

  std::int64_t N_k = 1;
  std::vector<Term> terms;
  for (int k = 0; k < K; ++k) {
    auto target = [&, k](double t) {
      cplx s = 0.0;
      for (int l = -L; l <= L; ++l) s += out.weights.weight(k, l) * chi0(t + l);
      return s * expi2pi(-static_cast<double>(k) * a, t);
    };
    FlcBlock b;
    b.k = k;
    b.N_lo = N_k;
    b.fit = fit_exponentials_search(target, omega.h, N_k - 1, out.delta, opt.fit);
    b.target_error = b.fit.sup_error;
    b.N_hi = b.fit.max_frequency();
    out.all_fits_converged = out.all_fits_converged && b.fit.converged;
    for (const auto& t : b.fit.Q.terms()) {
      Frequency f = pure_integer ? Frequency::integer(t.freq.j) : Frequency::lattice(t.freq.j, k, a);
      terms.push_back({f + out.lambda0, t.coef});
    }
    N_k = b.N_hi;
    out.blocks.push_back(std::move(b));
  }
  out.P = TrigPoly(std::move(terms));

  Frequency prev = out.lambda0;
  for (const auto& b : out.blocks)
    for (std::int64_t j = b.N_lo; j <= b.N_hi; ++j) {
      Frequency f = pure_integer ? Frequency::integer(j) : Frequency::lattice(j, b.k, a);
      f = f + out.lambda0;
      out.gaps.push_back(classify_gap(prev, f));
      out.lambdas.push_back(f);
      prev = f;
    }

  out.sup_error = 0.0;
  for (const auto& [lo, hi] : omega.intervals())
    for (std::size_t i = 0; i < opt.check_points; ++i) {
      double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(opt.check_points - 1);
      out.sup_error = std::max(out.sup_error, std::abs(out.P.eval(t) - chi(t)));
    }
  return out;
}

// P(t + l) reassembled from the block functions H_k; max deviation over the probe points.
inline double flc_reconstruction_residual(const FlcResult& r, const std::vector<double>& probes) {
  const int L = r.weights.L, K = 2 * L + 1;
  const double a = r.weights.a;
  const std::int64_t k0 = r.lambda0.kind == Frequency::Kind::Lattice ? r.lambda0.k : 0;
  double worst = 0.0;
  for (double t : probes)
    for (int l = -L; l <= L; ++l) {
      cplx s = 0.0;
      for (int k = 0; k < K; ++k) {
        cplx Hk = 0.0;
        for (const auto& term : r.P.terms()) {
          std::int64_t kk = term.freq.kind == Frequency::Kind::Lattice ? term.freq.k - k0 : 0;
          if (kk == k) Hk += term.coef * expi2pi(term.freq.value(), t);
        }
        s += expi2pi(static_cast<double>((k0 + k) * l), a) * Hk;
      }
      worst = std::max(worst, std::abs(s - r.P.eval(t + l)));
    }
  return worst;
}

struct FlcStep {
  int k = 0;
  LandauSet omega;
  double eps = 0.0;
  FlcResult result;
  std::vector<ResidualReport> probes;
};

struct FlcReport {
  double a = 0.0;
  std::vector<FlcStep> steps;
  std::vector<Frequency> lambdas;
  std::vector<GapClass> gaps;

  bool gaps_ok() const {
    return std::all_of(gaps.begin(), gaps.end(), [](GapClass g) { return g != GapClass::Other; });
  }
};

// Steps k = 1..K with eps_k = 1/k, each continuing from the previous last lambda.
inline FlcReport flc_driver(double a, const std::vector<std::function<cplx(double)>>& targets,
                            const std::vector<LandauSet>& ladder, const std::vector<LandauSet>& probe_sets,
                            const std::function<cplx(double)>& probe_target, const FlcOptions& opt = {}) {
  if (targets.size() != ladder.size()) throw DomainError("one Landau set per target");
  FlcReport rep;
  rep.a = a;
  Frequency last = Frequency::lattice(0, 0, a);
  for (std::size_t s = 0; s < targets.size(); ++s) {
    FlcStep st;
    st.k = static_cast<int>(s) + 1;
    st.omega = ladder[s];
    st.eps = 1.0 / st.k;
    st.result = flc_polynomial(a, st.omega, targets[s], last, st.eps, opt);
    rep.lambdas.insert(rep.lambdas.end(), st.result.lambdas.begin(), st.result.lambdas.end());
    rep.gaps.insert(rep.gaps.end(), st.result.gaps.begin(), st.result.gaps.end());
    if (!st.result.lambdas.empty()) last = st.result.lambdas.back();
    for (const auto& om : probe_sets) {
      try {
        st.probes.push_back(completeness_residual(rep.lambdas, om, probe_target));
      } catch (const GramIllConditioned& e) {
        ResidualReport r;
        r.freqs_digest = frequency_digest(rep.lambdas);
        r.L = om.L;
        r.h = om.h;
        r.residual = std::numeric_limits<double>::quiet_NaN();
        r.condition = std::numeric_limits<double>::infinity();
        st.probes.push_back(r);
      }
    }
    rep.steps.push_back(std::move(st));
  }
  return rep;
}

}  // namespace spectral_forge
