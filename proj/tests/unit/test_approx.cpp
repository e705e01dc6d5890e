#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "spectral_forge/approx.hpp"

using namespace spectral_forge;

namespace {

FitOptions single_level(std::int64_t N, long iterations) {
  FitOptions o;
  o.N_start = o.N_cap = N;
  o.max_iterations = o.level_iterations = iterations;
  return o;
}

}  // namespace

TEST(Approx, FitObjectiveMatchesDirectResidual) {
  const double h = 0.125;
  auto ph = phi(h, 32, false);
  auto chi = gamma_target(h, 32);
  auto fit = fit_analytic_search(ph, chi, 1.5, 1e-9, single_level(8, 200));
  EXPECT_FALSE(fit.converged);
  auto r = multiply(ph, PeriodicSeries::from_trigpoly(fit.poly())) - chi;
  EXPECT_NEAR(ap_norm_torus(r, 1.5).value, fit.objective, 1e-10 * (1.0 + fit.objective));
}

TEST(Approx, QuadraticFitMatchesDenseLeastSquares) {
  const double h = 0.125;
  const std::int64_t Nf = 32, N = 8;
  auto ph = phi(h, Nf, false);
  auto chi = gamma_target(h, Nf);
  auto fit = fit_analytic_search(ph, chi, 2.0, 1e-9, single_level(N, 0));

  const std::int64_t lo = -Nf - 1, hi = Nf + N;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(hi - lo + 1, N);
  Eigen::VectorXd b(hi - lo + 1);
  for (std::int64_t n = lo; n <= hi; ++n) {
    b(n - lo) = chi[n].real();
    for (std::int64_t j = 1; j <= N; ++j) A(n - lo, j - 1) = ph[n - j].real();
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  double best = (A * c - b).norm();
  EXPECT_NEAR(fit.objective, best, 1e-8);
  ASSERT_EQ(fit.coeffs.size(), static_cast<std::size_t>(N));
  for (std::int64_t j = 0; j < N; ++j) EXPECT_NEAR(fit.coeffs[j].real(), c(j), 1e-6) << j;
}

TEST(Approx, FitPolynomialIsAnalytic) {
  auto ph = phi(0.125, 16, false);
  auto fit = fit_analytic_search(ph, gamma_target(0.125, 16), 1.5, 1e-9, single_level(4, 20));
  auto P = fit.poly();
  for (const auto& t : P.terms()) {
    EXPECT_TRUE(t.freq.is_integer());
    EXPECT_GE(t.freq.j, 1);
    EXPECT_LE(t.freq.j, 4);
  }
}

TEST(Approx, FitThrowsWhenBudgetRunsOut) {
  auto ph = phi(0.125, 16, false);
  EXPECT_THROW(fit_analytic(ph, gamma_target(0.125, 16), 1.5, 1e-9, single_level(4, 5)), BudgetExhausted);
  EXPECT_THROW(fit_analytic(ph, gamma_target(0.125, 16), 1.0, 0.1), InvalidExponent);
}

TEST(Approx, PhiDeviationBoundDominatesTruncatedNorm) {
  for (double h : {0.125, 0.0625})
    for (double p : {1.5, 2.0}) {
      auto d = phi(h, 512, false) - PeriodicSeries::constant(1.0);
      EXPECT_GE(phi_deviation_norm(h, p), ap_norm_torus(d, p).value) << h << " " << p;
      EXPECT_LE(phi_deviation_norm(h, p), 1.01 * ap_norm_torus(d, p).value + 1e-6);
    }
}

TEST(Approx, TrapezoidBoundDominatesTruncatedNorm) {
  for (double h : {0.1, 0.05}) {
    double direct = ap_norm_torus(trapezoid(h, 1024), 1.5).value;
    EXPECT_GE(trapezoid_norm(h, 1.5), direct);
    EXPECT_LE(trapezoid_norm(h, 1.5), 1.01 * direct);
  }
}

TEST(Approx, GammaTargetValues) {
  const double h = 0.05;
  auto chi = gamma_target(h, 2048);
  EXPECT_NEAR(chi.eval(0.0).real(), 1.0, 5e-3);
  EXPECT_NEAR(chi.eval(0.5).real(), 0.0, 5e-3);
}

TEST(Approx, FejerSmoothingScalesCoefficients) {
  const double h = 0.1;
  const std::int64_t N = 20;
  auto g = fejer_smoothed_phi(h, N);
  for (std::int64_t n = -N; n <= N; ++n)
    EXPECT_NEAR(g[n].real(), phi_coeff(h, n) * (N + 1 - std::abs(n)) / (N + 1.0), 1e-15);
  EXPECT_NEAR(g[0].real(), 1.0, 1e-12);
}

TEST(Approx, GammaConditionsOnKnownPair) {
  auto g = fejer_smoothed_phi(0.1, 64);
  auto c = check_gamma_conditions(TrigPoly::monomial(Frequency::integer(1), 1.0), g, 1.5, 0.5);
  EXPECT_TRUE(c.normalized());
  EXPECT_TRUE(c.analytic());
  EXPECT_DOUBLE_EQ(c.min_frequency, 1.0);
  EXPECT_NEAR(c.gamma_dist, ap_norm_torus(g - PeriodicSeries::constant(1.0), 1.5).value, 1e-12);

  auto c0 = check_gamma_conditions(TrigPoly::constant(1.0), g, 1.5, 0.5);
  EXPECT_FALSE(c0.analytic());
  EXPECT_FALSE(c0.all());
}

TEST(Approx, SelectedScaleMatchesScan) {
  const double h_min = 1.0 / 1024;
  for (double p : {1.5, 2.0, 3.0})
    for (double eps : {0.5, 0.25}) {
      double want = h_min;
      bool clamped = true;
      for (double h = 0.125; h >= h_min; h *= 0.5)
        if (phi_deviation_norm(h, p) <= 0.5 * eps && trapezoid_norm(2 * h, p) <= 0.5 * eps) {
          want = h;
          clamped = false;
          break;
        }
      auto got = select_h(p, eps, h_min);
      EXPECT_EQ(got.first, want) << p << " " << eps;
      EXPECT_EQ(got.second, clamped) << p << " " << eps;
    }
}

TEST(Approx, LemmaRejectsBadArguments) {
  EXPECT_THROW(lemma_gamma_P(1.0, 0.25), InvalidExponent);
  EXPECT_THROW(lemma_gamma_P(1.5, 1.0), DomainError);
}

TEST(Approx, IntervalFitReproducesExponential) {
  auto target = [](double t) { return expi2pi(3.0, t); };
  auto r = fit_exponentials_search(target, 0.5, 0, 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.sup_error, 1e-9);
  for (const auto& t : r.Q.terms()) {
    EXPECT_GT(t.freq.j, 0);
    EXPECT_LE(t.freq.j, r.max_frequency());
  }
}

TEST(Approx, IntervalFitSupErrorIsMeasured) {
  auto target = [](double t) { return cplx(std::exp(-std::numbers::pi * t * t)); };
  const double h = 0.5;
  auto r = fit_exponentials_search(target, h, 0, 1e-4);
  double sup = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    double t = -0.5 * h + h * i / 10000.0;
    sup = std::max(sup, std::abs(r.Q.eval(t) - target(t)));
  }
  EXPECT_NEAR(sup, r.sup_error, 0.05 * r.sup_error + 1e-12);
  EXPECT_THROW(fit_exponentials_on_interval(target, 1.5, 0, 1e-4), DomainError);
}
