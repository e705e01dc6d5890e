#include <gtest/gtest.h>

#include "spectral_forge/flc.hpp"

using namespace spectral_forge;

namespace {

FlcOptions small_options() {
  FlcOptions o;
  o.fit.N_cap = 32;
  o.fit.polish_iterations = 5;
  o.check_points = 512;
  return o;
}

}  // namespace

TEST(Flc, VandermondeInverse) {
  const double a = std::sqrt(2.0);
  auto w = vandermonde_weights(a, 2);
  ASSERT_EQ(w.V.rows(), 5);
  for (int l = -2; l <= 2; ++l)
    for (int k = 0; k < 5; ++k) {
      cplx direct = std::exp(cplx(0.0, kTwoPi * k * l * a));
      EXPECT_NEAR(std::abs(w.V(l + 2, k) - direct), 0.0, 1e-12);
    }
  for (int k = 0; k < 5; ++k)
    for (int k2 = 0; k2 < 5; ++k2) {
      cplx s = 0.0;
      for (int l = -2; l <= 2; ++l) s += w.weight(k, l) * w.V(l + 2, k2);
      EXPECT_NEAR(std::abs(s - (k == k2 ? 1.0 : 0.0)), 0.0, 1e-10);
    }
  EXPECT_LE(w.residual, kVandermondeResidualLimit);
}

TEST(Flc, IntegerBaseIsSingular) {
  EXPECT_THROW(vandermonde_weights(1.0, 1), NearSingular);
  EXPECT_THROW(vandermonde_weights(std::sqrt(2.0), -1), DomainError);
  EXPECT_NO_THROW(vandermonde_weights(1.0, 0));
}

TEST(Flc, GapClassification) {
  const double a = std::sqrt(2.0);
  auto f = [a](std::int64_t j, std::int64_t k) { return Frequency::lattice(j, k, a); };
  EXPECT_EQ(classify_gap(f(3, 1), f(4, 1)), GapClass::One);
  EXPECT_EQ(classify_gap(f(3, 1), f(3, 2)), GapClass::A);
  EXPECT_EQ(classify_gap(f(3, 1), f(5, 1)), GapClass::Other);
  EXPECT_EQ(classify_gap(Frequency::integer(2), Frequency::integer(3)), GapClass::One);
  EXPECT_EQ(classify_gap(Frequency::real(2.0), Frequency::real(3.0)), GapClass::Other);
  EXPECT_STREQ(gap_name(GapClass::A), "a");
}

TEST(Flc, LatticeOfChecksBase) {
  const double a = std::sqrt(2.0);
  EXPECT_EQ(lattice_of(Frequency::integer(4), a).j, 4);
  EXPECT_THROW(lattice_of(Frequency::lattice(0, 1, 3.0), a), IncompatibleBase);
  EXPECT_THROW(lattice_of(Frequency::real(0.5), a), IncompatibleBase);
}

TEST(Flc, SingleIntervalIntegerGaps) {
  auto chi = [](double t) { return expi2pi(3.0, t); };
  auto r = flc_polynomial(std::sqrt(2.0), LandauSet(0, 0.5), chi, Frequency::integer(0), 1e-6);
  EXPECT_TRUE(r.all_fits_converged);
  EXPECT_LT(r.sup_error, 1e-6);
  EXPECT_TRUE(r.gaps_ok());
  for (auto g : r.gaps) EXPECT_EQ(g, GapClass::One);
  for (const auto& t : r.P.terms()) EXPECT_TRUE(t.freq.is_integer());
}

TEST(Flc, LatticeStructureAndReconstruction) {
  const double a = std::sqrt(2.0);
  LandauSet om(1, 0.4);
  auto chi = [](double t) { return cplx(std::exp(-std::numbers::pi * t * t)); };
  auto r = flc_polynomial(a, om, chi, Frequency::integer(0), 0.5, small_options());
  EXPECT_TRUE(r.gaps_ok());
  ASSERT_EQ(r.gaps.size(), r.lambdas.size());
  double prev = r.lambda0.value();
  for (const auto& l : r.lambdas) {
    EXPECT_GT(l.value(), prev);
    prev = l.value();
  }
  for (const auto& t : r.P.terms()) {
    bool listed = std::any_of(r.lambdas.begin(), r.lambdas.end(),
                              [&](const Frequency& l) { return l.j == t.freq.j && l.k == t.freq.k; });
    EXPECT_TRUE(listed) << t.freq.str();
  }
  std::vector<double> probes{-0.1, 0.0, 0.13};
  EXPECT_LE(flc_reconstruction_residual(r, probes), 1e-10 * (1.0 + coeff_norm(r.P, 1.0)));

  double sup = 0.0;
  for (const auto& [lo, hi] : om.intervals())
    for (int i = 0; i < 512; ++i) {
      double t = lo + (hi - lo) * i / 511.0;
      sup = std::max(sup, std::abs(r.P.eval(t) - chi(t)));
    }
  EXPECT_NEAR(sup, r.sup_error, 1e-12);
}

TEST(Flc, RejectsBadArguments) {
  auto chi = [](double) { return cplx(1.0); };
  EXPECT_THROW(flc_polynomial(-1.0, LandauSet(0, 0.5), chi, Frequency::integer(0), 0.1), DomainError);
  EXPECT_THROW(flc_polynomial(std::sqrt(2.0), LandauSet(0, 0.5), chi, Frequency::integer(0), 0.0), DomainError);
}
