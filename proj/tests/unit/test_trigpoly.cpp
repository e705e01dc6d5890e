#include <gtest/gtest.h>

#include <random>

#include "spectral_forge/trigpoly.hpp"

using namespace spectral_forge;

namespace {

TrigPoly sample_poly() {
  return TrigPoly({{Frequency::real(3.25), {1.0, -0.5}},
                   {Frequency::real(-2.1), {0.3, 0.2}},
                   {Frequency::integer(5), {-0.7, 0.0}},
                   {Frequency::real(11.4), {0.0, 1.0}}});
}

cplx direct_eval(const std::vector<std::pair<double, cplx>>& terms, double t) {
  cplx s = 0.0;
  for (const auto& [f, c] : terms) s += c * std::exp(cplx(0.0, 2.0 * std::numbers::pi * f * t));
  return s;
}

}  // namespace

TEST(TrigPoly, EvalMatchesDirectSum) {
  auto P = sample_poly();
  std::vector<std::pair<double, cplx>> raw = {{3.25, {1.0, -0.5}}, {-2.1, {0.3, 0.2}}, {5.0, {-0.7, 0.0}},
                                              {11.4, {0.0, 1.0}}};
  for (double t : {-0.37, 0.0, 0.125, 0.9, 7.3}) EXPECT_NEAR(std::abs(P.eval(t) - direct_eval(raw, t)), 0.0, 1e-12);
}

TEST(TrigPoly, MergesEqualFrequenciesAndPrunes) {
  TrigPoly P({{Frequency::integer(2), 1.0}, {Frequency::integer(2), -1.0}, {Frequency::integer(3), 2.0}});
  ASSERT_EQ(P.size(), 1u);
  EXPECT_EQ(P.terms()[0].freq.j, 3);
}

TEST(TrigPoly, ProductIsPointwise) {
  auto P = sample_poly();
  TrigPoly Q({{Frequency::real(0.5), 2.0}, {Frequency::integer(-1), {0.0, 1.0}}});
  auto R = P * Q;
  for (double t : {-0.3, 0.2, 0.77}) EXPECT_NEAR(std::abs(R.eval(t) - P.eval(t) * Q.eval(t)), 0.0, 1e-12);
}

TEST(TrigPoly, DilationIsComposition) {
  TrigPoly P({{Frequency::integer(1), 1.0}, {Frequency::integer(-3), {0.5, 0.5}}});
  auto D = dilate(P, 7);
  for (double t : {0.01, 0.3, 0.61}) EXPECT_NEAR(std::abs(D.eval(t) - P.eval(7.0 * t)), 0.0, 1e-12);
  EXPECT_THROW(dilate(sample_poly(), 2), NonIntegerSpectrum);
  EXPECT_THROW(dilate(P, 0), DomainError);
}

TEST(TrigPoly, CoefficientNorms) {
  TrigPoly P({{Frequency::integer(0), 3.0}, {Frequency::integer(1), {0.0, 4.0}}});
  EXPECT_DOUBLE_EQ(coeff_norm(P, 1.0), 7.0);
  EXPECT_NEAR(coeff_norm(P, 2.0), 5.0, 1e-14);
  EXPECT_DOUBLE_EQ(coeff_norm(P, std::numeric_limits<double>::infinity()), 4.0);
  EXPECT_THROW(coeff_norm(P, 0.5), InvalidExponent);
}

TEST(TrigPoly, DifferenceOperatorMultipliesCoefficients) {
  auto P = sample_poly();
  for (int k = 0; k <= 4; ++k) {
    auto D = diff_op(P, k);
    for (double t : {-0.4, 0.0, 0.31}) {
      cplx manual = 0.0;
      for (const auto& term : P.terms()) {
        double v = term.freq.value();
        double a = v - std::round(v);
        manual += term.coef * std::pow(std::exp(cplx(0.0, 2.0 * std::numbers::pi * a)) - 1.0, k) *
                  std::exp(cplx(0.0, 2.0 * std::numbers::pi * v * t));
      }
      EXPECT_NEAR(std::abs(D.eval(t) - manual), 0.0, 1e-11) << "k=" << k;
      EXPECT_NEAR(std::abs(D.eval(t) - pointwise_difference(P, t, k)), 0.0, 1e-11) << "k=" << k;
    }
  }
}

TEST(TrigPoly, DifferenceKillsIntegerSpectrum) {
  TrigPoly P({{Frequency::integer(4), 1.0}, {Frequency::integer(-9), 2.0}});
  EXPECT_TRUE(diff_op(P, 1).empty());
  EXPECT_THROW(diff_op(P, -1), DomainError);
}

TEST(TrigPoly, BinomialShiftIdentity) {
  auto P = sample_poly();
  for (int j = 0; j <= 5; ++j) {
    double t = 0.17;
    cplx s = 0.0;
    double b = 1.0;
    for (int l = 0; l <= j; ++l) {
      s += b * diff_op(P, l).eval(t);
      b = b * (j - l) / (l + 1);
    }
    EXPECT_NEAR(std::abs(s - P.eval(t + j)), 0.0, 1e-10);
  }
}

TEST(TrigPoly, LatticeFrequencies) {
  const double a = std::sqrt(2.0);
  auto f = Frequency::lattice(3, 1, a) + Frequency::integer(2);
  EXPECT_EQ(f.j, 5);
  EXPECT_EQ(f.k, 1);
  EXPECT_DOUBLE_EQ(f.value(), 5.0 + a);
  EXPECT_THROW(Frequency::lattice(0, 1, a) + Frequency::lattice(0, 1, std::sqrt(3.0)), IncompatibleBase);
  EXPECT_THROW(Frequency::lattice(0, 1, a) + Frequency::real(0.5), IncompatibleBase);
}

TEST(TrigPoly, JsonRoundTrip) {
  auto P = sample_poly();
  auto Q = trigpoly_from_json(to_json(P));
  ASSERT_EQ(P.size(), Q.size());
  for (double t : {0.2, 0.45}) EXPECT_EQ(P.eval(t), Q.eval(t));
}

TEST(TrigPoly, PhaseIsAccurateForLargeFrequencies) {
  // exp(2 pi i n t) at t = 1/4 cycles through 1, i, -1, -i
  const std::int64_t n = (std::int64_t{1} << 40) + 1;
  auto v = expi2pi(static_cast<double>(n), 0.25);
  EXPECT_NEAR(std::abs(v - cplx(0.0, 1.0)), 0.0, 1e-9);
}
