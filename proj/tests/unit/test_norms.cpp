#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spectral_forge/norms.hpp"

using namespace spectral_forge;

namespace {

double smooth_bump(double t) {
  double x = 2.0 * t;
  return std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
}

LineFunction bump_line(double dx = 1e-3) {
  return LineFunction(make_compact(-0.5, 0.5, [](double t) { return cplx(smooth_bump(t)); }, dx));
}

}  // namespace

TEST(Norms, TorusNormOfKnownSeries) {
  PeriodicSeries f(2, {0.5, 0.0, 1.0, 0.0, 0.5});
  EXPECT_NEAR(ap_norm_torus(f, 1.0).value, 2.0, 1e-15);
  EXPECT_NEAR(ap_norm_torus(f, 2.0).value, std::sqrt(1.5), 1e-15);
  EXPECT_NEAR(std::abs(f.eval(0.0) - 2.0), 0.0, 1e-15);
}

TEST(Norms, GridValuesMatchEvaluation) {
  PeriodicSeries f(3, {{0.1, 0.2}, 0.3, -0.5, 1.0, 0.25, {0.0, -0.4}, 0.05});
  auto g = f.grid_values(16);
  for (std::size_t m = 0; m < 16; ++m) EXPECT_NEAR(std::abs(g[m] - f.eval(m / 16.0)), 0.0, 1e-13);
}

TEST(Norms, PlancherelOnTheLine) {
  auto u = bump_line();
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double l2 = std::sqrt(GK::integrate([](double t) { return smooth_bump(t) * smooth_bump(t); }, -0.5, 0.5));
  auto n = ap_norm_line(u, 2.0);
  EXPECT_NEAR(n.value, l2, 1e-6);
  EXPECT_GE(n.upper() + 1e-12, n.value);
}

TEST(Norms, TransformMatchesQuadrature) {
  auto u = bump_line();
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (double x : {0.0, 0.7, 3.3, 9.0}) {
    double re = GK::integrate(
        [x](double t) { return smooth_bump(t) * std::cos(2.0 * std::numbers::pi * x * t); }, -0.5, 0.5, 15, 1e-13);
    EXPECT_NEAR(u.ft(x).real(), re, 1e-7) << x;
    EXPECT_NEAR(u.ft(x).imag(), 0.0, 1e-7) << x;
  }
}

TEST(Norms, TripleNormDominatesApNorms) {
  auto u = bump_line();
  double T = triple_norm(u);
  for (double p : {1.0, 1.5, 2.0, 3.0}) EXPECT_LE(ap_norm_line(u, p).value, T);
}

TEST(Norms, ModulationPreservesApNorm) {
  auto u = bump_line();
  auto v = u.times(TrigPoly::monomial(Frequency::real(2.5), 1.0));
  EXPECT_NEAR(ap_norm_line(v, 1.5).value, ap_norm_line(u, 1.5).value, 1e-4);
}

TEST(Norms, LandauSetGeometry) {
  LandauSet om(1, 0.5);
  EXPECT_TRUE(om.contains(1.2));
  EXPECT_FALSE(om.contains(1.3));
  EXPECT_FALSE(om.contains(2.0));
  EXPECT_DOUBLE_EQ(om.measure(), 1.5);
  EXPECT_THROW(LandauSet(0, 1.0), DomainError);
}

TEST(Norms, ResidualVanishesOnTheSpan) {
  std::vector<Frequency> f;
  for (int n = 1; n <= 6; ++n) f.push_back(Frequency::real(n + 0.3 / n));
  auto target = [](double t) { return 2.0 * expi2pi(2.15, t) - expi2pi(1.3, t); };
  auto r = completeness_residual(f, LandauSet(1, 0.8), target);
  EXPECT_LT(r.residual, 1e-6);
}

TEST(Norms, PeriodicFamilyCannotSeparateIntervals) {
  // integer exponentials agree on every translate, so a target living on one interval keeps
  // the residual sqrt(2/3) of its two missing translates
  std::vector<Frequency> f;
  for (int n = -8; n <= 8; ++n) f.push_back(Frequency::integer(n));
  auto target = [](double t) { return cplx(std::abs(t - 1.0) < 0.4 ? 1.0 : 0.0); };
  auto r = completeness_residual(f, LandauSet(1, 0.8), target);
  EXPECT_GE(r.residual, std::sqrt(2.0 / 3.0) - 1e-6);
}

TEST(Norms, DigestIsStable) {
  std::vector<Frequency> f = {Frequency::integer(1), Frequency::real(2.5)};
  EXPECT_EQ(frequency_digest(f), frequency_digest(f));
  EXPECT_NE(frequency_digest(f), frequency_digest({Frequency::integer(1)}));
}
