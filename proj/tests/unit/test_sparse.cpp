#include <gtest/gtest.h>

#include "spectral_forge/sparse.hpp"

using namespace spectral_forge;

namespace {

std::shared_ptr<const PeriodicSeries> series(std::vector<cplx> c) {
  auto N = static_cast<std::int64_t>(c.size() / 2);
  return std::make_shared<const PeriodicSeries>(N, std::move(c));
}

FactoredProduct sample_product() {
  FactoredProduct G;
  G.push(series({0.2, 1.0, 0.3}), 1);
  G.push(series({0.1, 0.25, 0.9, 0.25, 0.1}), 5);
  G.push(series({0.5, 1.0, 0.5}), 31);
  return G;
}

}  // namespace

TEST(Sparse, BigFloorIsExact) {
  EXPECT_EQ(big_floor(1e20), BigInt("100000000000000000000"));
  EXPECT_EQ(big_floor(-2.5), BigInt(-3));
  EXPECT_EQ(big_floor(std::ldexp(1.0, 80) + std::ldexp(1.0, 30)), (BigInt(1) << 80) + (BigInt(1) << 30));
  EXPECT_THROW(big_floor(std::numeric_limits<double>::infinity()), DomainError);
}

TEST(Sparse, FractionalProductIsExact) {
  BigInt nu = BigInt("1000000000000000000000000000007");
  BigInt r = (nu * 3) % 8;
  EXPECT_DOUBLE_EQ(frac_mul(nu, 0.375), r.convert_to<double>() / 8.0);
  EXPECT_DOUBLE_EQ(frac_mul(BigInt(7), 0.25), 0.75);
  EXPECT_DOUBLE_EQ(frac_mul(BigInt(7), -0.25), 0.25);
}

TEST(Sparse, SeparationCriterion) {
  FactoredProduct a;
  a.push(series({1.0, 1.0, 1.0, 1.0, 1.0}), 1);
  a.push(series({1.0, 1.0, 1.0}), 5);
  EXPECT_TRUE(a.separated());
  FactoredProduct b;
  b.push(series({1.0, 1.0, 1.0, 1.0, 1.0}), 1);
  b.push(series({1.0, 1.0, 1.0}), 4);
  EXPECT_FALSE(b.separated());
  EXPECT_THROW(b.norm_pow(2.0), SeparationFailure);
  EXPECT_THROW(a.push(series({1.0}), 0), DomainError);
}

TEST(Sparse, ClosedFormsMatchExpansion) {
  auto G = sample_product();
  ASSERT_TRUE(G.separated());
  auto X = G.expand();
  EXPECT_EQ(X.size(), 45u);
  for (double q : {1.0, 1.5, 2.0})
    EXPECT_NEAR(G.norm_pow(q), std::pow(coeff_norm(X, q), q), 1e-12) << q;
  EXPECT_NEAR(std::abs(G.hat0() - X.coefficient(Frequency::integer(0))), 0.0, 1e-15);
  auto d = X - TrigPoly::constant(1.0);
  EXPECT_NEAR(G.dist_to_one_pow(1.5), std::pow(coeff_norm(d, 1.5), 1.5), 1e-12);
}

TEST(Sparse, EvaluationMatchesExpansion) {
  auto G = sample_product();
  auto X = G.expand();
  for (double t : {0.0, 0.1, 0.37, 0.9})
    EXPECT_NEAR(std::abs(G.eval(t) - X.eval(t)), 0.0, 1e-12) << t;
}

TEST(Sparse, MomentsBoundExpansion) {
  auto G = sample_product();
  auto direct = moments(G.expand());
  auto m = G.moments();
  EXPECT_NEAR(m.m0, direct.m0, 1e-12);
  EXPECT_GE(m.m1, direct.m1 - 1e-9);
  EXPECT_GE(m.m2, direct.m2 - 1e-9);
}

TEST(Sparse, SpectrumWindowMatchesExpansion) {
  auto G = sample_product();
  auto X = G.expand();
  const double x = 20.0, W = 6.0;
  auto near = G.spectrum_near(x, W);
  std::vector<std::pair<std::int64_t, cplx>> want;
  for (const auto& t : X.terms())
    if (std::abs(t.freq.value() - x) <= W) want.emplace_back(t.freq.j, t.coef);
  ASSERT_EQ(near.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(near[i].first, BigInt(want[i].first));
    EXPECT_NEAR(std::abs(near[i].second - want[i].second), 0.0, 1e-15);
  }
}

TEST(Sparse, HugeDilationsStayExact) {
  FactoredProduct G;
  G.push(series({0.5, 1.0, 0.5}), BigInt(1) << 100);
  G.push(series({0.5, 1.0, 0.5}), 1);
  EXPECT_TRUE(G.separated());
  auto near = G.spectrum_near(std::ldexp(1.0, 100), 2.0);
  ASSERT_EQ(near.size(), 3u);
  EXPECT_EQ(near[1].first, BigInt(1) << 100);
  EXPECT_NEAR(near[1].second.real(), 0.5, 1e-15);
  EXPECT_THROW(G.expand(), DomainError);
}

TEST(Sparse, RelativeGapFromComponents) {
  BlockLambda a{BigInt(1) << 70, 0.25, 0, 0};
  BlockLambda b{(BigInt(1) << 70) + 3, 0.75, 0, 1};
  EXPECT_NEAR(relative_gap(a, b), 3.5 / std::ldexp(1.0, 70), 1e-30);
}

TEST(Sparse, BlockBuilderRejectsBadArguments) {
  auto bump = LineFunction(make_compact(-0.25, 0.25, [](double) { return cplx(1.0); }, 1.0 / 256));
  Weight u(bump);
  auto H = TrigPoly::monomial(Frequency::real(1.3), 1.0);
  EXPECT_THROW(lemma_sparse_blocks(u, H, 1.0, 0.3), InvalidExponent);
  EXPECT_THROW(lemma_sparse_blocks(u, H, 1.5, 0.0), DomainError);
  EXPECT_THROW(lemma_sparse_blocks(u, TrigPoly(), 1.5, 0.3), DomainError);
}

TEST(Sparse, PlainWeightTripleIsDirect) {
  auto bump = LineFunction(make_compact(-0.25, 0.25, [](double) { return cplx(1.0); }, 1.0 / 256));
  Weight u(bump);
  auto R = TrigPoly::monomial(Frequency::real(2.5), 2.0);
  EXPECT_NEAR(u.triple_times(R), triple_norm(bump.times(R)), 1e-12);
  EXPECT_EQ(u.method(), "direct");
}
