#include <gtest/gtest.h>

#include "spectral_forge/almost_integer.hpp"

using namespace spectral_forge;

namespace {

AlphaSequence alpha(std::string kind, double c) {
  AlphaSequence a;
  a.kind = std::move(kind);
  a.c = c;
  return a;
}

IntSeries sample_series(std::vector<std::int64_t> n, std::vector<cplx> c) {
  IntSeries s;
  s.n = std::move(n);
  s.c = std::move(c);
  return s;
}

PerturbedPoly sample_poly() {
  return PerturbedPoly({{3, 0.1, {1.0, 0.5}}, {7, -0.2, 2.0}, {12, 0.05, {0.0, -1.0}}});
}

}  // namespace

TEST(AlmostInteger, AlphaValues) {
  EXPECT_DOUBLE_EQ(alpha("c_over_n", 0.3)(4), 0.075);
  EXPECT_DOUBLE_EQ(alpha("c_over_sqrt_n", 0.3)(4), 0.15);
  EXPECT_DOUBLE_EQ(alpha("alternating", 0.3)(3), -0.1);
  AlphaSequence t;
  t.kind = "table";
  t.table = {0.1, -0.2};
  EXPECT_DOUBLE_EQ(t(2), -0.2);
  EXPECT_THROW(t(3), DomainError);
  EXPECT_THROW(alpha("c_over_n", 0.3)(0), DomainError);
}

TEST(AlmostInteger, SupAfterMatchesBruteForce) {
  for (const auto& a : {alpha("c_over_n", 0.3), alpha("c_over_sqrt_n", -0.2), alpha("alternating", 0.4)})
    for (std::int64_t N : {0, 1, 7, 100}) {
      double m = 0.0;
      for (std::int64_t n = N + 1; n <= N + 5000; ++n) m = std::max(m, std::abs(a(n)));
      EXPECT_DOUBLE_EQ(a.sup_after(N), m) << a.kind << " " << N;
    }
}

TEST(AlmostInteger, ThresholdMatchesLinearScan) {
  for (const auto& a : {alpha("c_over_n", 0.3), alpha("c_over_sqrt_n", 0.3)})
    for (double tau : {0.1, 0.01, 0.003})
      for (std::int64_t lo : {0, 5}) {
        std::int64_t N = lo;
        while (!(a.sup_after(N) < tau)) ++N;
        EXPECT_EQ(a.threshold(tau, lo), N) << a.kind << " " << tau << " " << lo;
      }
  EXPECT_THROW(alpha("c_over_n", 0.3).threshold(0.0, 0), ScheduleInfeasible);
}

TEST(AlmostInteger, ValidationRejectsBadSequences) {
  EXPECT_THROW(alpha("c_over_n", 0.5).validate(), DomainError);
  EXPECT_THROW(alpha("c_over_n", 0.0).validate(), DomainError);
  EXPECT_THROW(alpha("geometric", 0.1).validate(), ConfigError);
  AlphaSequence t;
  t.kind = "table";
  EXPECT_THROW(t.validate(), ConfigError);
  PerturbParams p;
  p.h1 = 0.3;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.p = 1.0;
  EXPECT_THROW(p.validate(), InvalidExponent);
}

TEST(AlmostInteger, SeriesProductIsPointwise) {
  auto a = sample_series({-2, 0, 3}, {0.5, 1.0, {0.0, 0.25}});
  auto b = sample_series({-1, 1, 4}, {2.0, -1.0, 0.5});
  a.tail = 0.01;
  auto ab = multiply(a, b, 1e6);
  for (double t : {0.0, 0.13, 0.71}) EXPECT_NEAR(std::abs(ab.eval(t) - a.eval(t) * b.eval(t)), 0.0, 1e-13);
  EXPECT_NEAR(ab.tail, 0.01 * b.l1(), 1e-15);
  EXPECT_THROW(multiply(a, b, 8), ScheduleInfeasible);
}

TEST(AlmostInteger, SeriesProductMatchesPeriodicConvolution) {
  PeriodicSeries g(2, {0.1, 0.2, 1.0, -0.3, 0.05});
  PeriodicSeries h(1, {0.5, 1.0, 0.25});
  auto ab = multiply(IntSeries::from_periodic(g), IntSeries::from_periodic(h), 1e6);
  auto gh = multiply(g, h);
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(std::abs(ab.c[i] - gh[ab.n[i]]), 0.0, 1e-15);
  EXPECT_EQ(ab.size(), 7u);
}

TEST(AlmostInteger, SeriesDilationAndSum) {
  auto a = sample_series({-1, 2}, {1.0, 0.5});
  auto d = dilate(a, 3);
  for (double t : {0.1, 0.4}) EXPECT_NEAR(std::abs(d.eval(t) - a.eval(3 * t)), 0.0, 1e-14);
  auto s = add(a, a, -1.0);
  EXPECT_EQ(s.size(), 0u);
}

TEST(AlmostInteger, PerturbedDifferenceMatchesPointwise) {
  auto P = sample_poly();
  for (int k = 0; k <= 3; ++k) {
    auto D = P.diff(k);
    for (double t : {0.0, 0.3, -1.7}) {
      cplx want = pointwise_difference([&](double x) { return P.eval(x); }, t, k);
      EXPECT_NEAR(std::abs(D.eval(t) - want), 0.0, 1e-12) << k << " " << t;
    }
  }
  EXPECT_THROW(P.diff(-1), DomainError);
}

TEST(AlmostInteger, PerturbedTranslation) {
  auto P = sample_poly();
  for (std::int64_t j : {1, -2, 5}) {
    auto T = P.translated(j);
    for (double t : {0.0, 0.45}) EXPECT_NEAR(std::abs(T.eval(t) - P.eval(t - j)), 0.0, 1e-12);
  }
}

TEST(AlmostInteger, PerturbedPolyStructure) {
  auto P = sample_poly();
  EXPECT_EQ(P.min_n(), 3);
  EXPECT_EQ(P.max_n(), 12);
  EXPECT_THROW(P.joined(PerturbedPoly({{7, 0.1, 1.0}})), DomainError);
  auto T = P.to_trigpoly();
  for (double t : {0.2, 0.9}) EXPECT_NEAR(std::abs(T.eval(t) - P.eval(t)), 0.0, 1e-12);
}

TEST(AlmostInteger, LineDifferenceMatchesPointwise) {
  auto b = make_compact(-0.3, 0.3, [](double t) { return cplx(std::cos(3 * t), t); }, 1.0 / 512);
  LineFunction u(b);
  for (int l = 0; l <= 3; ++l) {
    auto D = line_difference(u, l);
    for (double t : {-2.95, -1.1, -0.1, 0.2})
      EXPECT_NEAR(std::abs(D.value(t) - pointwise_difference([&](double x) { return u.value(x); }, t, l)), 0.0,
                  1e-12)
          << l << " " << t;
  }
}

TEST(AlmostInteger, SingleStageConstruction) {
  PerturbParams prm;
  prm.s = 1;
  prm.best_effort = true;
  auto v = interval_bumps(1, prm.h);
  auto f = [](double t) { return cplx(std::exp(-std::numbers::pi * t * t)); };
  auto r = construct_gamma_q(prm, v, f);
  ASSERT_FALSE(r.Q.empty());
  EXPECT_GT(r.Q.min_n(), prm.N);
  for (const auto& t : r.Q.terms()) EXPECT_DOUBLE_EQ(t.alpha, prm.alpha(t.n));
  EXPECT_TRUE(r.Gamma.separated());
  bool division = false;
  for (const auto& c : r.report.checks)
    if (c.name.find("coefficient division") != std::string::npos) {
      division = true;
      EXPECT_TRUE(c.pass()) << c.name << " " << c.measured;
    }
  EXPECT_TRUE(division);
  auto again = construct_gamma_q(prm, v, f);
  EXPECT_EQ(r.report.to_json().dump(), again.report.to_json().dump());
}
