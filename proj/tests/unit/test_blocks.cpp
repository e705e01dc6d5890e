#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spectral_forge/blocks.hpp"
#include "spectral_forge/fft.hpp"

using namespace spectral_forge;

namespace {

// Fourier coefficients of a 1-periodic function from M samples.
std::vector<cplx> sampled_coefficients(const std::function<double(double)>& f, std::size_t M) {
  std::vector<cplx> s(M);
  for (std::size_t m = 0; m < M; ++m) s[m] = f(static_cast<double>(m) / M);
  auto S = detail::fft_forward(s);
  for (auto& x : S) x /= static_cast<double>(M);
  return S;
}

}  // namespace

TEST(Blocks, TriangleCoefficientsMatchSampledTransform) {
  const double h = 0.1;
  auto S = sampled_coefficients([h](double t) { return triangle_value(h, t); }, 1 << 14);
  for (int n = 0; n <= 20; ++n) EXPECT_NEAR(S[n].real(), triangle_coeff(h, n), 1e-7) << n;
}

TEST(Blocks, TrapezoidCoefficientsMatchSampledTransform) {
  const double h = 0.05;
  auto S = sampled_coefficients([h](double t) { return trapezoid_value(h, t); }, 1 << 14);
  for (int n = 0; n <= 20; ++n) EXPECT_NEAR(S[n].real(), trapezoid_coeff(h, n), 1e-7) << n;
}

TEST(Blocks, TriangleAndTrapezoidMeans) {
  EXPECT_NEAR(triangle(0.2)[0].real(), 0.2, 1e-15);
  EXPECT_NEAR(trapezoid(0.05)[0].real(), 0.15, 1e-15);
  EXPECT_THROW(triangle(0.5), DomainError);
  EXPECT_THROW(trapezoid(0.3), DomainError);
}

TEST(Blocks, TriangleNormBound) {
  for (double h : {0.01, 0.1, 0.4})
    for (double p : {1.25, 2.0, 3.0})
      EXPECT_LE(ap_norm_torus(triangle(h), p).value, std::pow(h, (p - 1.0) / p) + 1e-9);
}

TEST(Blocks, FejerIsNonnegative) {
  auto K = fejer(10);
  auto g = K.grid_values(256);
  for (auto v : g) EXPECT_GE(v.real(), -1e-12);
  EXPECT_NEAR(K[0].real(), 1.0, 1e-15);
}

TEST(Blocks, PhiProperties) {
  const double h = 0.05;
  auto f = phi(h);
  EXPECT_NEAR(f[0].real(), 1.0, 1e-12);
  for (double t : {0.5, 0.5 - 0.9 * h, 0.5 + 0.5 * h}) EXPECT_NEAR(phi_value(h, t), 0.0, 1e-14);
  EXPECT_GT(phi_value(h, 0.1), 0.0);
  EXPECT_NEAR(std::abs(f.eval(0.1) - phi_value(h, 0.1)), 0.0, f.tail() + 1e-12);
  EXPECT_THROW(phi(0.2), DomainError);
}

TEST(Blocks, MollifierTransformMatchesQuadrature) {
  const auto& R = Mollifier::instance();
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  for (double x : {0.0, 1.0, 4.5}) {
    double q = GK::integrate([&](double t) { return R.rho(t) * std::cos(kTwoPi * x * t); }, -0.5, 0.5, 15, 1e-12);
    EXPECT_NEAR(R.rho_hat(x), q, 1e-8) << x;
    EXPECT_GE(R.rho_hat(x), 0.0);
  }
  EXPECT_NEAR(R.rho(0.0), 1.0, 1e-12);
  EXPECT_EQ(R.rho(0.6), 0.0);
}

TEST(Blocks, SigmaBumpTransform) {
  auto s = sigma_bump(1, 0.4, 0.6);
  for (double x : {0.0, 0.5, 2.25, 7.0}) {
    EXPECT_NEAR(s.ft(x).real(), sigma_ft(1, 0.6, x), 1e-8) << x;
    EXPECT_GE(sigma_ft(1, 0.6, x), -1e-14);
  }
  EXPECT_EQ(s.value(0.5).real(), 0.0);
  EXPECT_THROW(sigma_bump(1, 0.6, 0.4), DomainError);
}

TEST(Blocks, CutoffIdentities) {
  auto C = cutoffs(3, 0.4, 0.55, 0.7);
  for (double t = -0.5; t <= 0.5; t += 1e-3) {
    EXPECT_NEAR(C.psi(t) * C.phi(t), C.phi(t), 1e-12);
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(C.psi(t) * C.theta(t + j), C.phi(t), 1e-12);
  }
  EXPECT_NEAR(C.phi(0.19), 1.0, 1e-12);
  EXPECT_EQ(C.phi(0.3), 0.0);
  EXPECT_NEAR(C.psi(0.27), 1.0, 1e-12);
  EXPECT_THROW(cutoffs(0, 0.4, 0.5, 0.6), DomainError);
}
