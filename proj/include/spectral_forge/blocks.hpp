#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"
#include "norms.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

// ------------------------------------------------------------------ periodic blocks

inline constexpr double kTriangleTailScale = 2000.0;

inline std::int64_t default_order(double h) {
  return static_cast<std::int64_t>(std::ceil(kTriangleTailScale / h));
}

// Fourier coefficient of the unit triangle supported on (-h, h).
inline double triangle_coeff(double h, std::int64_t n) {
  if (n == 0) return h;
  double s = std::sin(std::numbers::pi * static_cast<double>(n) * h);
  return s * s / (std::numbers::pi * std::numbers::pi * static_cast<double>(n * n) * h);
}

inline double triangle_tail(double h, std::int64_t N) {
  return 2.0 / (std::numbers::pi * std::numbers::pi * h * static_cast<double>(N));
}

// Distance from t to the nearest integer.
inline double circle_distance(double t) { return std::abs(t - std::nearbyint(t)); }

inline double triangle_value(double h, double t) {
  return std::max(0.0, 1.0 - circle_distance(t) / h);
}

inline double trapezoid_value(double h, double t) {
  return triangle_value(h, t + h) + triangle_value(h, t) + triangle_value(h, t - h);
}

inline PeriodicSeries triangle(double h, std::int64_t N = 0) {
  if (!(h > 0 && h < 0.5)) throw DomainError("triangle needs 0 < h < 1/2");
  if (N <= 0) N = default_order(h);
  std::vector<cplx> c(2 * N + 1);
  for (std::int64_t n = -N; n <= N; ++n) c[n + N] = triangle_coeff(h, n);
  return PeriodicSeries(N, std::move(c), triangle_tail(h, N));
}

inline double trapezoid_coeff(double h, std::int64_t n) {
  return triangle_coeff(h, n) * (1.0 + 2.0 * std::cos(kTwoPi * static_cast<double>(n) * h));
}

inline PeriodicSeries trapezoid(double h, std::int64_t N = 0) {
  if (!(h > 0 && h < 0.25)) throw DomainError("trapezoid needs 0 < h < 1/4");
  if (N <= 0) N = default_order(h);
  std::vector<cplx> c(2 * N + 1);
  for (std::int64_t n = -N; n <= N; ++n) c[n + N] = trapezoid_coeff(h, n);
  return PeriodicSeries(N, std::move(c), 3.0 * triangle_tail(h, N));
}

inline PeriodicSeries fejer(std::int64_t N) {
  if (N < 0) throw DomainError("Fejer order must be nonnegative");
  std::vector<cplx> c(2 * N + 1);
  for (std::int64_t n = -N; n <= N; ++n)
    c[n + N] = 1.0 - static_cast<double>(std::abs(n)) / static_cast<double>(N + 1);
  return PeriodicSeries(N, std::move(c));
}

inline double phi_coeff(double h, std::int64_t n) {
  double v = 3.0 * triangle_coeff(h, n) - ((n & 1) ? -1.0 : 1.0) * trapezoid_coeff(h, n);
  return n == 0 ? 1.0 + v : v;
}

inline double phi_value(double h, double t) {
  return 1.0 + 3.0 * triangle_value(h, t) - trapezoid_value(h, t - 0.5);
}

struct PhiCheck {
  double min_coeff = 0.0;
  double zero_inside = 0.0;
  double min_outside = 0.0;
  double series_gap = 0.0;
  std::vector<std::pair<double, double>> norm_sweep;  // (p, ||phi - 1||_p)
};

inline const std::array<double, 5>& exponent_grid() {
  static const std::array<double, 5> ps = {1.0, 1.25, 1.5, 2.0, 3.0};
  return ps;
}

inline PhiCheck check_phi(const PeriodicSeries& phi, double h) {
  PhiCheck out;
  out.min_coeff = std::numeric_limits<double>::infinity();
  for (std::int64_t n = -phi.N(); n <= phi.N(); ++n)
    out.min_coeff = std::min(out.min_coeff, phi[n].real());
  if (std::abs(phi[0] - 1.0) > 1e-12 || out.min_coeff < 0.0)
    throw PropertyViolation("itp:i coefficient check failed");

  const std::size_t M = std::max<std::size_t>(8192, detail::next_pow2(static_cast<std::size_t>(256.0 / h)));
  const double dx = 1.0 / static_cast<double>(M);
  auto vals = phi.grid_values(M);
  out.min_outside = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < M; ++m) {
    double t = static_cast<double>(m) * dx;
    double exact = phi_value(h, t);
    out.series_gap = std::max(out.series_gap, std::abs(vals[m] - exact));
    double d = std::abs(t - 0.5);
    if (d <= h)
      out.zero_inside = std::max(out.zero_inside, std::abs(exact));
    else if (d >= h + 2.0 * dx)
      out.min_outside = std::min(out.min_outside, exact);
  }
  if (out.zero_inside > 1e-12 || !(out.min_outside > 0.0))
    throw PropertyViolation("itp:ii zero set check failed");
  if (out.series_gap > phi.tail() + 1e-9)
    throw PropertyViolation("itp:ii series disagrees with pointwise values");

  auto centred = phi - PeriodicSeries::constant(1.0);
  for (double p : exponent_grid()) {
    double v = ap_norm_torus(centred, p).value;
    out.norm_sweep.emplace_back(p, v);
    if (v > 6.0 * std::pow(h, (p - 1.0) / p) + 1e-9)
      throw PropertyViolation("itp:iii norm bound failed at p = " + std::to_string(p));
  }
  return out;
}

// phi(t) = 1 + 3 Delta_h(t) - tau_h(t - 1/2)
inline PeriodicSeries phi(double h, std::int64_t N = 0, bool verify = true) {
  if (!(h > 0 && h < 1.0 / 6.0)) throw DomainError("phi needs 0 < h < 1/6");
  if (N <= 0) N = default_order(h);
  std::vector<cplx> c(2 * N + 1);
  for (std::int64_t n = -N; n <= N; ++n) c[n + N] = phi_coeff(h, n);
  PeriodicSeries s(N, std::move(c), 12.0 * triangle_tail(h, N));
  if (verify) check_phi(s, h);
  return s;
}

// ------------------------------------------------------------------ mollifier

inline double base_bump(double t) {
  double x = 2.0 * t;
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

// rho(t) = (m * m)(2t) / (m * m)(0), supported on [-1/2, 1/2], with nonnegative transform.
class Mollifier {
 public:
  static const Mollifier& instance() {
    static const Mollifier m;
    return m;
  }

  double rho(double t) const { return std::max(0.0, interp(rho_, t)); }

  // Normalized cumulative integral of rho, 0 at -1/2, 1 at 1/2.
  double cumulative(double t) const {
    if (t <= -0.5) return 0.0;
    if (t >= 0.5) return 1.0;
    return std::clamp(interp(cum_, t), 0.0, 1.0);
  }

  double integral() const { return mass_; }

  // Transform of rho from the transform of m.
  double rho_hat(double x) const {
    double mh = bump_hat(0.5 * x);
    return 0.5 * mh * mh / g0_;
  }

  static double bump_hat(double xi) {
    using G = boost::math::quadrature::gauss<double, 30>;
    const int panels = 8 + static_cast<int>(std::ceil(std::abs(xi)));
    double s = 0.0, H = 1.0 / panels;
    for (int k = 0; k < panels; ++k) {
      double a = -0.5 + k * H;
      s += G::integrate([&](double t) { return base_bump(t) * std::cos(kTwoPi * xi * t); }, a, a + H);
    }
    return s;
  }

 private:
  static constexpr int kCells = 4096;

  static double self_conv(double y) {
    using G = boost::math::quadrature::gauss<double, 30>;
    double lo = std::max(-0.5, y - 0.5), hi = std::min(0.5, y + 0.5);
    if (!(hi > lo)) return 0.0;
    const int panels = 8;
    double s = 0.0, H = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k) {
      double a = lo + k * H;
      s += G::integrate([&](double t) { return base_bump(t) * base_bump(y - t); }, a, a + H);
    }
    return s;
  }

  Mollifier() {
    g0_ = self_conv(0.0);
    rho_.resize(kCells + 1);
    for (int i = 0; i <= kCells; ++i) rho_[i] = self_conv(2.0 * node(i)) / g0_;
    rho_.front() = rho_.back() = 0.0;
    using G = boost::math::quadrature::gauss<double, 7>;
    cum_.assign(kCells + 1, 0.0);
    for (int i = 0; i < kCells; ++i)
      cum_[i + 1] = cum_[i] + G::integrate([&](double t) { return self_conv(2.0 * t) / g0_; }, node(i), node(i + 1));
    mass_ = cum_.back();
    for (auto& c : cum_) c /= mass_;
  }

  static double node(int i) { return -0.5 + static_cast<double>(i) / kCells; }

  static double interp(const std::vector<double>& tab, double t) {
    if (t <= -0.5 || t >= 0.5) return tab[t <= -0.5 ? 0 : kCells];
    double u = (t + 0.5) * kCells;
    int i0 = std::clamp(static_cast<int>(std::floor(u)) - 3, 0, kCells - 7);
    double s = 0.0;
    for (int k = 0; k < 8; ++k) {
      double w = 1.0;
      for (int m = 0; m < 8; ++m)
        if (m != k) w *= (u - (i0 + m)) / static_cast<double>(k - m);
      s += w * tab[i0 + k];
    }
    return s;
  }

  double g0_ = 1.0, mass_ = 1.0;
  std::vector<double> rho_, cum_;
};

// ------------------------------------------------------------------ line blocks

inline void check_order(double h, double h1) {
  if (!(h > 0 && h < h1 && h1 < 1)) throw DomainError("parameters must satisfy 0 < h < h' < 1");
}

inline double default_step(double h) { return h / 256.0; }

// sigma(t) = sum_{|l| <= L} (1 - |l|/(L+1)) rho((t - l)/h')
inline LineFunction sigma_bump(int L, double h, double h1) {
  check_order(h, h1);
  if (L < 0) throw DomainError("sigma bump needs L >= 0");
  const Mollifier* R = &Mollifier::instance();
  LineFunction s;
  for (int l = -L; l <= L; ++l) {
    double w = 1.0 - std::abs(l) / static_cast<double>(L + 1);
    auto b = make_compact(l - 0.5 * h1, l + 0.5 * h1,
                          [R, l, h1](double t) { return cplx(R->rho((t - l) / h1)); }, default_step(h));
    s += LineFunction(b).scaled(w);
  }
  return s;
}

// h' rho^(h' x) K_L(x), the closed form of the sigma bump transform.
inline double sigma_ft(int L, double h1, double x) {
  double K = 0.0;
  for (int l = -L; l <= L; ++l)
    K += (1.0 - std::abs(l) / static_cast<double>(L + 1)) * std::cos(kTwoPi * l * x);
  return h1 * Mollifier::instance().rho_hat(h1 * x) * K;
}

// 1 on [-inner/2, inner/2], 0 outside (-outer/2, outer/2).
inline double plateau_value(double inner, double outer, double t) {
  const auto& R = Mollifier::instance();
  double c = 0.25 * (inner + outer), w = 0.5 * (outer - inner);
  return R.cumulative((t + c) / w) - R.cumulative((t - c) / w);
}

inline CompactPtr plateau_base(double inner, double outer, double shift, double dx) {
  return make_compact(shift - 0.5 * outer, shift + 0.5 * outer,
                      [=](double t) { return cplx(plateau_value(inner, outer, t - shift)); }, dx);
}

struct Cutoffs {
  int s;
  double h, h1, h2;
  LineFunction Phi, Psi, Theta;

  double phi(double t) const { return plateau_value(h, h1, t); }
  double psi(double t) const { return plateau_value(h1, h2, t); }
  double theta(double t) const {
    double v = 0.0;
    for (int j = 0; j < s; ++j) v += phi(t - j);
    return v;
  }
};

inline Cutoffs cutoffs(int s, double h, double h1, double h2) {
  if (s < 1) throw DomainError("cutoffs need s >= 1");
  if (!(h > 0 && h < h1 && h1 < h2 && h2 < 1))
    throw DomainError("cutoffs need 0 < h < h' < h'' < 1");
  double dx = default_step(h);
  Cutoffs c{s, h, h1, h2, LineFunction(plateau_base(h, h1, 0.0, dx)),
            LineFunction(plateau_base(h1, h2, 0.0, dx)), LineFunction()};
  for (int j = 0; j < s; ++j) c.Theta += LineFunction(plateau_base(h, h1, j, dx));
  return c;
}

}  // namespace spectral_forge
