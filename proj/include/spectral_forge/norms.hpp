#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "errors.hpp"
#include "fft.hpp"
#include "trigpoly.hpp"

namespace spectral_forge {

struct NormValue {
  double value = 0.0;
  double uncertainty = 0.0;
  double upper() const { return value + uncertainty; }
};

// ------------------------------------------------------------------ PeriodicSeries

class PeriodicSeries {
 public:
  PeriodicSeries() : N_(0), c_(1, 0.0) {}
  PeriodicSeries(std::int64_t N, std::vector<cplx> c, double tail = 0.0)
      : N_(N), c_(std::move(c)), tail_(tail) {
    if (N_ < 0 || c_.size() != static_cast<std::size_t>(2 * N_ + 1))
      throw DomainError("PeriodicSeries needs 2N+1 coefficients");
    if (tail_ < 0) throw DomainError("negative tail certificate");
  }

  static PeriodicSeries constant(cplx c) { return PeriodicSeries(0, {c}); }

  static PeriodicSeries from_trigpoly(const TrigPoly& P) {
    std::int64_t N = 0;
    for (const auto& t : P.terms()) {
      if (!t.freq.is_integer()) throw NonIntegerSpectrum("series from " + t.freq.str());
      N = std::max<std::int64_t>(N, std::abs(t.freq.j));
    }
    std::vector<cplx> c(2 * N + 1, 0.0);
    for (const auto& t : P.terms()) c[t.freq.j + N] = t.coef;
    return PeriodicSeries(N, std::move(c));
  }

  std::int64_t N() const { return N_; }
  const std::vector<cplx>& coeffs() const { return c_; }
  double tail() const { return tail_; }

  cplx operator[](std::int64_t n) const {
    return (n < -N_ || n > N_) ? cplx(0.0) : c_[n + N_];
  }

  TrigPoly to_trigpoly() const { return TrigPoly::from_integer_coeffs(c_, N_); }

  cplx eval(double t) const {
    cplx s = 0.0;
    for (std::int64_t n = -N_; n <= N_; ++n)
      if (c_[n + N_] != 0.0) s += c_[n + N_] * expi2pi(static_cast<double>(n), t);
    return s;
  }

  // Exact values at t = m/M (coefficients folded modulo M).
  std::vector<cplx> grid_values(std::size_t M) const {
    std::vector<cplx> bins(M, 0.0);
    auto mm = static_cast<std::int64_t>(M);
    for (std::int64_t n = -N_; n <= N_; ++n) {
      std::int64_t r = ((n % mm) + mm) % mm;
      bins[r] += c_[n + N_];
    }
    return detail::fft_backward(bins);
  }

  double l1() const {
    double s = 0.0;
    for (auto c : c_) s += std::abs(c);
    return s;
  }

  PeriodicSeries truncated(std::int64_t N) const {
    if (N >= N_) return *this;
    double extra = 0.0;
    for (std::int64_t n = -N_; n <= N_; ++n)
      if (std::abs(n) > N) extra += std::abs(c_[n + N_]);
    std::vector<cplx> c(c_.begin() + (N_ - N), c_.begin() + (N_ + N + 1));
    return PeriodicSeries(N, std::move(c), tail_ + extra);
  }

  PeriodicSeries with_tail(double t) const { return PeriodicSeries(N_, c_, t); }

  // Coefficients of t -> f(t - s).
  PeriodicSeries shifted(double s) const {
    std::vector<cplx> c(c_);
    for (std::int64_t n = -N_; n <= N_; ++n) c[n + N_] *= expi2pi(-static_cast<double>(n), s);
    return PeriodicSeries(N_, std::move(c), tail_);
  }

 private:
  std::int64_t N_;
  std::vector<cplx> c_;
  double tail_ = 0.0;
};

inline PeriodicSeries operator+(const PeriodicSeries& a, const PeriodicSeries& b) {
  std::int64_t N = std::max(a.N(), b.N());
  std::vector<cplx> c(2 * N + 1, 0.0);
  for (std::int64_t n = -N; n <= N; ++n) c[n + N] = a[n] + b[n];
  return PeriodicSeries(N, std::move(c), a.tail() + b.tail());
}

inline PeriodicSeries operator*(cplx s, const PeriodicSeries& a) {
  std::vector<cplx> c(a.coeffs());
  for (auto& x : c) x *= s;
  return PeriodicSeries(a.N(), std::move(c), std::abs(s) * a.tail());
}

inline PeriodicSeries operator-(const PeriodicSeries& a, const PeriodicSeries& b) {
  return a + cplx(-1.0) * b;
}

inline PeriodicSeries multiply(const PeriodicSeries& a, const PeriodicSeries& b) {
  auto c = detail::convolve(a.coeffs(), b.coeffs());
  double tail = a.l1() * b.tail() + b.l1() * a.tail() + a.tail() * b.tail();
  return PeriodicSeries(a.N() + b.N(), std::move(c), tail);
}

inline NormValue ap_norm_torus(const PeriodicSeries& f, double p) {
  require_exponent(p);
  double v;
  if (std::isinf(p)) {
    v = 0.0;
    for (auto c : f.coeffs()) v = std::max(v, std::abs(c));
  } else {
    double s = 0.0;
    for (auto c : f.coeffs()) s += std::pow(std::abs(c), p);
    v = std::pow(s, 1.0 / p);
  }
  return {v, f.tail()};
}

// ------------------------------------------------------------------ CompactFunction

// A function supported on [lo, hi], sampled on a uniform grid, with a tabulated
// Fourier transform  u^(x) = int u(t) e^{-2 pi i x t} dt.
class CompactFunction {
 public:
  using Fn = std::function<cplx(double)>;

  CompactFunction(double lo, double hi, Fn f, double dx, bool smooth = true)
      : lo_(lo), hi_(hi), f_(std::move(f)), smooth_(smooth) {
    if (!(hi > lo)) throw DomainError("empty support");
    if (!(dx > 0)) throw DomainError("grid step must be positive");
    n_ = std::max<std::size_t>(16, static_cast<std::size_t>(std::ceil((hi - lo) / dx)));
    dx_ = (hi - lo) / static_cast<double>(n_);
    samples_.resize(n_ + 1);
    for (std::size_t i = 0; i <= n_; ++i) samples_[i] = f_(lo_ + static_cast<double>(i) * dx_);
    build_table();
    measure();
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double dx() const { return dx_; }
  double length() const { return hi_ - lo_; }
  bool smooth() const { return smooth_; }
  const std::vector<cplx>& samples() const { return samples_; }

  cplx value(double t) const { return (t < lo_ || t > hi_) ? cplx(0.0) : f_(t); }
  cplx operator()(double t) const { return value(t); }

  // Fourier transform by trapezoid quadrature over the samples.
  cplx ft_direct(double x) const {
    cplx rot = expi2pi(-x, dx_);
    cplx ph = expi2pi(-x, lo_);
    cplx s = 0.5 * samples_[0] * ph;
    for (std::size_t i = 1; i < n_; ++i) {
      ph *= rot;
      if ((i & 63) == 0) ph = expi2pi(-x, lo_ + static_cast<double>(i) * dx_);
      s += samples_[i] * ph;
    }
    s += 0.5 * samples_[n_] * expi2pi(-x, hi_);
    return s * dx_;
  }

  cplx ft(double x) const {
    if (std::abs(x) <= xlim_) return ft_table(x);
    return ft_direct(x);
  }

  // Range of |x| served by the interpolation table.
  double table_limit() const { return xlim_; }
  double table_step() const { return step_; }

  double l1() const { return l1_; }
  double d2_l1() const { return d2_; }
  double d4_l1() const { return d4_; }

  // M with |u^(x)| <= M / (1 + x^2).
  std::optional<double> decay_bound() const {
    if (!smooth_) return std::nullopt;
    return l1_ + d2_ / (4.0 * std::numbers::pi * std::numbers::pi);
  }

  // Bound on ( int_{|y| > X} |u^(y)|^p dy )^{1/p}.
  double lp_tail(double X, double p) const {
    auto M = decay_bound();
    if (!M) throw NoDecayBound("function has no decay bound");
    double t1 = *M * std::pow(2.0 * std::pow(X, 1.0 - 2.0 * p) / (2.0 * p - 1.0), 1.0 / p);
    double c4 = d4_ / (16.0 * std::pow(std::numbers::pi, 4));
    double t2 = c4 * std::pow(2.0 * std::pow(X, 1.0 - 4.0 * p) / (4.0 * p - 1.0), 1.0 / p);
    return std::min(t1, t2);
  }

  // Bound on sup_{|y| >= X} (1 + y^2) |u^(y)|.
  double weighted_tail(double X) const {
    auto M = decay_bound();
    if (!M) throw NoDecayBound("function has no decay bound");
    double c2 = d2_ / (4.0 * std::numbers::pi * std::numbers::pi);
    double c4 = d4_ / (16.0 * std::pow(std::numbers::pi, 4));
    return std::min({*M, (1.0 + 1.0 / (X * X)) * c2, (1.0 / (X * X) + std::pow(X, -4)) * c4});
  }

 private:
  void build_table() {
    std::size_t npad = detail::next_pow2(16 * (n_ + 1));
    std::vector<cplx> a(npad, 0.0);
    for (std::size_t i = 0; i <= n_; ++i) a[i] = samples_[i];
    a[0] *= 0.5;
    a[n_] *= 0.5;
    auto S = detail::fft_forward(a);
    step_ = 1.0 / (static_cast<double>(npad) * dx_);
    half_ = static_cast<std::int64_t>(npad / 4);
    double c = 0.5 * (hi_ - lo_);
    table_.resize(2 * half_ + 1);
    auto np = static_cast<std::int64_t>(npad);
    for (std::int64_t m = -half_; m <= half_; ++m) {
      double x = static_cast<double>(m) * step_;
      table_[m + half_] = dx_ * S[((m % np) + np) % np] * expi2pi(x, c);
    }
    xlim_ = static_cast<double>(half_ - 8) * step_;
  }

  // Demodulated 8-point Lagrange interpolation on the uniform table.
  cplx ft_table(double x) const {
    double u = x / step_;
    auto i0 = static_cast<std::int64_t>(std::floor(u)) - 3;
    double prod = 1.0;
    bool hit = false;
    std::int64_t hit_idx = 0;
    for (int k = 0; k < 8; ++k) {
      double d = u - static_cast<double>(i0 + k);
      if (d == 0.0) {
        hit = true;
        hit_idx = i0 + k;
      }
      prod *= d;
    }
    cplx D;
    if (hit) {
      D = table_[hit_idx + half_];
    } else {
      static const double w[8] = {-1.0 / 5040, 1.0 / 720, -1.0 / 240, 1.0 / 144,
                                  -1.0 / 144, 1.0 / 240, -1.0 / 720, 1.0 / 5040};
      D = 0.0;
      for (int k = 0; k < 8; ++k)
        D += table_[i0 + k + half_] * (w[k] / (u - static_cast<double>(i0 + k)));
      D *= prod;
    }
    return D * expi2pi(-x, lo_ + 0.5 * (hi_ - lo_));
  }

  void measure() {
    l1_ = 0.0;
    for (std::size_t i = 0; i <= n_; ++i) l1_ += std::abs(samples_[i]) * dx_;
    auto s = [&](std::int64_t i) -> cplx {
      return (i < 0 || i > static_cast<std::int64_t>(n_)) ? cplx(0.0) : samples_[i];
    };
    d2_ = d4_ = 0.0;
    auto n = static_cast<std::int64_t>(n_);
    for (std::int64_t i = -2; i <= n + 2; ++i) {
      d2_ += std::abs(s(i + 1) - 2.0 * s(i) + s(i - 1));
      d4_ += std::abs(s(i + 2) - 4.0 * s(i + 1) + 6.0 * s(i) - 4.0 * s(i - 1) + s(i - 2));
    }
    d2_ /= dx_;
    d4_ /= dx_ * dx_ * dx_;
  }

  double lo_, hi_;
  Fn f_;
  bool smooth_;
  std::size_t n_ = 0;
  double dx_ = 0.0;
  std::vector<cplx> samples_;
  std::vector<cplx> table_;
  std::int64_t half_ = 0;
  double step_ = 0.0, xlim_ = 0.0;
  double l1_ = 0.0, d2_ = 0.0, d4_ = 0.0;
};

using CompactPtr = std::shared_ptr<const CompactFunction>;

inline CompactPtr make_compact(double lo, double hi, CompactFunction::Fn f, double dx,
                               bool smooth = true) {
  return std::make_shared<const CompactFunction>(lo, hi, std::move(f), dx, smooth);
}

// ------------------------------------------------------------------ LineFunction

// u(t) = sum_i b_i(t) T_i(t), b_i compactly supported, T_i trigonometric polynomials.
class LineFunction {
 public:
  struct Piece {
    CompactPtr base;
    TrigPoly mult;
  };
  struct Tail {
    double weight;
    std::shared_ptr<const LineFunction> ref;
  };

  LineFunction() = default;
  explicit LineFunction(CompactPtr b) { pieces_.push_back({std::move(b), TrigPoly::constant(1.0)}); }
  LineFunction(CompactPtr b, TrigPoly m) { pieces_.push_back({std::move(b), std::move(m)}); }

  const std::vector<Piece>& pieces() const { return pieces_; }
  const std::vector<Tail>& tails() const { return tails_; }
  bool is_zero() const { return pieces_.empty(); }

  std::pair<double, double> support() const {
    if (pieces_.empty()) return {0.0, 0.0};
    double lo = pieces_[0].base->lo(), hi = pieces_[0].base->hi();
    for (const auto& p : pieces_) {
      lo = std::min(lo, p.base->lo());
      hi = std::max(hi, p.base->hi());
    }
    return {lo, hi};
  }

  double grid_step() const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : pieces_) d = std::min(d, p.base->dx());
    return d;
  }

  cplx value(double t) const {
    cplx s = 0.0;
    for (const auto& p : pieces_) {
      cplx b = p.base->value(t);
      if (b != 0.0) s += b * p.mult.eval(t);
    }
    return s;
  }
  cplx operator()(double t) const { return value(t); }

  std::vector<cplx> samples() const {
    auto [lo, hi] = support();
    double dx = grid_step();
    std::vector<cplx> s;
    if (pieces_.empty()) return s;
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / dx));
    s.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) s.push_back(value(lo + (hi - lo) * i / n));
    return s;
  }

  cplx ft(double x) const {
    cplx s = 0.0;
    for (const auto& p : pieces_)
      for (const auto& t : p.mult.terms()) s += t.coef * p.base->ft(x - t.freq.value());
    return s;
  }

  std::optional<double> decay_bound() const {
    double M = 0.0;
    for (const auto& p : pieces_) {
      auto m = p.base->decay_bound();
      if (!m) return std::nullopt;
      for (const auto& t : p.mult.terms()) {
        double l = t.freq.value();
        M += std::abs(t.coef) * 2.0 * (1.0 + l * l) * *m;
      }
    }
    return M;
  }

  LineFunction& operator+=(const LineFunction& o) {
    for (const auto& q : o.pieces_) {
      auto it = std::find_if(pieces_.begin(), pieces_.end(),
                             [&](const Piece& p) { return p.base == q.base; });
      if (it != pieces_.end())
        it->mult = it->mult + q.mult;
      else
        pieces_.push_back(q);
    }
    tails_.insert(tails_.end(), o.tails_.begin(), o.tails_.end());
    return *this;
  }

  LineFunction scaled(cplx c) const {
    LineFunction r = *this;
    for (auto& p : r.pieces_) p.mult = scale(p.mult, c);
    for (auto& t : r.tails_) t.weight *= std::abs(c);
    return r;
  }

  LineFunction times(const TrigPoly& T) const {
    LineFunction r;
    for (const auto& p : pieces_) r.pieces_.push_back({p.base, p.mult * T});
    double l1 = coeff_norm(T, 1.0);
    for (const auto& t : tails_) r.tails_.push_back({t.weight * l1, t.ref});
    return r;
  }

  void add_tail(double weight, std::shared_ptr<const LineFunction> ref) {
    if (weight > 0) tails_.push_back({weight, std::move(ref)});
  }

 private:
  std::vector<Piece> pieces_;
  std::vector<Tail> tails_;
};

inline LineFunction operator+(LineFunction a, const LineFunction& b) { return a += b; }
inline LineFunction operator-(LineFunction a, const LineFunction& b) { return a += b.scaled(-1.0); }

// Pointwise product of two line functions.
inline LineFunction multiply(const LineFunction& a, const LineFunction& b) {
  LineFunction r;
  for (const auto& p : a.pieces())
    for (const auto& q : b.pieces()) {
      double lo = std::max(p.base->lo(), q.base->lo());
      double hi = std::min(p.base->hi(), q.base->hi());
      if (!(hi > lo)) continue;
      auto f1 = p.base, f2 = q.base;
      auto base = make_compact(
          lo, hi, [f1, f2](double t) { return f1->value(t) * f2->value(t); },
          std::min(f1->dx(), f2->dx()), f1->smooth() && f2->smooth());
      r += LineFunction(base, p.mult * q.mult);
    }
  for (const auto& t : a.tails())
    r.add_tail(t.weight, std::make_shared<const LineFunction>(multiply(*t.ref, b)));
  for (const auto& t : b.tails())
    r.add_tail(t.weight, std::make_shared<const LineFunction>(multiply(a, *t.ref)));
  return r;
}

// ------------------------------------------------------------------ line norms

namespace detail {

struct ShiftList {
  const CompactFunction* base;
  std::vector<double> lam;
  std::vector<cplx> amp;
};

inline std::vector<ShiftList> shift_lists(const LineFunction& u) {
  std::vector<ShiftList> out;
  for (const auto& p : u.pieces()) {
    ShiftList s{p.base.get(), {}, {}};
    for (const auto& t : p.mult.terms()) {
      s.lam.push_back(t.freq.value());
      s.amp.push_back(t.coef);
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Visits a uniform grid covering the union of windows [lambda - X, lambda + X].
template <class Visit>
void sweep_windows(const std::vector<ShiftList>& lists, double X, double step, Visit&& visit) {
  std::vector<std::pair<double, double>> iv;
  for (const auto& s : lists)
    for (double l : s.lam) iv.emplace_back(l - X, l + X);
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& w : iv) {
    if (!merged.empty() && w.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, w.second);
    else
      merged.push_back(w);
  }
  for (const auto& [a, b] : merged) {
    auto n = static_cast<std::int64_t>(std::ceil((b - a) / step));
    for (std::int64_t i = 0; i <= n; ++i) {
      double x = a + static_cast<double>(i) * step;
      cplx F = 0.0;
      for (const auto& s : lists) {
        auto lo = std::lower_bound(s.lam.begin(), s.lam.end(), x - X);
        auto hi = std::upper_bound(lo, s.lam.end(), x + X);
        for (auto it = lo; it != hi; ++it) {
          auto k = static_cast<std::size_t>(it - s.lam.begin());
          F += s.amp[k] * s.base->ft(x - *it);
        }
      }
      visit(x, F, (i == 0 || i == n) ? 0.5 * step : step);
    }
  }
}

inline double max_length(const LineFunction& u) {
  double S = 0.0;
  for (const auto& p : u.pieces()) S = std::max(S, p.base->length());
  return S;
}

inline double table_cap(const LineFunction& u) {
  double c = std::numeric_limits<double>::infinity();
  for (const auto& p : u.pieces()) c = std::min(c, p.base->table_limit());
  return c;
}

}  // namespace detail

inline cplx ft_compact(const LineFunction& u, double x) {
  if (u.is_zero()) throw DomainError("ft of a function with empty support");
  return u.ft(x);
}

inline constexpr double kDefaultWindow = 64.0;

inline NormValue ap_norm_line(const LineFunction& u, double p, double X = kDefaultWindow) {
  require_exponent(p);
  if (std::isinf(p)) throw InvalidExponent("line norms need finite p");
  if (!(X > 0)) throw DomainError("window must be positive");
  NormValue out{0.0, 0.0};
  if (!u.is_zero()) {
    if (!u.decay_bound()) throw NoDecayBound("A^p(R) tail needs a decay bound");
    auto lists = detail::shift_lists(u);
    double cap = detail::table_cap(u);
    double step = 1.0 / (8.0 * detail::max_length(u));
    for (double W = std::min(X, cap);; W = std::min(2.0 * W, cap)) {
      double acc = 0.0;
      detail::sweep_windows(lists, W, step, [&](double, cplx F, double w) {
        acc += std::pow(std::abs(F), p) * w;
      });
      double tail = 0.0;
      for (const auto& s : lists) {
        double a = 0.0;
        for (auto c : s.amp) a += std::abs(c);
        tail += a * s.base->lp_tail(W, p);
      }
      out.value = std::pow(acc, 1.0 / p);
      out.uncertainty = tail;
      if (tail <= 1e-8 * out.value || W >= cap) break;
    }
  }
  for (const auto& t : u.tails()) out.uncertainty += t.weight * ap_norm_line(*t.ref, p, X).upper();
  return out;
}

// 10 sup (1 + x^2) |u^(x)|, probe-grid supremum plus a certified remainder.
inline double triple_norm(const LineFunction& u) {
  if (u.is_zero()) return 0.0;
  if (!u.decay_bound()) throw NoDecayBound("triple norm needs a decay bound");
  auto lists = detail::shift_lists(u);
  double W = detail::table_cap(u);
  double step = 1.0 / (8.0 * detail::max_length(u));
  double sup = 0.0;
  detail::sweep_windows(lists, W, step, [&](double x, cplx F, double) {
    sup = std::max(sup, (1.0 + x * x) * std::abs(F));
  });
  double rem = 0.0;
  for (const auto& s : lists) {
    double r = s.base->weighted_tail(W);
    for (std::size_t k = 0; k < s.lam.size(); ++k)
      rem += std::abs(s.amp[k]) * 2.0 * (1.0 + s.lam[k] * s.lam[k]) * r;
  }
  double t = 10.0 * (sup + rem);
  for (const auto& tl : u.tails()) t += tl.weight * triple_norm(*tl.ref);
  return t;
}

inline LineFunction product_line_periodic(const LineFunction& u, const PeriodicSeries& f) {
  LineFunction r = u.times(f.to_trigpoly());
  if (f.tail() > 0) r.add_tail(f.tail(), std::make_shared<const LineFunction>(u));
  return r;
}

// ------------------------------------------------------------------ Landau sets

struct LandauSet {
  int L = 0;
  double h = 0.5;

  LandauSet() = default;
  LandauSet(int L_, double h_) : L(L_), h(h_) {
    if (L < 0) throw DomainError("Landau set needs L >= 0");
    if (!(h > 0 && h < 1)) throw DomainError("Landau set needs 0 < h < 1");
  }

  std::vector<std::pair<double, double>> intervals() const {
    std::vector<std::pair<double, double>> iv;
    for (int l = -L; l <= L; ++l) iv.emplace_back(l - 0.5 * h, l + 0.5 * h);
    return iv;
  }

  bool contains(double t) const {
    double l = std::nearbyint(t);
    return std::abs(l) <= L && std::abs(t - l) <= 0.5 * h;
  }

  double measure() const { return (2 * L + 1) * h; }
};

// ------------------------------------------------------------------ completeness residual

struct ResidualReport {
  std::string freqs_digest;
  int L = 0;
  double h = 0.0;
  double residual = 1.0;
  double condition = 0.0;

  nlohmann::json to_json() const {
    return {{"freqs_digest", freqs_digest}, {"L", L}, {"h", h}, {"residual", residual},
            {"condition", condition}};
  }
};

inline std::string frequency_digest(const std::vector<Frequency>& freqs) {
  std::uint64_t hsh = 1469598103934665603ULL;
  for (const auto& f : freqs) {
    std::string s = std::string(f.tag()) + ":" + f.str() + ";";
    for (unsigned char c : s) {
      hsh ^= c;
      hsh *= 1099511628211ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hsh));
  return buf;
}

inline constexpr double kGramRegularization = 1e-12;
inline constexpr double kGramConditionLimit = 1e14;

// Composite Gauss-Legendre nodes and weights on [a, b].
inline void gauss_nodes(double a, double b, std::size_t panels, std::vector<double>& t,
                        std::vector<double>& w) {
  using G = boost::math::quadrature::gauss<double, 20>;
  const auto& xs = G::abscissa();
  const auto& ws = G::weights();
  double H = (b - a) / static_cast<double>(panels);
  for (std::size_t k = 0; k < panels; ++k) {
    double c = a + (static_cast<double>(k) + 0.5) * H;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double half = 0.5 * H;
      if (xs[i] == 0.0) {
        t.push_back(c);
        w.push_back(ws[i] * half);
      } else {
        t.push_back(c - xs[i] * half);
        w.push_back(ws[i] * half);
        t.push_back(c + xs[i] * half);
        w.push_back(ws[i] * half);
      }
    }
  }
}

inline ResidualReport completeness_residual(const std::vector<Frequency>& freqs,
                                            const LandauSet& omega,
                                            const std::function<cplx(double)>& target) {
  if (freqs.empty()) throw DomainError("completeness residual needs frequencies");
  const auto M = static_cast<Eigen::Index>(freqs.size());
  std::vector<double> lam(freqs.size());
  double lmax = 1.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    lam[i] = freqs[i].value();
    lmax = std::max(lmax, std::abs(lam[i]));
  }

  Eigen::MatrixXcd G(M, M);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < M; ++j) {
      double D = lam[j] - lam[i];
      double s = std::abs(D) < 1e-300 ? omega.h
                                      : std::sin(std::numbers::pi * D * omega.h) / (std::numbers::pi * D);
      cplx acc = 0.0;
      for (int l = -omega.L; l <= omega.L; ++l) acc += expi2pi(D, static_cast<double>(l));
      G(i, j) = acc * s;
    }

  std::vector<double> t, w;
  auto panels = static_cast<std::size_t>(std::max(8.0, std::ceil(omega.h * lmax)));
  for (const auto& [a, b] : omega.intervals()) gauss_nodes(a, b, panels, t, w);
  std::vector<cplx> f(t.size());
  double fnorm2 = 0.0;
  for (std::size_t q = 0; q < t.size(); ++q) {
    f[q] = target(t[q]);
    fnorm2 += w[q] * std::norm(f[q]);
  }
  Eigen::VectorXcd b(M);
  for (Eigen::Index i = 0; i < M; ++i) {
    cplx s = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) s += w[q] * f[q] * expi2pi(-lam[i], t[q]);
    b(i) = s;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(G);
  const auto& ev = es.eigenvalues();
  double mu = kGramRegularization * G.diagonal().real().mean();
  double lmin = std::max(ev.minCoeff(), 0.0);
  double cond = ev.maxCoeff() / (lmin + mu);

  ResidualReport rep;
  rep.freqs_digest = frequency_digest(freqs);
  rep.L = omega.L;
  rep.h = omega.h;
  rep.condition = cond;
  if (cond > kGramConditionLimit)
    throw GramIllConditioned("condition estimate " + std::to_string(cond));
  if (fnorm2 <= 0.0) {
    rep.residual = 0.0;
    return rep;
  }
  Eigen::VectorXcd y = es.eigenvectors().adjoint() * b;
  for (Eigen::Index i = 0; i < M; ++i) y(i) /= (std::max(ev(i), 0.0) + mu);
  Eigen::VectorXcd c = es.eigenvectors() * y;
  double r2 = fnorm2 - 2.0 * std::real(c.dot(b)) + std::real(c.dot(G * c));
  rep.residual = std::clamp(std::sqrt(std::max(r2, 0.0) / fnorm2), 0.0, 1.0);
  return rep;
}

// ------------------------------------------------------------------ I0 certificate

struct I0Certificate {
  double max_residual = 0.0;
  int J = 3;
  int Nmax = 0;
};

// Max of |phi^{(j)}(n + 1/2)|, j <= J, |n| <= Nmax, via 5-point central differences.
inline I0Certificate i0_certificate(const std::function<cplx(double)>& phi, double dx, int J = 3,
                                    int Nmax = 1) {
  if (J > 3) throw DomainError("5-point stencils cover derivative orders up to 3");
  I0Certificate c{0.0, J, Nmax};
  for (int n = -Nmax - 1; n <= Nmax; ++n) {
    double t = n + 0.5;
    cplx f2 = phi(t + 2 * dx), f1 = phi(t + dx), f0 = phi(t), g1 = phi(t - dx), g2 = phi(t - 2 * dx);
    double d[4] = {std::abs(f0), std::abs((-f2 + 8.0 * f1 - 8.0 * g1 + g2) / (12.0 * dx)),
                   std::abs((-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * g1 - g2) / (12.0 * dx * dx)),
                   std::abs((f2 - 2.0 * f1 + 2.0 * g1 - g2) / (2.0 * dx * dx * dx))};
    for (int j = 0; j <= J; ++j) c.max_residual = std::max(c.max_residual, d[j]);
  }
  return c;
}

}  // namespace spectral_forge
