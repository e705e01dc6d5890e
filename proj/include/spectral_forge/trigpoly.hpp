#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "errors.hpp"

namespace spectral_forge {

using cplx = std::complex<double>;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kRealFreqTol = 1e-12;
inline constexpr double kPruneTol = 1e-15;

// e^{2 pi i v t} with the product v*t reduced modulo 1 without losing the low bits.
inline cplx expi2pi(double v, double t) {
  double prod = v * t;
  double err = std::fma(v, t, -prod);
  double frac = prod - std::nearbyint(prod);
  double ph = kTwoPi * (frac + err);
  return {std::cos(ph), std::sin(ph)};
}

struct Frequency {
  enum class Kind { Integer, Real, Lattice };

  Kind kind = Kind::Integer;
  std::int64_t j = 0;
  std::int64_t k = 0;
  double x = 0.0;
  double base = 0.0;

  static Frequency integer(std::int64_t n) { return {Kind::Integer, n, 0, 0.0, 0.0}; }
  static Frequency real(double v) { return {Kind::Real, 0, 0, v, 0.0}; }
  static Frequency lattice(std::int64_t j_, std::int64_t k_, double a) {
    return {Kind::Lattice, j_, k_, 0.0, a};
  }

  double value() const {
    switch (kind) {
      case Kind::Integer: return static_cast<double>(j);
      case Kind::Real: return x;
      case Kind::Lattice: return static_cast<double>(j) + static_cast<double>(k) * base;
    }
    return 0.0;
  }

  const char* tag() const {
    switch (kind) {
      case Kind::Integer: return "integer";
      case Kind::Real: return "real";
      case Kind::Lattice: return "lattice";
    }
    return "";
  }

  bool is_integer() const { return kind == Kind::Integer; }

  Frequency operator-() const {
    Frequency f = *this;
    f.j = -j;
    f.k = -k;
    f.x = -x;
    return f;
  }

  std::string str() const {
    switch (kind) {
      case Kind::Integer: return std::to_string(j);
      case Kind::Real: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return buf;
      }
      case Kind::Lattice: return "(" + std::to_string(j) + "," + std::to_string(k) + ")";
    }
    return "";
  }
};

inline void check_compatible(const Frequency& a, const Frequency& b) {
  using K = Frequency::Kind;
  if (a.kind == K::Lattice && b.kind == K::Lattice && a.base != b.base)
    throw IncompatibleBase("lattice bases " + std::to_string(a.base) + " and " +
                           std::to_string(b.base));
  if ((a.kind == K::Lattice && b.kind == K::Real) || (a.kind == K::Real && b.kind == K::Lattice))
    throw IncompatibleBase("real and lattice frequencies cannot be mixed");
}

inline Frequency operator+(const Frequency& a, const Frequency& b) {
  using K = Frequency::Kind;
  check_compatible(a, b);
  if (a.kind == K::Integer && b.kind == K::Integer) return Frequency::integer(a.j + b.j);
  if (a.kind == K::Lattice || b.kind == K::Lattice) {
    double base = a.kind == K::Lattice ? a.base : b.base;
    return Frequency::lattice(a.j + b.j, a.k + b.k, base);
  }
  return Frequency::real(a.value() + b.value());
}

// Equality in the merge sense. Callers must have checked compatibility.
inline bool same_frequency(const Frequency& a, const Frequency& b) {
  using K = Frequency::Kind;
  if (a.kind == K::Lattice || b.kind == K::Lattice) {
    auto lj = [](const Frequency& f) { return f.j; };
    auto lk = [](const Frequency& f) { return f.kind == K::Lattice ? f.k : std::int64_t{0}; };
    return lj(a) == lj(b) && lk(a) == lk(b);
  }
  if (a.kind == K::Integer && b.kind == K::Integer) return a.j == b.j;
  return std::abs(a.value() - b.value()) <= kRealFreqTol;
}

struct Term {
  Frequency freq;
  cplx coef;
};

class TrigPoly {
 public:
  TrigPoly() = default;
  explicit TrigPoly(std::vector<Term> terms) : terms_(std::move(terms)) { normalize(); }

  static TrigPoly constant(cplx c) { return TrigPoly({{Frequency::integer(0), c}}); }
  static TrigPoly monomial(Frequency f, cplx c) { return TrigPoly({{f, c}}); }

  // Builds from two-sided integer coefficients c[n + N], n in [-N, N].
  static TrigPoly from_integer_coeffs(const std::vector<cplx>& c, std::int64_t N) {
    std::vector<Term> t;
    t.reserve(c.size());
    for (std::int64_t n = -N; n <= N; ++n)
      if (std::abs(c[n + N]) > kPruneTol) t.push_back({Frequency::integer(n), c[n + N]});
    TrigPoly p;
    p.terms_ = std::move(t);
    return p;
  }

  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  bool integer_spectrum() const {
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const Term& t) { return t.freq.is_integer(); });
  }

  cplx coefficient(const Frequency& f) const {
    for (const auto& t : terms_) {
      check_compatible(t.freq, f);
      if (same_frequency(t.freq, f)) return t.coef;
    }
    return 0.0;
  }

  cplx operator()(double t) const { return eval(t); }

  cplx eval(double t) const {
    cplx s = 0.0;
    for (const auto& term : terms_) s += term.coef * expi2pi(term.freq.value(), t);
    return s;
  }

 private:
  void normalize() {
    for (std::size_t i = 1; i < terms_.size(); ++i) check_compatible(terms_[0].freq, terms_[i].freq);
    std::stable_sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
      return a.freq.value() < b.freq.value();
    });
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!out.empty() && same_frequency(out.back().freq, t.freq)) {
        out.back().coef += t.coef;
        // exact representations win over a nearby real frequency
        if (out.back().freq.kind == Frequency::Kind::Real && t.freq.kind != Frequency::Kind::Real)
          out.back().freq = t.freq;
      } else {
        out.push_back(t);
      }
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const Term& t) { return std::abs(t.coef) <= kPruneTol; }),
              out.end());
    terms_ = std::move(out);
  }

  std::vector<Term> terms_;
};

inline TrigPoly add(const TrigPoly& P, const TrigPoly& Q) {
  std::vector<Term> t(P.terms());
  t.insert(t.end(), Q.terms().begin(), Q.terms().end());
  return TrigPoly(std::move(t));
}

inline TrigPoly scale(const TrigPoly& P, cplx c) {
  std::vector<Term> t(P.terms());
  for (auto& x : t) x.coef *= c;
  return TrigPoly(std::move(t));
}

inline TrigPoly sub(const TrigPoly& P, const TrigPoly& Q) { return add(P, scale(Q, -1.0)); }

inline TrigPoly mul(const TrigPoly& P, const TrigPoly& Q) {
  std::vector<Term> t;
  t.reserve(P.size() * Q.size());
  for (const auto& a : P.terms())
    for (const auto& b : Q.terms()) t.push_back({a.freq + b.freq, a.coef * b.coef});
  return TrigPoly(std::move(t));
}

inline TrigPoly operator+(const TrigPoly& a, const TrigPoly& b) { return add(a, b); }
inline TrigPoly operator-(const TrigPoly& a, const TrigPoly& b) { return sub(a, b); }
inline TrigPoly operator*(const TrigPoly& a, const TrigPoly& b) { return mul(a, b); }
inline TrigPoly operator*(cplx c, const TrigPoly& a) { return scale(a, c); }

inline TrigPoly dilate(const TrigPoly& P, std::int64_t nu) {
  if (nu <= 0) throw DomainError("dilation factor must be a positive integer");
  std::vector<Term> t;
  t.reserve(P.size());
  for (const auto& term : P.terms()) {
    if (!term.freq.is_integer())
      throw NonIntegerSpectrum("dilate needs an integer spectrum, found " + term.freq.str());
    t.push_back({Frequency::integer(term.freq.j * nu), term.coef});
  }
  return TrigPoly(std::move(t));
}

inline TrigPoly modulate(const TrigPoly& P, const Frequency& sigma) {
  std::vector<Term> t(P.terms());
  for (auto& term : t) term.freq = term.freq + sigma;
  return TrigPoly(std::move(t));
}

inline double coeff_norm(const TrigPoly& P, double p) {
  require_exponent(p);
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& t : P.terms()) m = std::max(m, std::abs(t.coef));
    return m;
  }
  double s = 0.0;
  for (const auto& t : P.terms()) s += std::pow(std::abs(t.coef), p);
  return std::pow(s, 1.0 / p);
}

inline double degree(const TrigPoly& P) {
  double d = 0.0;
  for (const auto& t : P.terms()) d = std::max(d, std::abs(t.freq.value()));
  return d;
}

// Fractional offset alpha = lambda - round_half_even(lambda).
inline double frac_offset(const Frequency& f) {
  if (f.is_integer()) return 0.0;
  double v = f.value();
  return v - std::nearbyint(v);
}

inline TrigPoly diff_op(const TrigPoly& P, int k) {
  if (k < 0) throw DomainError("difference order must be nonnegative");
  if (k == 0) return P;
  std::vector<Term> t;
  t.reserve(P.size());
  for (const auto& term : P.terms()) {
    double a = frac_offset(term.freq);
    if (a == 0.0) continue;
    cplx m = std::polar(1.0, kTwoPi * a) - 1.0;
    t.push_back({term.freq, term.coef * std::pow(m, k)});
  }
  return TrigPoly(std::move(t));
}

// Pointwise k-fold forward difference of a callable.
template <class F>
cplx pointwise_difference(F&& f, double t, int k) {
  cplx s = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    s += ((k - j) % 2 == 0 ? 1.0 : -1.0) * binom * f(t + j);
    binom = binom * (k - j) / (j + 1);
  }
  return s;
}

// ---------------------------------------------------------------- serialization

inline nlohmann::json to_json(const Frequency& f) {
  return {{"tag", f.tag()}, {"j", f.j}, {"k", f.k}, {"x", f.value()}, {"base", f.base}};
}

inline Frequency frequency_from_json(const nlohmann::json& j) {
  std::string tag = j.at("tag").get<std::string>();
  if (tag == "integer") return Frequency::integer(j.at("j").get<std::int64_t>());
  if (tag == "real") return Frequency::real(j.at("x").get<double>());
  if (tag == "lattice")
    return Frequency::lattice(j.at("j").get<std::int64_t>(), j.at("k").get<std::int64_t>(),
                              j.at("base").get<double>());
  throw ConfigError("unknown frequency tag '" + tag + "'");
}

inline nlohmann::json to_json(const TrigPoly& P) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : P.terms())
    arr.push_back({{"freq", to_json(t.freq)}, {"re", t.coef.real()}, {"im", t.coef.imag()}});
  return arr;
}

inline TrigPoly trigpoly_from_json(const nlohmann::json& arr) {
  std::vector<Term> t;
  for (const auto& e : arr)
    t.push_back({frequency_from_json(e.at("freq")), {e.at("re").get<double>(), e.at("im").get<double>()}});
  return TrigPoly(std::move(t));
}

}  // namespace spectral_forge
