#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace spectral_forge::detail {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

// X_k = sum_j a_j e^{-2 pi i jk/n}
inline std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& a) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> out;
  fft.fwd(out, a);
  return out;
}

// a_j = sum_k X_k e^{+2 pi i jk/n}, no 1/n factor
inline std::vector<std::complex<double>> fft_backward(const std::vector<std::complex<double>>& X) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<std::complex<double>> out;
  fft.inv(out, X);
  return out;
}

// Linear convolution of two coefficient vectors.
inline std::vector<std::complex<double>> convolve(const std::vector<std::complex<double>>& a,
                                                  const std::vector<std::complex<double>>& b) {
  if (a.empty() || b.empty()) return {};
  std::size_t n = a.size() + b.size() - 1;
  if (a.size() * b.size() <= 4096) {
    std::vector<std::complex<double>> out(n, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
  }
  std::size_t m = next_pow2(n);
  std::vector<std::complex<double>> A(a), B(b);
  A.resize(m, 0.0);
  B.resize(m, 0.0);
  auto FA = fft_forward(A), FB = fft_forward(B);
  for (std::size_t i = 0; i < m; ++i) FA[i] *= FB[i] / static_cast<double>(m);
  auto c = fft_backward(FA);
  c.resize(n);
  return c;
}

}  // namespace spectral_forge::detail
